#pragma once

#include "aca/audio.hpp"
#include "aca/signal.hpp"

#include <string>
#include <vector>

namespace aca {

enum class NoveltySource { envelope, rms, spectral_flux };

const char* novelty_source_name(NoveltySource source);
NoveltySource novelty_source_from_name(const std::string& name);

/// Rectified, smoothed derivative of a per-frame feature. Frame k sits at
/// time_offset + k / frame_rate (frame centers).
struct NoveltyCurve {
    std::vector<double> values;
    double frame_rate = 0.0; // frames per second
    double time_offset = 0.0;

    double time_of(std::size_t frame) const {
        return time_offset + static_cast<double>(frame) / frame_rate;
    }
    double duration() const {
        return values.empty() ? 0.0 : time_of(values.size() - 1);
    }
};

struct OnsetList {
    std::vector<double> times;     // s, strictly increasing
    std::vector<double> strengths; // novelty values at the peaks
};

struct TempoCandidate {
    double bpm = 0.0;
    double strength = 0.0;
};

struct TempoEstimate {
    double bpm = 0.0;
    double periodicity_strength = 0.0;
    std::vector<TempoCandidate> candidates; // ranked best-first
};

struct BeatGrid {
    std::vector<double> beat_times; // s, strictly increasing
    std::vector<double> bpm_track;  // local tempo per beat
};

/// Feature -> time derivative -> half-wave rectification -> moving average.
/// smoothing_length 1 disables the final lowpass.
NoveltyCurve novelty(const AudioBuffer& buffer, const BlockSpec& spec,
                     NoveltySource source = NoveltySource::spectral_flux,
                     std::size_t smoothing_length = 5);

/// Local maxima above threshold_ratio * max(curve); peaks closer than
/// min_distance collapse to the stronger one (earlier wins ties).
OnsetList pick_onsets(const NoveltyCurve& curve, double threshold_ratio = 0.1,
                      double min_distance = 0.05);

struct TempoRange {
    double bpm_min = 60.0;
    double bpm_max = 180.0;
};

/// Autocorrelation of the mean-removed novelty curve; the winning lag is
/// refined by parabolic interpolation.
TempoEstimate tempo_acf(const NoveltyCurve& curve, TempoRange range = {});

/// Feedback comb resonator bank (y[n] = x[n] + alpha y[n-D]); the grid tempo
/// whose resonator collects the most output energy wins.
TempoEstimate tempo_comb(const NoveltyCurve& curve, const std::vector<double>& bpm_grid,
                         double feedback_gain = 0.9);

std::vector<double> default_bpm_grid(TempoRange range = {}, double step = 1.0);

/// Inter-onset-interval histogram with bins centered on multiples of
/// bin_width; the modal interval wins, ties preferring the faster tempo.
TempoEstimate tempo_ioi(const OnsetList& onsets, TempoRange range = {},
                        double bin_width = 0.01);

struct BeatTrackerParams {
    double snap_window_fraction = 1.0 / 8.0; // of the beat period
    double adaptation_rate = 0.1;
    TempoRange range{};
};

/// Adaptive oscillator: predicts beats one period ahead from the strongest
/// onset, snaps to nearby onsets, and nudges the period by the prediction
/// error. Runs forward and backward from the anchor to cover the curve.
BeatGrid track_beats(const NoveltyCurve& curve, const OnsetList& onsets,
                     const TempoEstimate& tempo, BeatTrackerParams params = {});

} // namespace aca
