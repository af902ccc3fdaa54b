#pragma once

#include "aca/audio.hpp"
#include "aca/signal.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace aca {

/// Octave-folded pitch-class energies, C = 0 .. B = 11.
using ChromaVector = std::array<double, 12>;

struct ChromaSequence {
    std::vector<ChromaVector> frames;
    std::vector<double> frame_times;
};

enum class KeyProfileName { diatonic, krumhansl, temperley };
enum class KeyMode { major, minor };
enum class KeyDistance { correlation, euclidean };

const char* key_profile_name(KeyProfileName name);
KeyProfileName key_profile_from_name(const std::string& name);
const char* key_mode_name(KeyMode mode);

/// Unit-sum pitch-class templates for one profile family (C-rooted).
struct KeyProfile {
    KeyProfileName name;
    ChromaVector major;
    ChromaVector minor;
};

/// The three template profiles: binary diatonic scale membership,
/// Krumhansl-Kessler probe-tone ratings, Temperley key profiles.
const std::array<KeyProfile, 3>& key_profiles();
const KeyProfile& key_profile(KeyProfileName name);

struct KeyCandidate {
    int tonic = 0; // pitch class 0..11
    KeyMode mode = KeyMode::major;
    double score = 0.0;
};

struct KeyEstimate {
    int tonic = 0;
    KeyMode mode = KeyMode::major;
    double score = 0.0;
    std::array<KeyCandidate, 24> ranking{}; // sorted best-first
};

std::string key_name(int tonic, KeyMode mode);

/// Octave-folding chroma: each bin inside [fmin, fmax] is mapped to its
/// nearest MIDI pitch and its magnitude summed into pitch class p mod 12.
/// Frames are normalized to unit sum unless normalize is false.
ChromaSequence pitch_chroma(const Spectrogram& spectrogram, double tuning = 440.0,
                            double fmin = 65.4, double fmax = 2093.0,
                            bool normalize = true);

/// Per-class mean over frames, renormalized to unit sum (all-zero stays zero).
ChromaVector average_chroma(const ChromaSequence& seq);

/// Template matching over 12 rotations x {major, minor}. Ties resolve to the
/// lower tonic index, major before minor.
KeyEstimate detect_key(const ChromaVector& chroma_avg, const KeyProfile& profile,
                       KeyDistance distance = KeyDistance::correlation);

/// r(eta) = sum_{n=0}^{N-1-eta} x(n) x(n+eta) for eta = 0..N-1, normalized so
/// r(0) = 1. An all-zero frame returns all zeros (degenerate).
std::vector<double> acf(std::span<const double> frame);

/// Fundamental frequency track, 0 = unvoiced.
struct F0Track {
    std::vector<double> frequencies;
    std::vector<double> frame_times;
};

struct AcfF0Params {
    double fmin = 33.3;
    double fmax = 3333.0;
    double voicing_threshold = 0.3;
};

/// Time-domain f0: per frame the strongest local ACF maximum in the lag range
/// [sr/fmax, sr/fmin], refined by parabolic interpolation.
F0Track acf_f0(const AudioBuffer& buffer, const BlockSpec& spec, AcfF0Params params = {});

struct HpsParams {
    int order = 4;
    double fmin = 50.0;
    double fmax = 2000.0;
    double silence_threshold = 1e-6; // on per-frame magnitude sum
};

/// Frequency-domain f0 via the harmonic product spectrum
/// HPS(k) = prod_{j=1..order} |X(j k)|, argmax over the [fmin, fmax] bin range.
F0Track hps_f0(const Spectrogram& spectrogram, HpsParams params = {});

/// Per-frame HPS kernel used by hps_f0 and iterative subtraction.
/// Returns the estimated f0 in Hz, or 0 if the frame is silent.
double hps_frame(const double* magnitudes, std::size_t num_bins, double bin_hz,
                 const HpsParams& params);

struct IterativeSubtractionParams {
    std::size_t max_voices = 4;
    double energy_floor_ratio = 0.05;
    int harmonic_removal_halfwidth = 1; // bins zeroed on each side of a harmonic
    HpsParams hps{};
};

/// Polyphonic candidates per frame: detect with the HPS kernel, zero the
/// detected harmonics, repeat until the energy floor or voice cap is hit.
std::vector<std::vector<double>> iterative_subtraction_f0(const Spectrogram& spectrogram,
                                                          IterativeSubtractionParams params);

} // namespace aca
