#include "aca/rhythm.hpp"

#include "aca/error.hpp"
#include "aca/features.hpp"
#include "aca/tonal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aca {

const char* novelty_source_name(NoveltySource source) {
    switch (source) {
    case NoveltySource::envelope: return "envelope";
    case NoveltySource::rms: return "rms";
    case NoveltySource::spectral_flux: return "spectral_flux";
    }
    return "unknown";
}

NoveltySource novelty_source_from_name(const std::string& name) {
    if (name == "envelope")
        return NoveltySource::envelope;
    if (name == "rms")
        return NoveltySource::rms;
    if (name == "spectral_flux" || name == "flux")
        return NoveltySource::spectral_flux;
    throw Error(ErrorCode::InvalidArgument, "unknown novelty source: " + name);
}

NoveltyCurve novelty(const AudioBuffer& buffer, const BlockSpec& spec, NoveltySource source,
                     std::size_t smoothing_length) {
    if (buffer.empty())
        throw Error(ErrorCode::EmptyInput, "cannot compute novelty of an empty buffer");

    std::vector<double> feature;
    if (source == NoveltySource::spectral_flux) {
        const Spectrogram sg = stft_magnitude(buffer, spec);
        feature.assign(sg.num_frames(), 0.0);
        for (std::size_t t = 1; t < sg.num_frames(); ++t) {
            const double* cur = sg.magnitudes.row(t);
            const double* prev = sg.magnitudes.row(t - 1);
            double acc = 0.0;
            for (std::size_t k = 0; k < sg.num_bins(); ++k)
                acc += std::max(0.0, cur[k] - prev[k]);
            feature[t] = acc;
        }
    } else {
        const FeatureSeries series = source == NoveltySource::envelope
                                         ? envelope_peak(buffer, spec)
                                         : rms(buffer, spec);
        feature.resize(series.num_frames());
        for (std::size_t t = 0; t < series.num_frames(); ++t)
            feature[t] = series.values(t, 0);
    }

    // derivative, first frame has no predecessor
    std::vector<double> diff(feature.size(), 0.0);
    for (std::size_t t = 1; t < feature.size(); ++t)
        diff[t] = std::max(0.0, feature[t] - feature[t - 1]);

    NoveltyCurve curve;
    curve.frame_rate = static_cast<double>(buffer.sample_rate) / spec.hop_size;
    curve.time_offset = spec.block_size / 2.0 / buffer.sample_rate;
    if (smoothing_length <= 1) {
        curve.values = std::move(diff);
        return curve;
    }

    // centered moving average, truncated at the edges
    const std::size_t half = smoothing_length / 2;
    curve.values.assign(diff.size(), 0.0);
    for (std::size_t t = 0; t < diff.size(); ++t) {
        const std::size_t lo = t >= half ? t - half : 0;
        const std::size_t hi = std::min(diff.size() - 1, t + half);
        double acc = 0.0;
        for (std::size_t i = lo; i <= hi; ++i)
            acc += diff[i];
        curve.values[t] = acc / static_cast<double>(hi - lo + 1);
    }
    return curve;
}

OnsetList pick_onsets(const NoveltyCurve& curve, double threshold_ratio, double min_distance) {
    OnsetList onsets;
    const std::size_t n = curve.values.size();
    if (n == 0)
        return onsets;

    const double peak = *std::max_element(curve.values.begin(), curve.values.end());
    const double threshold = threshold_ratio * peak;
    if (peak <= 0.0)
        return onsets;

    struct Peak {
        std::size_t frame;
        double value;
    };
    std::vector<Peak> peaks;
    // plateaus of equal values count as one peak at their center
    for (std::size_t t = 0; t < n;) {
        std::size_t end = t;
        while (end + 1 < n && curve.values[end + 1] == curve.values[t])
            ++end;
        const double left = t > 0 ? curve.values[t - 1] : -1.0;
        const double right = end + 1 < n ? curve.values[end + 1] : -1.0;
        if (curve.values[t] > threshold && curve.values[t] > left && curve.values[t] > right)
            peaks.push_back({(t + end) / 2, curve.values[t]});
        t = end + 1;
    }

    // strongest first; earlier peak wins exact ties
    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        if (a.value != b.value)
            return a.value > b.value;
        return a.frame < b.frame;
    });

    std::vector<Peak> accepted;
    for (const Peak& p : peaks) {
        const double t = curve.time_of(p.frame);
        bool blocked = false;
        for (const Peak& q : accepted)
            if (std::abs(curve.time_of(q.frame) - t) < min_distance) {
                blocked = true;
                break;
            }
        if (!blocked)
            accepted.push_back(p);
    }
    std::sort(accepted.begin(), accepted.end(),
              [](const Peak& a, const Peak& b) { return a.frame < b.frame; });

    for (const Peak& p : accepted) {
        onsets.times.push_back(curve.time_of(p.frame));
        onsets.strengths.push_back(p.value);
    }
    return onsets;
}

TempoEstimate tempo_acf(const NoveltyCurve& curve, TempoRange range) {
    const std::size_t n = curve.values.size();
    const double min_len = 2.0 * curve.frame_rate * 60.0 / range.bpm_min;
    if (static_cast<double>(n) < min_len)
        throw Error(ErrorCode::InvalidArgument, "novelty curve too short for tempo analysis");

    const double mean =
        std::accumulate(curve.values.begin(), curve.values.end(), 0.0) / static_cast<double>(n);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i)
        centered[i] = curve.values[i] - mean;

    const std::vector<double> r = acf(centered);
    if (r[0] == 0.0)
        throw Error(ErrorCode::DegenerateInput, "flat novelty curve has no periodicity");

    const auto lag_to_bpm = [&](double lag) { return 60.0 * curve.frame_rate / lag; };
    const std::size_t lag_min = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(curve.frame_rate * 60.0 / range.bpm_max)));
    const std::size_t lag_max = std::min<std::size_t>(
        n - 2, static_cast<std::size_t>(std::floor(curve.frame_rate * 60.0 / range.bpm_min)));
    if (lag_min >= lag_max)
        throw Error(ErrorCode::InvalidArgument, "tempo range collapses at this frame rate");

    // candidates are local maxima of the full ACF inside the lag range,
    // ranked by their parabola-interpolated peak height; comparing the raw
    // samples instead would make the winner depend on how close each peak
    // vertex happens to fall to an integer lag
    TempoEstimate est;
    double best_val = -2.0;
    double best_lag = 0.0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
        if (!(r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]))
            continue;
        const double a = r[lag - 1], b = r[lag], c = r[lag + 1];
        const double den = a - 2.0 * b + c;
        double delta = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
        delta = std::clamp(delta, -0.5, 0.5);
        const double vertex = b - 0.25 * (a - c) * delta;
        est.candidates.push_back({lag_to_bpm(static_cast<double>(lag) + delta), vertex});
        if (vertex > best_val) {
            best_val = vertex;
            best_lag = static_cast<double>(lag) + delta;
        }
    }
    if (est.candidates.empty())
        throw Error(ErrorCode::DegenerateInput, "no periodicity peak in the tempo range");

    std::stable_sort(est.candidates.begin(), est.candidates.end(),
                     [](const TempoCandidate& a, const TempoCandidate& b) {
                         return a.strength > b.strength;
                     });
    if (est.candidates.size() > 10)
        est.candidates.resize(10);

    est.bpm = std::clamp(lag_to_bpm(best_lag), range.bpm_min, range.bpm_max);
    est.periodicity_strength = best_val;
    return est;
}

std::vector<double> default_bpm_grid(TempoRange range, double step) {
    std::vector<double> grid;
    for (double bpm = range.bpm_min; bpm <= range.bpm_max + 1e-9; bpm += step)
        grid.push_back(bpm);
    return grid;
}

TempoEstimate tempo_comb(const NoveltyCurve& curve, const std::vector<double>& bpm_grid,
                         double feedback_gain) {
    if (bpm_grid.empty())
        throw Error(ErrorCode::InvalidArgument, "empty tempo grid");
    const std::size_t n = curve.values.size();

    TempoEstimate est;
    est.candidates.resize(bpm_grid.size());

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>(bpm_grid.size()); ++g) {
        const std::size_t delay = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::lround(curve.frame_rate * 60.0 / bpm_grid[g])));
        std::vector<double> y(n, 0.0);
        double energy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double fb = i >= delay ? feedback_gain * y[i - delay] : 0.0;
            y[i] = curve.values[i] + fb;
            energy += y[i] * y[i];
        }
        est.candidates[g] = {bpm_grid[g], energy};
    }

    std::size_t best = 0;
    for (std::size_t g = 1; g < est.candidates.size(); ++g)
        if (est.candidates[g].strength > est.candidates[best].strength)
            best = g;
    est.bpm = est.candidates[best].bpm;
    est.periodicity_strength = est.candidates[best].strength;
    if (est.periodicity_strength <= 0.0)
        throw Error(ErrorCode::DegenerateInput, "silent input: all resonator energies are zero");

    std::stable_sort(est.candidates.begin(), est.candidates.end(),
                     [](const TempoCandidate& a, const TempoCandidate& b) {
                         return a.strength > b.strength;
                     });
    return est;
}

TempoEstimate tempo_ioi(const OnsetList& onsets, TempoRange range, double bin_width) {
    if (onsets.times.size() < 3)
        throw Error(ErrorCode::InvalidArgument, "need at least 3 onsets for an IOI histogram");

    const double interval_min = 60.0 / range.bpm_max;
    const double interval_max = 60.0 / range.bpm_min;

    // histogram keyed by round(interval / bin_width) so bin centers are
    // exact multiples of the bin width
    std::vector<std::pair<long, int>> bins; // (bin index, count)
    for (std::size_t i = 1; i < onsets.times.size(); ++i) {
        const double interval = onsets.times[i] - onsets.times[i - 1];
        if (interval < interval_min || interval > interval_max)
            continue;
        const long idx = std::lround(interval / bin_width);
        bool found = false;
        for (auto& [bi, count] : bins)
            if (bi == idx) {
                ++count;
                found = true;
            }
        if (!found)
            bins.push_back({idx, 1});
    }
    if (bins.empty())
        throw Error(ErrorCode::DegenerateInput, "no inter-onset intervals in the tempo range");

    // modal bin, ties to the smaller interval (faster tempo)
    std::sort(bins.begin(), bins.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });

    TempoEstimate est;
    for (const auto& [idx, count] : bins)
        est.candidates.push_back(
            {60.0 / (static_cast<double>(idx) * bin_width), static_cast<double>(count)});
    est.bpm = est.candidates[0].bpm;
    est.periodicity_strength = est.candidates[0].strength;
    return est;
}

namespace {

// strongest onset within +-window of the prediction, or -1
std::ptrdiff_t snap_to_onset(const OnsetList& onsets, double predicted, double window) {
    std::ptrdiff_t best = -1;
    for (std::size_t i = 0; i < onsets.times.size(); ++i) {
        if (std::abs(onsets.times[i] - predicted) > window)
            continue;
        if (best < 0 || onsets.strengths[i] > onsets.strengths[best])
            best = static_cast<std::ptrdiff_t>(i);
    }
    return best;
}

} // namespace

BeatGrid track_beats(const NoveltyCurve& curve, const OnsetList& onsets,
                     const TempoEstimate& tempo, BeatTrackerParams params) {
    if (onsets.times.empty())
        throw Error(ErrorCode::EmptyInput, "beat tracking needs at least one onset");
    if (!(tempo.bpm > 0.0))
        throw Error(ErrorCode::DegenerateInput, "beat tracking needs a positive tempo");

    const double period_min = 60.0 / params.range.bpm_max;
    const double period_max = 60.0 / params.range.bpm_min;
    const double duration = curve.duration();

    // anchor at the strongest onset (earliest on ties)
    std::size_t anchor = 0;
    for (std::size_t i = 1; i < onsets.times.size(); ++i)
        if (onsets.strengths[i] > onsets.strengths[anchor])
            anchor = i;

    struct Beat {
        double time;
        double period;
    };
    std::vector<Beat> beats;
    const double initial_period = std::clamp(60.0 / tempo.bpm, period_min, period_max);
    beats.push_back({onsets.times[anchor], initial_period});

    // forward pass
    {
        double period = initial_period;
        double t = onsets.times[anchor];
        while (t + period <= duration + period * 0.5) {
            const double predicted = t + period;
            const std::ptrdiff_t hit =
                snap_to_onset(onsets, predicted, period * params.snap_window_fraction);
            double beat_time = predicted;
            if (hit >= 0) {
                beat_time = onsets.times[hit];
                period = std::clamp(period + params.adaptation_rate * (beat_time - predicted),
                                    period_min, period_max);
            }
            if (beat_time <= t + 1e-9)
                beat_time = predicted; // never stall on a repeated onset
            beats.push_back({beat_time, period});
            t = beat_time;
            if (beat_time > duration)
                break;
        }
    }

    // backward pass from the anchor
    {
        double period = initial_period;
        double t = onsets.times[anchor];
        while (t - period >= -period * 0.5) {
            const double predicted = t - period;
            const std::ptrdiff_t hit =
                snap_to_onset(onsets, predicted, period * params.snap_window_fraction);
            double beat_time = predicted;
            if (hit >= 0) {
                beat_time = onsets.times[hit];
                period = std::clamp(period + params.adaptation_rate * (predicted - beat_time),
                                    period_min, period_max);
            }
            if (beat_time >= t - 1e-9)
                beat_time = predicted;
            if (beat_time < 0.0)
                break;
            beats.push_back({beat_time, period});
            t = beat_time;
        }
    }

    std::sort(beats.begin(), beats.end(),
              [](const Beat& a, const Beat& b) { return a.time < b.time; });

    BeatGrid grid;
    for (const Beat& b : beats) {
        if (!grid.beat_times.empty() && b.time <= grid.beat_times.back() + 1e-9)
            continue;
        grid.beat_times.push_back(b.time);
        grid.bpm_track.push_back(60.0 / b.period);
    }
    return grid;
}

} // namespace aca
