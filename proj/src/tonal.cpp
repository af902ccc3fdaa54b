#include "aca/tonal.hpp"

#include "aca/error.hpp"
#include "aca/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace aca {

namespace {

const char* kPitchClassNames[12] = {"C",  "C#", "D",  "D#", "E",  "F",
                                    "F#", "G",  "G#", "A",  "A#", "B"};

ChromaVector normalized(ChromaVector v) {
    double sum = 0.0;
    for (double x : v)
        sum += x;
    if (sum > 0.0)
        for (double& x : v)
            x /= sum;
    return v;
}

ChromaVector scale_template(std::initializer_list<int> degrees) {
    ChromaVector v{};
    for (int d : degrees)
        v[d] = 1.0;
    return normalized(v);
}

std::array<KeyProfile, 3> make_profiles() {
    std::array<KeyProfile, 3> profiles;

    profiles[0].name = KeyProfileName::diatonic;
    profiles[0].major = scale_template({0, 2, 4, 5, 7, 9, 11});
    profiles[0].minor = scale_template({0, 2, 3, 5, 7, 8, 10});

    // Krumhansl & Kessler probe-tone ratings (Krumhansl, "Cognitive
    // Foundations of Musical Pitch", 1990, Table 2.1).
    profiles[1].name = KeyProfileName::krumhansl;
    profiles[1].major = normalized(
        {6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88});
    profiles[1].minor = normalized(
        {6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17});

    // Temperley key profiles ("Music and Probability", 2007).
    profiles[2].name = KeyProfileName::temperley;
    profiles[2].major = normalized(
        {0.748, 0.060, 0.488, 0.082, 0.670, 0.460, 0.096, 0.715, 0.104, 0.366, 0.057, 0.400});
    profiles[2].minor = normalized(
        {0.712, 0.084, 0.474, 0.618, 0.049, 0.460, 0.105, 0.747, 0.404, 0.067, 0.133, 0.330});

    return profiles;
}

double pearson(const ChromaVector& a, const ChromaVector& b) {
    double ma = 0.0, mb = 0.0;
    for (int i = 0; i < 12; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= 12.0;
    mb /= 12.0;
    double num = 0.0, va = 0.0, vb = 0.0;
    for (int i = 0; i < 12; ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    const double den = std::sqrt(va * vb);
    return den > 0.0 ? num / den : 0.0;
}

double euclidean_similarity(const ChromaVector& a, const ChromaVector& b) {
    // negative distance between unit-sum vectors, so bigger is better
    const ChromaVector an = normalized(a);
    double acc = 0.0;
    for (int i = 0; i < 12; ++i)
        acc += (an[i] - b[i]) * (an[i] - b[i]);
    return -std::sqrt(acc);
}

ChromaVector rotate_to_tonic(const ChromaVector& profile, int tonic) {
    ChromaVector out;
    for (int c = 0; c < 12; ++c)
        out[c] = profile[((c - tonic) % 12 + 12) % 12];
    return out;
}

} // namespace

const char* key_profile_name(KeyProfileName name) {
    switch (name) {
    case KeyProfileName::diatonic: return "diatonic";
    case KeyProfileName::krumhansl: return "krumhansl";
    case KeyProfileName::temperley: return "temperley";
    }
    return "unknown";
}

KeyProfileName key_profile_from_name(const std::string& name) {
    if (name == "diatonic")
        return KeyProfileName::diatonic;
    if (name == "krumhansl")
        return KeyProfileName::krumhansl;
    if (name == "temperley")
        return KeyProfileName::temperley;
    throw Error(ErrorCode::InvalidArgument, "unknown key profile: " + name);
}

const char* key_mode_name(KeyMode mode) {
    return mode == KeyMode::major ? "major" : "minor";
}

const std::array<KeyProfile, 3>& key_profiles() {
    static const std::array<KeyProfile, 3> profiles = make_profiles();
    return profiles;
}

const KeyProfile& key_profile(KeyProfileName name) {
    for (const KeyProfile& p : key_profiles())
        if (p.name == name)
            return p;
    throw Error(ErrorCode::InvalidArgument, "unknown key profile");
}

std::string key_name(int tonic, KeyMode mode) {
    return std::string(kPitchClassNames[((tonic % 12) + 12) % 12]) + " " + key_mode_name(mode);
}

ChromaSequence pitch_chroma(const Spectrogram& spectrogram, double tuning, double fmin,
                            double fmax, bool normalize) {
    if (!(fmin > 0.0 && fmin < fmax))
        throw Error(ErrorCode::InvalidArgument, "invalid chroma frequency range");

    // precompute bin -> pitch class, -1 = out of range
    std::vector<int> bin_class(spectrogram.num_bins(), -1);
    for (std::size_t k = 0; k < spectrogram.num_bins(); ++k) {
        const double f = spectrogram.bin_frequencies[k];
        if (f < fmin || f > fmax)
            continue;
        const int midi = static_cast<int>(std::lround(69.0 + 12.0 * std::log2(f / tuning)));
        bin_class[k] = ((midi % 12) + 12) % 12;
    }

    ChromaSequence seq;
    seq.frame_times = spectrogram.frame_times;
    seq.frames.resize(spectrogram.num_frames());

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(spectrogram.num_frames()); ++t) {
        ChromaVector v{};
        const double* mags = spectrogram.magnitudes.row(t);
        for (std::size_t k = 0; k < spectrogram.num_bins(); ++k)
            if (bin_class[k] >= 0)
                v[bin_class[k]] += mags[k];
        seq.frames[t] = normalize ? normalized(v) : v;
    }
    return seq;
}

ChromaVector average_chroma(const ChromaSequence& seq) {
    if (seq.frames.empty())
        throw Error(ErrorCode::EmptyInput, "cannot average an empty chroma sequence");
    ChromaVector mean{};
    for (const ChromaVector& f : seq.frames)
        for (int c = 0; c < 12; ++c)
            mean[c] += f[c];
    for (int c = 0; c < 12; ++c)
        mean[c] /= static_cast<double>(seq.frames.size());
    return normalized(mean);
}

KeyEstimate detect_key(const ChromaVector& chroma_avg, const KeyProfile& profile,
                       KeyDistance distance) {
    bool all_zero = true;
    for (double x : chroma_avg)
        if (x != 0.0)
            all_zero = false;
    if (all_zero)
        throw Error(ErrorCode::DegenerateInput, "all-zero chroma has no key");

    KeyEstimate est;
    std::size_t idx = 0;
    for (KeyMode mode : {KeyMode::major, KeyMode::minor}) {
        const ChromaVector& base = mode == KeyMode::major ? profile.major : profile.minor;
        for (int tonic = 0; tonic < 12; ++tonic) {
            const ChromaVector rotated = rotate_to_tonic(base, tonic);
            const double score = distance == KeyDistance::correlation
                                     ? pearson(chroma_avg, rotated)
                                     : euclidean_similarity(chroma_avg, rotated);
            est.ranking[idx++] = KeyCandidate{tonic, mode, score};
        }
    }
    std::stable_sort(est.ranking.begin(), est.ranking.end(),
                     [](const KeyCandidate& a, const KeyCandidate& b) {
                         if (a.score != b.score)
                             return a.score > b.score;
                         if (a.tonic != b.tonic)
                             return a.tonic < b.tonic;
                         return a.mode == KeyMode::major && b.mode == KeyMode::minor;
                     });
    est.tonic = est.ranking[0].tonic;
    est.mode = est.ranking[0].mode;
    est.score = est.ranking[0].score;
    return est;
}

std::vector<double> acf(std::span<const double> frame) {
    const std::size_t n = frame.size();
    if (n < 2)
        throw Error(ErrorCode::InvalidArgument, "acf frame too short");

    // Wiener-Khinchin: zero-pad to >= 2N to make the circular correlation linear.
    const std::size_t m = next_power_of_two(2 * n);
    std::vector<std::complex<double>> buf(m, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i)
        buf[i] = std::complex<double>(frame[i], 0.0);
    fft_radix2(buf);
    for (auto& x : buf)
        x = std::complex<double>(std::norm(x), 0.0);
    fft_radix2(buf, true);

    std::vector<double> r(n);
    for (std::size_t eta = 0; eta < n; ++eta)
        r[eta] = buf[eta].real();

    if (r[0] <= 0.0)
        return std::vector<double>(n, 0.0); // degenerate all-zero frame
    const double r0 = r[0];
    for (double& x : r)
        x /= r0;
    return r;
}

F0Track acf_f0(const AudioBuffer& buffer, const BlockSpec& spec, AcfF0Params params) {
    spec.validate();
    if (buffer.sample_rate / params.fmax < 2.0)
        throw Error(ErrorCode::InvalidArgument, "fmax too high for this sample rate");
    if (static_cast<double>(spec.block_size) < 2.0 * buffer.sample_rate / params.fmin)
        throw Error(ErrorCode::InvalidArgument, "block too short for fmin");

    const Matrix frames = block_audio(buffer, spec);
    const std::size_t lag_min = static_cast<std::size_t>(
        std::ceil(buffer.sample_rate / params.fmax));
    const std::size_t lag_max = std::min<std::size_t>(
        spec.block_size - 2,
        static_cast<std::size_t>(std::floor(buffer.sample_rate / params.fmin)));

    F0Track track;
    track.frequencies.assign(frames.rows(), 0.0);
    track.frame_times.resize(frames.rows());
    for (std::size_t k = 0; k < frames.rows(); ++k)
        track.frame_times[k] = (static_cast<double>(k) * spec.hop_size + spec.block_size / 2.0) /
                               buffer.sample_rate;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(frames.rows()); ++k) {
        const std::vector<double> r = acf({frames.row(k), spec.block_size});
        if (r[0] == 0.0)
            continue; // silent frame stays unvoiced

        // strongest local maximum in range; the lag-zero lobe is never a
        // local maximum, so small-lag bias cannot win here
        std::size_t best_lag = 0;
        double best_val = -2.0;
        for (std::size_t eta = std::max<std::size_t>(lag_min, 1); eta <= lag_max; ++eta) {
            if (r[eta] > r[eta - 1] && r[eta] >= r[eta + 1] && r[eta] > best_val) {
                best_val = r[eta];
                best_lag = eta;
            }
        }
        if (best_lag == 0 || best_val < params.voicing_threshold)
            continue;

        const double a = r[best_lag - 1], b = r[best_lag], c = r[best_lag + 1];
        const double den = a - 2.0 * b + c;
        double delta = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
        delta = std::clamp(delta, -0.5, 0.5);
        const double f0 = buffer.sample_rate / (static_cast<double>(best_lag) + delta);
        track.frequencies[k] = std::clamp(f0, params.fmin, params.fmax);
    }
    return track;
}

double hps_frame(const double* magnitudes, std::size_t num_bins, double bin_hz,
                 const HpsParams& params) {
    double total = 0.0;
    for (std::size_t k = 0; k < num_bins; ++k)
        total += magnitudes[k];
    if (total < params.silence_threshold)
        return 0.0;

    const std::size_t k_min =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(params.fmin / bin_hz)));
    const std::size_t k_max = std::min(
        num_bins - 1, static_cast<std::size_t>(std::floor(params.fmax / bin_hz)));

    std::size_t best_k = 0;
    double best_prod = -1.0;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        double prod = 1.0;
        for (int j = 1; j <= params.order; ++j) {
            const std::size_t idx = k * static_cast<std::size_t>(j);
            if (idx >= num_bins) {
                prod = 0.0;
                break;
            }
            prod *= magnitudes[idx];
        }
        if (prod > best_prod) {
            best_prod = prod;
            best_k = k;
        }
    }
    return best_k == 0 ? 0.0 : static_cast<double>(best_k) * bin_hz;
}

F0Track hps_f0(const Spectrogram& spectrogram, HpsParams params) {
    if (params.order < 2)
        throw Error(ErrorCode::InvalidArgument, "hps order must be >= 2");
    if (!(params.fmin > 0.0 && params.fmin < params.fmax))
        throw Error(ErrorCode::InvalidArgument, "invalid hps frequency range");
    if (params.fmax * params.order > spectrogram.nyquist() + 1e-9)
        throw Error(ErrorCode::InvalidArgument, "fmax * order exceeds nyquist");

    const double bin_hz = spectrogram.bin_frequencies[1];
    F0Track track;
    track.frame_times = spectrogram.frame_times;
    track.frequencies.assign(spectrogram.num_frames(), 0.0);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(spectrogram.num_frames()); ++t)
        track.frequencies[t] =
            hps_frame(spectrogram.magnitudes.row(t), spectrogram.num_bins(), bin_hz, params);
    return track;
}

std::vector<std::vector<double>> iterative_subtraction_f0(const Spectrogram& spectrogram,
                                                          IterativeSubtractionParams params) {
    if (params.max_voices < 1)
        throw Error(ErrorCode::InvalidArgument, "max_voices must be >= 1");
    if (!(params.energy_floor_ratio > 0.0 && params.energy_floor_ratio < 1.0))
        throw Error(ErrorCode::InvalidArgument, "energy_floor_ratio must be in (0, 1)");
    if (params.hps.fmax * params.hps.order > spectrogram.nyquist() + 1e-9)
        params.hps.fmax = spectrogram.nyquist() / params.hps.order;

    const double bin_hz = spectrogram.bin_frequencies[1];
    const std::size_t num_bins = spectrogram.num_bins();
    std::vector<std::vector<double>> result(spectrogram.num_frames());

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(spectrogram.num_frames()); ++t) {
        std::vector<double> residual(spectrogram.magnitudes.row(t),
                                     spectrogram.magnitudes.row(t) + num_bins);
        double original_energy = 0.0;
        for (double m : residual)
            original_energy += m * m;
        if (original_energy <= 0.0)
            continue;

        std::vector<double>& candidates = result[t];
        while (candidates.size() < params.max_voices) {
            const double f0 = hps_frame(residual.data(), num_bins, bin_hz, params.hps);
            if (f0 <= 0.0)
                break;
            candidates.push_back(f0);

            const std::size_t k0 =
                static_cast<std::size_t>(std::lround(f0 / bin_hz));
            for (std::size_t j = 1; j * k0 < num_bins; ++j) {
                const std::size_t center = j * k0;
                const std::size_t lo =
                    center > static_cast<std::size_t>(params.harmonic_removal_halfwidth)
                        ? center - params.harmonic_removal_halfwidth
                        : 0;
                const std::size_t hi =
                    std::min(num_bins - 1, center + params.harmonic_removal_halfwidth);
                for (std::size_t k = lo; k <= hi; ++k)
                    residual[k] = 0.0;
            }

            double energy = 0.0;
            for (double m : residual)
                energy += m * m;
            if (energy < params.energy_floor_ratio * original_energy)
                break;
        }
    }
    return result;
}

} // namespace aca
