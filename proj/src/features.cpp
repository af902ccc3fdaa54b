#include "aca/features.hpp"

#include "aca/error.hpp"

#include <cmath>
#include <numbers>

namespace aca {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank build_mel_filterbank(std::size_t num_bands, std::size_t num_bins,
                                   int sample_rate, double fmin, double fmax) {
    if (num_bands < 1)
        throw Error(ErrorCode::InvalidArgument, "num_bands must be >= 1");
    const double nyquist = sample_rate / 2.0;
    if (!(fmin >= 0.0 && fmin < fmax && fmax <= nyquist + 1e-9))
        throw Error(ErrorCode::InvalidArgument, "invalid mel frequency range");

    MelFilterbank fb;
    fb.num_bands = num_bands;
    fb.band_edges.resize(num_bands + 2);
    const double mel_lo = hz_to_mel(fmin);
    const double mel_hi = hz_to_mel(fmax);
    for (std::size_t i = 0; i < num_bands + 2; ++i)
        fb.band_edges[i] =
            mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                   static_cast<double>(num_bands + 1));

    fb.weights = Matrix(num_bands, num_bins);
    for (std::size_t m = 0; m < num_bands; ++m) {
        const double left = fb.band_edges[m];
        const double center = fb.band_edges[m + 1];
        const double right = fb.band_edges[m + 2];
        for (std::size_t k = 0; k < num_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / (2.0 * (num_bins - 1));
            double w = 0.0;
            if (f >= left && f <= center && center > left)
                w = (f - left) / (center - left);
            else if (f > center && f <= right && right > center)
                w = (right - f) / (right - center);
            fb.weights(m, k) = w;
        }
    }
    return fb;
}

FeatureSeries spectral_centroid(const Spectrogram& spectrogram) {
    FeatureSeries out;
    out.name = "spectral_centroid";
    out.frame_times = spectrogram.frame_times;
    out.values = Matrix(spectrogram.num_frames(), 1);
    for (std::size_t t = 0; t < spectrogram.num_frames(); ++t) {
        const double* mags = spectrogram.magnitudes.row(t);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < spectrogram.num_bins(); ++k) {
            num += spectrogram.bin_frequencies[k] * mags[k];
            den += mags[k];
        }
        out.values(t, 0) = den > 0.0 ? num / den : 0.0;
    }
    return out;
}

namespace {

FeatureSeries blockwise_feature(const AudioBuffer& buffer, const BlockSpec& spec,
                                const std::string& name, bool want_rms) {
    BlockSpec unwindowed = spec;
    unwindowed.window = Window::rectangular; // level features see the raw signal
    const Matrix frames = block_audio(buffer, unwindowed);

    FeatureSeries out;
    out.name = name;
    out.values = Matrix(frames.rows(), 1);
    out.frame_times.resize(frames.rows());
    for (std::size_t k = 0; k < frames.rows(); ++k) {
        out.frame_times[k] = (static_cast<double>(k) * spec.hop_size + spec.block_size / 2.0) /
                             buffer.sample_rate;
        const double* x = frames.row(k);
        if (want_rms) {
            double acc = 0.0;
            for (std::size_t n = 0; n < spec.block_size; ++n)
                acc += x[n] * x[n];
            out.values(k, 0) = std::sqrt(acc / static_cast<double>(spec.block_size));
        } else {
            double peak = 0.0;
            for (std::size_t n = 0; n < spec.block_size; ++n)
                peak = std::max(peak, std::abs(x[n]));
            out.values(k, 0) = peak;
        }
    }
    return out;
}

} // namespace

FeatureSeries rms(const AudioBuffer& buffer, const BlockSpec& spec) {
    return blockwise_feature(buffer, spec, "rms", true);
}

FeatureSeries envelope_peak(const AudioBuffer& buffer, const BlockSpec& spec) {
    return blockwise_feature(buffer, spec, "envelope", false);
}

std::vector<double> mfcc_from_band_energies(const std::vector<double>& band_energies,
                                            std::size_t num_coefficients) {
    const std::size_t bands = band_energies.size();
    if (num_coefficients > bands)
        throw Error(ErrorCode::InvalidArgument, "num_coefficients exceeds num_bands");

    std::vector<double> logs(bands);
    for (std::size_t m = 0; m < bands; ++m)
        logs[m] = std::log(std::max(band_energies[m], kMfccLogFloor));

    std::vector<double> coeffs(num_coefficients);
    for (std::size_t j = 0; j < num_coefficients; ++j) {
        double acc = 0.0;
        for (std::size_t m = 0; m < bands; ++m)
            acc += logs[m] * std::cos(std::numbers::pi * (static_cast<double>(m) + 0.5) *
                                      static_cast<double>(j) / static_cast<double>(bands));
        const double scale = j == 0 ? std::sqrt(1.0 / static_cast<double>(bands))
                                    : std::sqrt(2.0 / static_cast<double>(bands));
        coeffs[j] = scale * acc;
    }
    return coeffs;
}

FeatureSeries mfcc(const Spectrogram& spectrogram, std::size_t num_bands,
                   std::size_t num_coefficients, double fmin, double fmax) {
    if (fmax <= 0.0)
        fmax = spectrogram.nyquist();
    if (num_coefficients > num_bands)
        throw Error(ErrorCode::InvalidArgument, "num_coefficients exceeds num_bands");
    const MelFilterbank fb = build_mel_filterbank(num_bands, spectrogram.num_bins(),
                                                  spectrogram.sample_rate, fmin, fmax);

    FeatureSeries out;
    out.name = "mfcc";
    out.frame_times = spectrogram.frame_times;
    out.values = Matrix(spectrogram.num_frames(), num_coefficients);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(spectrogram.num_frames()); ++t) {
        const double* mags = spectrogram.magnitudes.row(t);
        std::vector<double> energies(num_bands, 0.0);
        for (std::size_t m = 0; m < num_bands; ++m) {
            const double* w = fb.weights.row(m);
            double acc = 0.0;
            for (std::size_t k = 0; k < spectrogram.num_bins(); ++k)
                acc += w[k] * mags[k] * mags[k];
            energies[m] = acc;
        }
        const std::vector<double> coeffs = mfcc_from_band_energies(energies, num_coefficients);
        double* dst = out.values.row(t);
        for (std::size_t j = 0; j < num_coefficients; ++j)
            dst[j] = coeffs[j];
    }
    return out;
}

AggregatedFeatures aggregate(const std::vector<FeatureSeries>& series) {
    AggregatedFeatures out;
    for (const FeatureSeries& s : series) {
        if (s.num_frames() == 0)
            throw Error(ErrorCode::EmptyInput, "cannot aggregate empty series: " + s.name);
        for (std::size_t d = 0; d < s.dim(); ++d) {
            double mean = 0.0;
            for (std::size_t t = 0; t < s.num_frames(); ++t)
                mean += s.values(t, d);
            mean /= static_cast<double>(s.num_frames());
            double var = 0.0;
            for (std::size_t t = 0; t < s.num_frames(); ++t) {
                const double diff = s.values(t, d) - mean;
                var += diff * diff;
            }
            var /= static_cast<double>(s.num_frames()); // population convention
            const std::string base =
                s.dim() > 1 ? s.name + "." + std::to_string(d) : s.name;
            out.names.push_back(base + ".mean");
            out.vector.push_back(mean);
            out.names.push_back(base + ".std");
            out.vector.push_back(std::sqrt(var));
        }
    }
    return out;
}

} // namespace aca
