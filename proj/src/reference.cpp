#include "aca/reference.hpp"

#include "aca/error.hpp"
#include "aca/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace aca::ref {

std::vector<double> dft_magnitude(std::span<const double> frame) {
    const std::size_t n = frame.size();
    std::vector<double> mags(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) *
                                 static_cast<double>(i) / static_cast<double>(n);
            re += frame[i] * std::cos(phase);
            im += frame[i] * std::sin(phase);
        }
        mags[k] = std::hypot(re, im);
    }
    return mags;
}

std::vector<double> acf_brute(std::span<const double> frame) {
    const std::size_t n = frame.size();
    std::vector<double> r(n, 0.0);
    for (std::size_t eta = 0; eta < n; ++eta)
        for (std::size_t i = 0; i + eta < n; ++i)
            r[eta] += frame[i] * frame[i + eta];
    if (r[0] <= 0.0)
        return std::vector<double>(n, 0.0);
    const double r0 = r[0];
    for (double& x : r)
        x /= r0;
    return r;
}

Matrix stft_magnitudes_serial(const AudioBuffer& buffer, const BlockSpec& spec) {
    const Matrix frames = block_audio(buffer, spec);
    const std::size_t bins = spec.block_size / 2 + 1;
    Matrix out(frames.rows(), bins);
    for (std::size_t k = 0; k < frames.rows(); ++k) {
        const std::vector<double> mags = magnitude_spectrum({frames.row(k), spec.block_size});
        std::copy(mags.begin(), mags.end(), out.row(k));
    }
    return out;
}

Matrix ssm_serial(const Matrix& frames) {
    const std::size_t n = frames.rows();
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t d = 0; d < frames.cols(); ++d)
            acc += frames(i, d) * frames(i, d);
        norms[i] = std::sqrt(acc);
    }
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double sim = 0.0;
            if (norms[i] > 0.0 && norms[j] > 0.0) {
                double dot = 0.0;
                for (std::size_t d = 0; d < frames.cols(); ++d)
                    dot += frames(i, d) * frames(j, d);
                sim = dot / (norms[i] * norms[j]);
            }
            out(i, j) = sim;
            out(j, i) = sim;
        }
    }
    return out;
}

namespace {

void matmul_serial(const Matrix& a, const Matrix& b, Matrix& c) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* crow = c.row(i);
        std::fill(crow, crow + c.cols(), 0.0);
        const double* arow = a.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                crow[j] += aik * brow[j];
        }
    }
}

void matmul_at_serial(const Matrix& a, const Matrix& b, Matrix& c) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
        double* crow = c.row(i);
        std::fill(crow, crow + c.cols(), 0.0);
        for (std::size_t k = 0; k < a.rows(); ++k) {
            const double aki = a(k, i);
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                crow[j] += aki * brow[j];
        }
    }
}

void matmul_bt_serial(const Matrix& a, const Matrix& b, Matrix& c) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* crow = c.row(i);
        const double* arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k)
                acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
}

} // namespace

NmfResult nmf_serial(const Matrix& v, std::size_t rank, std::size_t iterations,
                     std::uint64_t seed) {
    const std::size_t bins = v.rows();
    const std::size_t frames = v.cols();

    NmfResult result;
    result.templates = Matrix(bins, rank);
    result.activations = Matrix(rank, frames);

    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    auto draw = [&rng]() { return (static_cast<double>(rng()) + 1.0) / 4294967296.0; };
    for (double& x : result.templates.data())
        x = draw();
    for (double& x : result.activations.data())
        x = draw();

    Matrix wh(bins, frames);
    Matrix wt_v(rank, frames);
    Matrix wt_wh(rank, frames);
    Matrix v_ht(bins, rank);
    Matrix wh_ht(bins, rank);

    for (std::size_t it = 0; it < iterations; ++it) {
        matmul_serial(result.templates, result.activations, wh);
        matmul_at_serial(result.templates, v, wt_v);
        matmul_at_serial(result.templates, wh, wt_wh);
        {
            std::vector<double>& h = result.activations.data();
            const std::vector<double>& num = wt_v.data();
            const std::vector<double>& den = wt_wh.data();
            for (std::size_t i = 0; i < h.size(); ++i)
                h[i] = std::max(h[i] * num[i] / std::max(den[i], kNmfEpsilon), kNmfEpsilon);
        }
        matmul_serial(result.templates, result.activations, wh);
        matmul_bt_serial(v, result.activations, v_ht);
        matmul_bt_serial(wh, result.activations, wh_ht);
        {
            std::vector<double>& w = result.templates.data();
            const std::vector<double>& num = v_ht.data();
            const std::vector<double>& den = wh_ht.data();
            for (std::size_t i = 0; i < w.size(); ++i)
                w[i] = std::max(w[i] * num[i] / std::max(den[i], kNmfEpsilon), kNmfEpsilon);
        }
        matmul_serial(result.templates, result.activations, wh);
        double loss = 0.0;
        for (std::size_t i = 0; i < v.data().size(); ++i) {
            const double d = v.data()[i] - wh.data()[i];
            loss += d * d;
        }
        result.loss_history.push_back(loss);
    }
    return result;
}

std::vector<double> mfcc_frame(std::span<const double> magnitudes, int sample_rate,
                               std::size_t num_bands, std::size_t num_coefficients, double fmin,
                               double fmax) {
    const auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
    const auto inv_mel = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };

    const std::size_t num_bins = magnitudes.size();
    const double bin_hz = sample_rate / (2.0 * static_cast<double>(num_bins - 1));

    std::vector<double> edges(num_bands + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = inv_mel(mel(fmin) + (mel(fmax) - mel(fmin)) * static_cast<double>(i) /
                                           static_cast<double>(num_bands + 1));

    std::vector<double> logs(num_bands);
    for (std::size_t m = 0; m < num_bands; ++m) {
        double energy = 0.0;
        for (std::size_t k = 0; k < num_bins; ++k) {
            const double f = static_cast<double>(k) * bin_hz;
            double w = 0.0;
            if (f >= edges[m] && f <= edges[m + 1] && edges[m + 1] > edges[m])
                w = (f - edges[m]) / (edges[m + 1] - edges[m]);
            else if (f > edges[m + 1] && f <= edges[m + 2] && edges[m + 2] > edges[m + 1])
                w = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
            energy += w * magnitudes[k] * magnitudes[k];
        }
        logs[m] = std::log(std::max(energy, 1e-10));
    }

    std::vector<double> coeffs(num_coefficients, 0.0);
    for (std::size_t j = 0; j < num_coefficients; ++j) {
        for (std::size_t m = 0; m < num_bands; ++m)
            coeffs[j] += logs[m] * std::cos(std::numbers::pi * static_cast<double>(j) *
                                            (static_cast<double>(m) + 0.5) /
                                            static_cast<double>(num_bands));
        coeffs[j] *= j == 0 ? std::sqrt(1.0 / static_cast<double>(num_bands))
                            : std::sqrt(2.0 / static_cast<double>(num_bands));
    }
    return coeffs;
}

std::array<double, 12> pitch_class_energies(std::span<const double> magnitudes,
                                            std::span<const double> bin_frequencies,
                                            double tuning, double fmin, double fmax) {
    std::array<double, 12> energies{};
    for (std::size_t k = 0; k < magnitudes.size(); ++k) {
        const double f = bin_frequencies[k];
        if (f < fmin || f > fmax)
            continue;
        const double midi_float = 69.0 + 12.0 * std::log2(f / tuning);
        const long midi = std::lround(midi_float);
        energies[static_cast<std::size_t>(((midi % 12) + 12) % 12)] += magnitudes[k];
    }
    return energies;
}

std::vector<double> harmonic_product_spectrum(std::span<const double> magnitudes, int order) {
    const std::size_t out_len = magnitudes.size() / static_cast<std::size_t>(order);
    std::vector<double> hps(magnitudes.begin(), magnitudes.begin() + out_len);
    for (int j = 2; j <= order; ++j) {
        // decimate: keep every j-th value, then multiply in
        for (std::size_t k = 0; k < out_len; ++k)
            hps[k] *= magnitudes[k * static_cast<std::size_t>(j)];
    }
    return hps;
}

} // namespace aca::ref
