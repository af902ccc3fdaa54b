#include "aca/structure.hpp"

#include "aca/error.hpp"

#include <algorithm>
#include <cmath>

namespace aca {

SelfSimilarityMatrix ssm(const Matrix& frames, const std::vector<double>& frame_times) {
    const std::size_t n = frames.rows();
    if (n < 2)
        throw Error(ErrorCode::InvalidArgument, "self-similarity needs at least 2 frames");
    if (frame_times.size() != n)
        throw Error(ErrorCode::DimensionMismatch, "frame_times length mismatch");

    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* row = frames.row(i);
        for (std::size_t d = 0; d < frames.cols(); ++d)
            acc += row[d] * row[d];
        norms[i] = std::sqrt(acc);
    }

    SelfSimilarityMatrix out;
    out.frame_times = frame_times;
    out.values = Matrix(n, n);

    // each pair computed once and mirrored, so symmetry is exact
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        out.values(i, i) = 1.0; // unit self-similarity, degenerate frames included
        const double* a = frames.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            double sim = 0.0;
            if (norms[i] > 0.0 && norms[j] > 0.0) {
                const double* b = frames.row(j);
                double dot = 0.0;
                for (std::size_t d = 0; d < frames.cols(); ++d)
                    dot += a[d] * b[d];
                sim = dot / (norms[i] * norms[j]);
            }
            out.values(i, j) = sim;
            out.values(j, i) = sim;
        }
    }
    return out;
}

SelfSimilarityMatrix ssm(const ChromaSequence& chroma) {
    Matrix frames(chroma.frames.size(), 12);
    for (std::size_t i = 0; i < chroma.frames.size(); ++i)
        for (std::size_t c = 0; c < 12; ++c)
            frames(i, c) = chroma.frames[i][c];
    return ssm(frames, chroma.frame_times);
}

SelfSimilarityMatrix ssm(const FeatureSeries& features) {
    return ssm(features.values, features.frame_times);
}

SegmentBoundaries boundary_novelty(const SelfSimilarityMatrix& matrix, BoundaryParams params) {
    const std::size_t n = matrix.size();
    const std::size_t half = params.kernel_half_size;
    if (half == 0)
        throw Error(ErrorCode::InvalidArgument, "kernel_half_size must be positive");
    if (n < 2 * half)
        throw Error(ErrorCode::InvalidArgument, "matrix smaller than the checker kernel");

    // checkerboard: +-quadrants on the diagonal, Gaussian taper, sigma = L/2
    const std::size_t size = 2 * half;
    Matrix kernel(size, size);
    const double sigma = static_cast<double>(half) / 2.0;
    double positive_weight = 0.0;
    for (std::size_t u = 0; u < size; ++u) {
        const double cu = static_cast<double>(u) - (static_cast<double>(half) - 0.5);
        for (std::size_t v = 0; v < size; ++v) {
            const double cv = static_cast<double>(v) - (static_cast<double>(half) - 0.5);
            const double taper = std::exp(-(cu * cu + cv * cv) / (2.0 * sigma * sigma));
            const double sign = (cu < 0.0) == (cv < 0.0) ? 1.0 : -1.0;
            kernel(u, v) = sign * taper;
            if (sign > 0.0)
                positive_weight += taper;
        }
    }

    SegmentBoundaries out;
    out.novelty.values.assign(n, 0.0);
    const double dt = matrix.frame_times[1] - matrix.frame_times[0];
    out.novelty.frame_rate = 1.0 / dt;
    out.novelty.time_offset = matrix.frame_times[0];

    const double noise_floor = 1e-12 * positive_weight;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(n); ++t) {
        double acc = 0.0;
        for (std::size_t u = 0; u < size; ++u) {
            const std::ptrdiff_t iu = std::clamp<std::ptrdiff_t>(
                t - static_cast<std::ptrdiff_t>(half) + static_cast<std::ptrdiff_t>(u), 0,
                static_cast<std::ptrdiff_t>(n) - 1);
            for (std::size_t v = 0; v < size; ++v) {
                const std::ptrdiff_t iv = std::clamp<std::ptrdiff_t>(
                    t - static_cast<std::ptrdiff_t>(half) + static_cast<std::ptrdiff_t>(v), 0,
                    static_cast<std::ptrdiff_t>(n) - 1);
                acc += kernel(u, v) * matrix.values(iu, iv);
            }
        }
        out.novelty.values[t] = acc > noise_floor ? acc : 0.0;
    }

    const OnsetList peaks =
        pick_onsets(out.novelty, params.peak_threshold_ratio, params.peak_min_distance);
    out.times = peaks.times;
    return out;
}

RepetitionReport repetition_lags(const SelfSimilarityMatrix& matrix, double min_lag_seconds,
                                 double threshold) {
    const std::size_t n = matrix.size();
    const double dt = matrix.frame_times[1] - matrix.frame_times[0];
    const std::size_t min_lag = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(min_lag_seconds / dt - 1e-9)));
    if (min_lag >= n)
        throw Error(ErrorCode::InvalidArgument, "min_lag exceeds track duration");

    std::vector<double> support(n, 0.0);
    for (std::size_t lag = min_lag; lag < n; ++lag) {
        double acc = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i)
            acc += matrix.values(i, i + lag);
        support[lag] = acc / static_cast<double>(n - lag);
    }

    double best = 0.0;
    for (std::size_t lag = min_lag; lag < n; ++lag)
        best = std::max(best, support[lag]);

    RepetitionReport report;
    if (best <= 0.0)
        return report;

    const double cutoff = threshold * best;
    std::size_t lag = min_lag;
    while (lag < n) {
        if (support[lag] <= cutoff) {
            ++lag;
            continue;
        }
        // merge the run of adjacent qualifying lags to its maximum
        std::size_t best_lag = lag;
        std::size_t end = lag;
        while (end < n && support[end] > cutoff) {
            if (support[end] > support[best_lag])
                best_lag = end;
            ++end;
        }
        report.lags.push_back({static_cast<double>(best_lag) * dt, best_lag, support[best_lag]});
        lag = end;
    }

    std::stable_sort(report.lags.begin(), report.lags.end(),
                     [](const RepetitionLag& a, const RepetitionLag& b) {
                         if (a.support != b.support)
                             return a.support > b.support;
                         return a.lag_frames < b.lag_frames;
                     });
    return report;
}

} // namespace aca
