#pragma once

#include "aca/features.hpp"
#include "aca/matrix.hpp"
#include "aca/rhythm.hpp"
#include "aca/tonal.hpp"

#include <vector>

namespace aca {

/// Pairwise cosine similarities between feature frames; symmetric with a
/// unit diagonal.
struct SelfSimilarityMatrix {
    Matrix values; // [n x n]
    std::vector<double> frame_times;

    std::size_t size() const { return values.rows(); }
};

struct SegmentBoundaries {
    std::vector<double> times;
    NoveltyCurve novelty; // the boundary-novelty curve the peaks came from
};

struct RepetitionLag {
    double lag_seconds = 0.0;
    std::size_t lag_frames = 0;
    double support = 0.0; // mean similarity along the superdiagonal
};

struct RepetitionReport {
    std::vector<RepetitionLag> lags; // sorted by support, best first
};

SelfSimilarityMatrix ssm(const Matrix& frames, const std::vector<double>& frame_times);
SelfSimilarityMatrix ssm(const ChromaSequence& chroma);
SelfSimilarityMatrix ssm(const FeatureSeries& features);

struct BoundaryParams {
    std::size_t kernel_half_size = 16; // L; the kernel is 2L x 2L
    double peak_threshold_ratio = 0.1;
    double peak_min_distance = 0.05; // s
};

/// Gaussian-tapered checkerboard kernel correlated along the main diagonal
/// (replication padding at the edges); peaks of the resulting novelty curve
/// are segment boundaries.
SegmentBoundaries boundary_novelty(const SelfSimilarityMatrix& matrix,
                                   BoundaryParams params = {});

/// Mean similarity per superdiagonal lag; lags above threshold * best
/// support are reported, adjacent qualifying lags merged to their maximum.
RepetitionReport repetition_lags(const SelfSimilarityMatrix& matrix, double min_lag_seconds,
                                 double threshold = 0.6);

} // namespace aca
