#pragma once

#include "aca/matrix.hpp"

#include <cstdint>
#include <vector>

namespace aca {

struct NmfResult {
    Matrix templates;   // [num_bins x rank]
    Matrix activations; // [rank x num_frames]
    std::vector<double> loss_history; // squared Frobenius error per iteration
};

constexpr double kNmfEpsilon = 1e-12;

/// Multiplicative-update factorization V ~ W*H under Euclidean loss.
/// Factors are seeded uniformly in (0, 1] from the given seed and stay
/// >= kNmfEpsilon after every update. Deterministic for a fixed seed.
NmfResult nmf(const Matrix& v, std::size_t rank, std::size_t iterations, std::uint64_t seed);

} // namespace aca
