#pragma once

#include "aca/matrix.hpp"
#include "aca/nmf.hpp"
#include "aca/signal.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace aca::ref {

/// Straight-line serial implementations. These are the reference halves of
/// the dual-route checks (oracles for the fast paths) and the baselines the
/// benchmark tool compares the OpenMP kernels against. Nothing here calls
/// into the optimized kernels it is meant to check.

/// Naive O(N^2) DFT magnitudes, any frame length.
std::vector<double> dft_magnitude(std::span<const double> frame);

/// Eq.-style brute-force autocorrelation, normalized so r(0) = 1.
std::vector<double> acf_brute(std::span<const double> frame);

/// Serial STFT: same framing and FFT as the production path, plain loop.
Matrix stft_magnitudes_serial(const AudioBuffer& buffer, const BlockSpec& spec);

/// Serial cosine self-similarity, full double loop.
Matrix ssm_serial(const Matrix& frames);

/// Serial multiplicative-update NMF, same update order as the parallel one.
NmfResult nmf_serial(const Matrix& v, std::size_t rank, std::size_t iterations,
                     std::uint64_t seed);

/// Independently coded MFCC frame: own mel filterbank, log, and DCT.
std::vector<double> mfcc_frame(std::span<const double> magnitudes, int sample_rate,
                               std::size_t num_bands, std::size_t num_coefficients,
                               double fmin, double fmax);

/// Brute-force bin-to-pitch-class mapping (unnormalized energies).
std::array<double, 12> pitch_class_energies(std::span<const double> magnitudes,
                                            std::span<const double> bin_frequencies,
                                            double tuning, double fmin, double fmax);

/// Literal harmonic product spectrum: decimate by 2..order and multiply.
/// Returns the product spectrum over bins [0, num_bins/order).
std::vector<double> harmonic_product_spectrum(std::span<const double> magnitudes, int order);

} // namespace aca::ref
