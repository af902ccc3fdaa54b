#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace aca {

constexpr bool is_power_of_two(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

std::size_t next_power_of_two(std::size_t n);

/// In-place iterative radix-2 FFT. Size must be a power of two.
/// The inverse transform includes the 1/N scaling.
void fft_radix2(std::vector<std::complex<double>>& data, bool inverse = false);

/// One-sided magnitude spectrum |X(k)|, k = 0..n/2, of a real frame whose
/// length n is a power of two. No normalization.
std::vector<double> magnitude_spectrum(std::span<const double> frame);

} // namespace aca
