#include "aca/fft.hpp"

#include "aca/error.hpp"

#include <cmath>
#include <numbers>

namespace aca {

std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

void fft_radix2(std::vector<std::complex<double>>& data, bool inverse) {
    const std::size_t n = data.size();
    if (!is_power_of_two(n))
        throw Error(ErrorCode::InvalidArgument,
                    "fft size must be a power of two, got " + std::to_string(n));
    if (n < 2)
        return;

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(data[i], data[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = data[i + k];
                const std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& x : data)
            x *= scale;
    }
}

std::vector<double> magnitude_spectrum(std::span<const double> frame) {
    const std::size_t n = frame.size();
    if (!is_power_of_two(n))
        throw Error(ErrorCode::InvalidArgument,
                    "frame length must be a power of two, got " + std::to_string(n));

    std::vector<std::complex<double>> buf(n);
    for (std::size_t i = 0; i < n; ++i)
        buf[i] = std::complex<double>(frame[i], 0.0);
    fft_radix2(buf);

    std::vector<double> mags(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k)
        mags[k] = std::abs(buf[k]);
    return mags;
}

} // namespace aca
