#include "aca/signal.hpp"

#include "aca/error.hpp"
#include "aca/fft.hpp"

#include <cmath>
#include <numbers>

namespace aca {

const char* window_name(Window w) {
    return w == Window::hann ? "hann" : "rectangular";
}

Window window_from_name(const std::string& name) {
    if (name == "hann")
        return Window::hann;
    if (name == "rectangular" || name == "rect")
        return Window::rectangular;
    throw Error(ErrorCode::InvalidArgument, "unknown window: " + name);
}

void BlockSpec::validate() const {
    if (block_size == 0 || hop_size == 0)
        throw Error(ErrorCode::InvalidArgument, "block and hop sizes must be positive");
    if (hop_size > block_size)
        throw Error(ErrorCode::InvalidArgument,
                    "hop size " + std::to_string(hop_size) + " exceeds block size " +
                        std::to_string(block_size));
    if (!is_power_of_two(block_size))
        throw Error(ErrorCode::InvalidArgument,
                    "block size must be a power of two, got " + std::to_string(block_size));
}

BlockSpec tonal_block_spec() { return BlockSpec{4096, 2048, Window::hann}; }
BlockSpec rhythm_block_spec() { return BlockSpec{1024, 512, Window::hann}; }

std::vector<double> window_coefficients(Window window, std::size_t size) {
    std::vector<double> w(size, 1.0);
    if (window == Window::hann) {
        for (std::size_t n = 0; n < size; ++n)
            w[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                         static_cast<double>(size)));
    }
    return w;
}

std::size_t num_frames_for(std::size_t num_samples, std::size_t hop_size) {
    return (num_samples + hop_size - 1) / hop_size;
}

Matrix block_audio(const AudioBuffer& buffer, const BlockSpec& spec) {
    spec.validate();
    if (buffer.empty())
        throw Error(ErrorCode::EmptyInput, "cannot block an empty buffer");

    const std::size_t frames = num_frames_for(buffer.size(), spec.hop_size);
    const std::vector<double> w = window_coefficients(spec.window, spec.block_size);

    Matrix out(frames, spec.block_size);
    for (std::size_t k = 0; k < frames; ++k) {
        const std::size_t start = k * spec.hop_size;
        double* dst = out.row(k);
        const std::size_t avail =
            start < buffer.size() ? std::min(spec.block_size, buffer.size() - start) : 0;
        for (std::size_t n = 0; n < avail; ++n)
            dst[n] = buffer.samples[start + n] * w[n];
        // remaining samples stay zero-padded
    }
    return out;
}

Spectrogram stft_magnitude(const AudioBuffer& buffer, const BlockSpec& spec) {
    const Matrix frames = block_audio(buffer, spec);
    const std::size_t num_frames = frames.rows();
    const std::size_t num_bins = spec.block_size / 2 + 1;

    Spectrogram spec_out;
    spec_out.magnitudes = Matrix(num_frames, num_bins);
    spec_out.source_spec = spec;
    spec_out.sample_rate = buffer.sample_rate;

    spec_out.bin_frequencies.resize(num_bins);
    for (std::size_t k = 0; k < num_bins; ++k)
        spec_out.bin_frequencies[k] = static_cast<double>(k) * buffer.sample_rate /
                                      static_cast<double>(spec.block_size);

    spec_out.frame_times.resize(num_frames);
    for (std::size_t k = 0; k < num_frames; ++k)
        spec_out.frame_times[k] =
            (static_cast<double>(k) * spec.hop_size + spec.block_size / 2.0) / buffer.sample_rate;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(num_frames); ++k) {
        const std::vector<double> mags =
            magnitude_spectrum({frames.row(k), spec.block_size});
        double* dst = spec_out.magnitudes.row(k);
        for (std::size_t b = 0; b < num_bins; ++b)
            dst[b] = mags[b];
    }
    return spec_out;
}

} // namespace aca
