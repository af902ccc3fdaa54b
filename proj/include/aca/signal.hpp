#pragma once

#include "aca/audio.hpp"
#include "aca/matrix.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace aca {

enum class Window { rectangular, hann };

const char* window_name(Window w);
Window window_from_name(const std::string& name);

/// Framing parameters shared by every blocked analysis.
struct BlockSpec {
    std::size_t block_size = 4096;
    std::size_t hop_size = 2048;
    Window window = Window::hann;

    /// Throws on hop > block, zero sizes, or non-power-of-two block.
    void validate() const;
};

/// Defaults: long blocks for tonal analyses, short blocks for rhythm.
BlockSpec tonal_block_spec();
BlockSpec rhythm_block_spec();

/// Periodic window coefficients: hann w(n) = 0.5*(1 - cos(2*pi*n/N)).
std::vector<double> window_coefficients(Window window, std::size_t size);

/// Slices the buffer into ceil(len/hop) frames of block_size samples.
/// Frame k starts at k*hop; trailing frames are zero-padded, then the
/// window is applied. Rows of the result are frames.
Matrix block_audio(const AudioBuffer& buffer, const BlockSpec& spec);

std::size_t num_frames_for(std::size_t num_samples, std::size_t hop_size);

/// Time x frequency magnitudes with frame/bin coordinates.
struct Spectrogram {
    Matrix magnitudes;                   // [num_frames x num_bins]
    std::vector<double> bin_frequencies; // Hz, length block/2 + 1
    std::vector<double> frame_times;     // s, frame centers
    BlockSpec source_spec;
    int sample_rate = 0;

    std::size_t num_frames() const { return magnitudes.rows(); }
    std::size_t num_bins() const { return magnitudes.cols(); }
    double nyquist() const { return sample_rate / 2.0; }
};

/// One-sided STFT magnitudes, |X(k)| for k = 0..block/2, no normalization.
/// frame_times[k] = (k*hop + block/2) / sample_rate.
Spectrogram stft_magnitude(const AudioBuffer& buffer, const BlockSpec& spec);

} // namespace aca
