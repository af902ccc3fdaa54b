#pragma once

#include "aca/audio.hpp"
#include "aca/matrix.hpp"
#include "aca/signal.hpp"

#include <string>
#include <vector>

namespace aca {

/// Per-frame feature values, one row per frame.
struct FeatureSeries {
    std::string name;
    Matrix values; // [num_frames x dim]
    std::vector<double> frame_times;

    std::size_t num_frames() const { return values.rows(); }
    std::size_t dim() const { return values.cols(); }
};

/// Mean/std summary of one or more feature series, flattened into a
/// single vector with matching names ("<feature>.mean", "<feature>.std").
struct AggregatedFeatures {
    std::vector<std::string> names;
    std::vector<double> vector;
};

struct MelFilterbank {
    std::size_t num_bands = 0;
    Matrix weights; // [num_bands x num_bins]
    std::vector<double> band_edges; // Hz, length num_bands + 2
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters with centers equally spaced on the mel scale
/// between fmin and fmax, peak weight 1 at the center frequency.
MelFilterbank build_mel_filterbank(std::size_t num_bands, std::size_t num_bins,
                                   int sample_rate, double fmin, double fmax);

/// Center of mass of each magnitude frame, in Hz. All-zero frames map to 0.
FeatureSeries spectral_centroid(const Spectrogram& spectrogram);

/// Per-block sqrt(mean(x^2)) on unwindowed blocks, zero padding included.
FeatureSeries rms(const AudioBuffer& buffer, const BlockSpec& spec);

/// Per-block max |x(n)| on unwindowed blocks.
FeatureSeries envelope_peak(const AudioBuffer& buffer, const BlockSpec& spec);

constexpr double kMfccLogFloor = 1e-10;

/// Orthonormal DCT-II of the log band energies; the seam between the mel
/// filterbank stage and the cepstral stage of the MFCC chain.
std::vector<double> mfcc_from_band_energies(const std::vector<double>& band_energies,
                                            std::size_t num_coefficients);

/// Mel-band log energies (power spectrum) followed by an orthonormal
/// DCT-II, keeping the first num_coefficients values per frame.
FeatureSeries mfcc(const Spectrogram& spectrogram, std::size_t num_bands = 40,
                   std::size_t num_coefficients = 13, double fmin = 0.0,
                   double fmax = 0.0 /* 0 = nyquist */);

/// Mean and population standard deviation per dimension, concatenated in
/// declaration order as [f.mean, f.std, ...].
AggregatedFeatures aggregate(const std::vector<FeatureSeries>& series);

} // namespace aca
