#pragma once

#include "aca/audio.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace synth {

inline aca::AudioBuffer silence(double seconds, int sample_rate = 44100) {
    aca::AudioBuffer buf;
    buf.sample_rate = sample_rate;
    buf.samples.assign(static_cast<std::size_t>(seconds * sample_rate), 0.0);
    return buf;
}

inline aca::AudioBuffer sine(double freq, double seconds, int sample_rate = 44100,
                             double amplitude = 1.0, double phase = 0.0) {
    aca::AudioBuffer buf = silence(seconds, sample_rate);
    for (std::size_t n = 0; n < buf.samples.size(); ++n)
        buf.samples[n] = amplitude * std::sin(2.0 * std::numbers::pi * freq *
                                                  static_cast<double>(n) / sample_rate +
                                              phase);
    return buf;
}

/// Harmonic complex with amplitudes 1/k (sawtooth-like) or equal weights.
inline aca::AudioBuffer harmonic_complex(double f0, int num_harmonics, double seconds,
                                         int sample_rate = 44100, bool equal_amplitudes = false,
                                         int first_harmonic = 1) {
    aca::AudioBuffer buf = silence(seconds, sample_rate);
    double norm = 0.0;
    for (int k = first_harmonic; k < first_harmonic + num_harmonics; ++k)
        norm += equal_amplitudes ? 1.0 : 1.0 / k;
    for (std::size_t n = 0; n < buf.samples.size(); ++n) {
        double acc = 0.0;
        for (int k = first_harmonic; k < first_harmonic + num_harmonics; ++k) {
            const double amp = equal_amplitudes ? 1.0 : 1.0 / k;
            acc += amp * std::sin(2.0 * std::numbers::pi * f0 * k * static_cast<double>(n) /
                                  sample_rate);
        }
        buf.samples[n] = acc / norm;
    }
    return buf;
}

/// Click track: identical short decaying noise bursts every 60/bpm seconds.
/// Identical bursts keep novelty spike heights equal so periodicity peaks
/// are ordered by overlap count alone. Clicks at exactly t = 0 are invisible
/// to a derivative-based novelty (nothing precedes them), so offset them.
inline aca::AudioBuffer click_track(double bpm, double seconds, int sample_rate = 44100,
                                    std::uint32_t seed = 1, double offset = 0.0) {
    aca::AudioBuffer buf = silence(seconds, sample_rate);
    const double period = 60.0 / bpm;
    const std::size_t click_len = static_cast<std::size_t>(0.01 * sample_rate);

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> noise(-1.0, 1.0);
    std::vector<double> burst(click_len);
    for (std::size_t i = 0; i < click_len; ++i)
        burst[i] = noise(rng) * (1.0 - static_cast<double>(i) / click_len);

    for (double t = offset; t < seconds; t += period) {
        const std::size_t start = static_cast<std::size_t>(t * sample_rate);
        for (std::size_t i = 0; i < click_len && start + i < buf.samples.size(); ++i)
            buf.samples[start + i] = burst[i];
    }
    return buf;
}

inline std::vector<double> click_times(double bpm, double seconds, double offset = 0.0) {
    std::vector<double> times;
    const double period = 60.0 / bpm;
    for (double t = offset; t < seconds; t += period)
        times.push_back(t);
    return times;
}

inline aca::AudioBuffer white_noise(double seconds, int sample_rate = 44100,
                                    std::uint32_t seed = 7, double amplitude = 0.5) {
    aca::AudioBuffer buf = silence(seconds, sample_rate);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> noise(-amplitude, amplitude);
    for (double& x : buf.samples)
        x = noise(rng);
    return buf;
}

inline void mix_into(aca::AudioBuffer& dst, const aca::AudioBuffer& src, double gain = 1.0) {
    for (std::size_t i = 0; i < dst.samples.size() && i < src.samples.size(); ++i)
        dst.samples[i] += gain * src.samples[i];
}

} // namespace synth
