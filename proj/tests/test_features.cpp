#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aca/error.hpp"
#include "aca/features.hpp"
#include "aca/reference.hpp"
#include "aca/signal.hpp"

#include "synth.hpp"

#include <cmath>
#include <random>

using namespace aca;

namespace {

Spectrogram single_frame_spectrogram(std::vector<double> magnitudes, int sample_rate = 44100) {
    Spectrogram sg;
    const std::size_t bins = magnitudes.size();
    sg.sample_rate = sample_rate;
    sg.magnitudes = Matrix(1, bins);
    for (std::size_t k = 0; k < bins; ++k)
        sg.magnitudes(0, k) = magnitudes[k];
    sg.bin_frequencies.resize(bins);
    for (std::size_t k = 0; k < bins; ++k)
        sg.bin_frequencies[k] = static_cast<double>(k) * sample_rate / (2.0 * (bins - 1));
    sg.frame_times = {0.0};
    sg.source_spec = BlockSpec{2 * (bins - 1), bins - 1, Window::rectangular};
    return sg;
}

} // namespace

TEST_CASE("centroid of a single nonzero bin is that bin frequency") {
    std::vector<double> mags(513, 0.0);
    mags[100] = 1.0;
    const Spectrogram sg = single_frame_spectrogram(mags);
    const FeatureSeries c = spectral_centroid(sg);
    CHECK(c.values(0, 0) == sg.bin_frequencies[100]);
}

TEST_CASE("centroid of a flat frame is the mean bin frequency") {
    const Spectrogram sg = single_frame_spectrogram(std::vector<double>(513, 0.7));
    double mean = 0.0;
    for (double f : sg.bin_frequencies)
        mean += f;
    mean /= 513.0;
    CHECK(spectral_centroid(sg).values(0, 0) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("centroid of silence is zero and always within [0, nyquist]") {
    const Spectrogram zero = single_frame_spectrogram(std::vector<double>(513, 0.0));
    CHECK(spectral_centroid(zero).values(0, 0) == 0.0);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> mags(513);
    for (double& m : mags)
        m = dist(rng);
    const Spectrogram sg = single_frame_spectrogram(mags);
    const double c = spectral_centroid(sg).values(0, 0);
    CHECK(c >= 0.0);
    CHECK(c <= sg.nyquist());
}

TEST_CASE("rms of constant and sine blocks") {
    AudioBuffer buf;
    buf.sample_rate = 44100;
    buf.samples.assign(1024, 0.5);
    const FeatureSeries r = rms(buf, {1024, 1024, Window::hann});
    CHECK(r.values(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

    // sixteen full periods inside the block
    const int sr = 44100;
    const std::size_t block = 1024;
    AudioBuffer sine = synth::sine(16.0 * sr / block, 1.0, sr);
    sine.samples.resize(block);
    const FeatureSeries rs = rms(sine, {block, block, Window::hann});
    CHECK(rs.values(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));

    AudioBuffer zero;
    zero.sample_rate = sr;
    zero.samples.assign(block, 0.0);
    CHECK(rms(zero, {block, block, Window::hann}).values(0, 0) == 0.0);
}

TEST_CASE("envelope peak per block and gain property") {
    AudioBuffer buf;
    buf.sample_rate = 8000;
    buf.samples = {0.1, -0.9, 0.5, 0.0};
    const FeatureSeries env = envelope_peak(buf, {4, 4, Window::hann});
    CHECK(env.values(0, 0) == doctest::Approx(0.9));

    AudioBuffer doubled = buf;
    for (double& x : doubled.samples)
        x *= 2.0;
    const FeatureSeries env2 = envelope_peak(doubled, {4, 4, Window::hann});
    CHECK(env2.values(0, 0) == doctest::Approx(2.0 * env.values(0, 0)));
}

TEST_CASE("rms never exceeds the envelope peak") {
    AudioBuffer buf = synth::white_noise(0.5, 44100, 9);
    const BlockSpec spec{1024, 512, Window::hann};
    const FeatureSeries r = rms(buf, spec);
    const FeatureSeries e = envelope_peak(buf, spec);
    REQUIRE(r.num_frames() == e.num_frames());
    for (std::size_t t = 0; t < r.num_frames(); ++t) {
        CHECK(r.values(t, 0) >= 0.0);
        CHECK(r.values(t, 0) <= e.values(t, 0) + 1e-15);
    }
}

TEST_CASE("mel scale reference point and filterbank shape") {
    CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-12));

    const MelFilterbank fb = build_mel_filterbank(40, 2049, 44100, 0.0, 22050.0);
    REQUIRE(fb.band_edges.size() == 42);
    for (std::size_t i = 1; i < fb.band_edges.size(); ++i)
        CHECK(fb.band_edges[i] > fb.band_edges[i - 1]);
    for (std::size_t m = 0; m < fb.num_bands; ++m) {
        double maxw = 0.0;
        for (std::size_t k = 0; k < 2049; ++k)
            maxw = std::max(maxw, fb.weights(m, k));
        CHECK(maxw > 0.0); // every band keeps at least one live bin
    }

    const MelFilterbank single = build_mel_filterbank(1, 2049, 44100, 0.0, 22050.0);
    const double peak_hz = single.band_edges[1];
    CHECK(peak_hz == doctest::Approx(mel_to_hz(hz_to_mel(22050.0) / 2.0)).epsilon(1e-9));

    CHECK_THROWS_AS(build_mel_filterbank(10, 2049, 44100, 5000.0, 1000.0), Error);
}

TEST_CASE("dct of constant band energies keeps only coefficient zero") {
    const double c = 1.7;
    const std::vector<double> energies(40, std::exp(c));
    const std::vector<double> coeffs = mfcc_from_band_energies(energies, 13);
    CHECK(coeffs[0] == doctest::Approx(c * std::sqrt(40.0)).epsilon(1e-9));
    for (std::size_t j = 1; j < coeffs.size(); ++j)
        CHECK(std::abs(coeffs[j]) <= 1e-9);
}

TEST_CASE("all-zero band energies hit the log floor") {
    const std::vector<double> coeffs = mfcc_from_band_energies(std::vector<double>(40, 0.0), 13);
    CHECK(coeffs[0] == doctest::Approx(std::log(1e-10) * std::sqrt(40.0)).epsilon(1e-9));
    for (std::size_t j = 1; j < coeffs.size(); ++j)
        CHECK(std::abs(coeffs[j]) <= 1e-9);
}

TEST_CASE("mfcc matches the independent reference oracle") {
    const AudioBuffer buf = synth::harmonic_complex(220.0, 10, 0.2, 44100, true);
    const Spectrogram sg = stft_magnitude(buf, {4096, 2048, Window::hann});
    const FeatureSeries m = mfcc(sg, 40, 13);
    for (std::size_t t = 0; t < sg.num_frames(); ++t) {
        const std::vector<double> expected =
            ref::mfcc_frame({sg.magnitudes.row(t), sg.num_bins()}, 44100, 40, 13, 0.0, 22050.0);
        for (std::size_t j = 0; j < 13; ++j)
            CHECK(m.values(t, j) == doctest::Approx(expected[j]).epsilon(1e-6));
    }
}

TEST_CASE("mfcc gain shifts only coefficient zero") {
    // broadband input keeps every band well above the log floor, which the
    // gain identity requires
    const AudioBuffer buf = synth::white_noise(0.2, 44100, 19);
    const Spectrogram sg = stft_magnitude(buf, {4096, 2048, Window::hann});
    AudioBuffer loud = buf;
    for (double& x : loud.samples)
        x *= 4.0;
    const Spectrogram sg2 = stft_magnitude(loud, {4096, 2048, Window::hann});

    const FeatureSeries a = mfcc(sg, 24, 13, 100.0, 8000.0);
    const FeatureSeries b = mfcc(sg2, 24, 13, 100.0, 8000.0);
    const double shift = 2.0 * std::log(4.0) * std::sqrt(24.0);
    for (std::size_t t = 0; t < a.num_frames(); ++t) {
        CHECK(b.values(t, 0) - a.values(t, 0) == doctest::Approx(shift).epsilon(1e-6));
        for (std::size_t j = 1; j < 13; ++j)
            CHECK(b.values(t, j) == doctest::Approx(a.values(t, j)).epsilon(1e-6));
    }
}

TEST_CASE("mfcc rejects more coefficients than bands") {
    const AudioBuffer buf = synth::sine(440.0, 0.1);
    const Spectrogram sg = stft_magnitude(buf, {1024, 512, Window::hann});
    CHECK_THROWS_AS(mfcc(sg, 10, 11), Error);
}

TEST_CASE("aggregate mean and population std") {
    FeatureSeries s;
    s.name = "a";
    s.values = Matrix(3, 1, 3.0);
    s.frame_times = {0.0, 0.1, 0.2};
    const AggregatedFeatures agg = aggregate({s});
    REQUIRE(agg.names.size() == 2);
    CHECK(agg.names[0] == "a.mean");
    CHECK(agg.names[1] == "a.std");
    CHECK(agg.vector[0] == doctest::Approx(3.0));
    CHECK(agg.vector[1] == doctest::Approx(0.0));

    FeatureSeries two;
    two.name = "b";
    two.values = Matrix(2, 1);
    two.values(0, 0) = 0.0;
    two.values(1, 0) = 2.0;
    two.frame_times = {0.0, 0.1};
    const AggregatedFeatures agg2 = aggregate({two});
    CHECK(agg2.vector[0] == doctest::Approx(1.0));
    CHECK(agg2.vector[1] == doctest::Approx(1.0)); // population convention
}

TEST_CASE("aggregate layout for two features and order invariance") {
    FeatureSeries a;
    a.name = "a";
    a.values = Matrix(4, 1);
    FeatureSeries b = a;
    b.name = "b";
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (std::size_t t = 0; t < 4; ++t) {
        a.values(t, 0) = dist(rng);
        b.values(t, 0) = dist(rng);
    }
    a.frame_times = b.frame_times = {0.0, 0.1, 0.2, 0.3};

    const AggregatedFeatures agg = aggregate({a, b});
    REQUIRE(agg.vector.size() == 4);
    CHECK(agg.names == std::vector<std::string>{"a.mean", "a.std", "b.mean", "b.std"});

    // permuting frames leaves mean/std unchanged
    FeatureSeries shuffled = a;
    std::swap(shuffled.values(0, 0), shuffled.values(3, 0));
    std::swap(shuffled.values(1, 0), shuffled.values(2, 0));
    const AggregatedFeatures agg_shuffled = aggregate({shuffled});
    CHECK(agg_shuffled.vector[0] == doctest::Approx(agg.vector[0]).epsilon(1e-12));
    CHECK(agg_shuffled.vector[1] == doctest::Approx(agg.vector[1]).epsilon(1e-12));

    FeatureSeries empty;
    empty.name = "empty";
    CHECK_THROWS_AS(aggregate({empty}), Error);
}
