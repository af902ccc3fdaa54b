#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aca/error.hpp"
#include "aca/reference.hpp"
#include "aca/signal.hpp"
#include "aca/tonal.hpp"

#include "synth.hpp"

#include <cmath>
#include <random>

using namespace aca;

TEST_CASE("pitch chroma of a 440 Hz tone lands on A and matches the mapping oracle") {
    const AudioBuffer buf = synth::sine(440.0, 2.0);
    const Spectrogram sg = stft_magnitude(buf, tonal_block_spec());
    const ChromaSequence seq = pitch_chroma(sg);

    const ChromaVector avg = average_chroma(seq);
    int argmax = 0;
    for (int c = 1; c < 12; ++c)
        if (avg[c] > avg[argmax])
            argmax = c;
    CHECK(argmax == 9); // A
    CHECK(avg[9] > 0.9);

    // unnormalized frames must equal the brute-force bin mapping
    const ChromaSequence raw = pitch_chroma(sg, 440.0, 65.4, 2093.0, false);
    for (std::size_t t = 0; t < sg.num_frames(); ++t) {
        const auto oracle = ref::pitch_class_energies(
            {sg.magnitudes.row(t), sg.num_bins()}, sg.bin_frequencies, 440.0, 65.4, 2093.0);
        for (int c = 0; c < 12; ++c)
            CHECK(raw.frames[t][c] == doctest::Approx(oracle[c]).epsilon(1e-12));
    }
}

TEST_CASE("chroma octave invariance: 440 and 880 both map to class A") {
    for (double freq : {440.0, 880.0}) {
        const AudioBuffer buf = synth::sine(freq, 1.0);
        const ChromaVector avg =
            average_chroma(pitch_chroma(stft_magnitude(buf, tonal_block_spec())));
        int argmax = 0;
        for (int c = 1; c < 12; ++c)
            if (avg[c] > avg[argmax])
                argmax = c;
        CHECK(argmax == 9);
    }
}

TEST_CASE("chroma of silence is all zero and conserves in-range energy") {
    AudioBuffer buf;
    buf.sample_rate = 44100;
    buf.samples.assign(44100 / 4, 0.0);
    const Spectrogram sg = stft_magnitude(buf, tonal_block_spec());
    const ChromaSequence seq = pitch_chroma(sg);
    for (const ChromaVector& frame : seq.frames)
        for (double x : frame)
            CHECK(x == 0.0);

    // conservation on a noisy signal: chroma sums equal the in-range bin sums
    const AudioBuffer noise = synth::white_noise(0.3, 44100, 31);
    const Spectrogram nsg = stft_magnitude(noise, tonal_block_spec());
    const ChromaSequence raw = pitch_chroma(nsg, 440.0, 65.4, 2093.0, false);
    for (std::size_t t = 0; t < nsg.num_frames(); ++t) {
        double chroma_total = 0.0;
        for (double x : raw.frames[t])
            chroma_total += x;
        double bin_total = 0.0;
        for (std::size_t k = 0; k < nsg.num_bins(); ++k)
            if (nsg.bin_frequencies[k] >= 65.4 && nsg.bin_frequencies[k] <= 2093.0)
                bin_total += nsg.magnitudes(t, k);
        CHECK(chroma_total == doctest::Approx(bin_total).epsilon(1e-9));
    }
}

TEST_CASE("key profile constants") {
    const KeyProfile& diatonic = key_profile(KeyProfileName::diatonic);
    CHECK(diatonic.major[0] == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    CHECK(diatonic.major[1] == 0.0);

    // relative-key identity: C major equals A minor rotated to absolute classes
    for (int c = 0; c < 12; ++c) {
        const double a_minor_at_c = diatonic.minor[((c - 9) % 12 + 12) % 12];
        CHECK(diatonic.major[c] == doctest::Approx(a_minor_at_c).epsilon(1e-12));
    }

    const KeyProfile& krumhansl = key_profile(KeyProfileName::krumhansl);
    int argmax = 0;
    for (int c = 1; c < 12; ++c)
        if (krumhansl.major[c] > krumhansl.major[argmax])
            argmax = c;
    CHECK(argmax == 0);                                   // tonic strongest
    CHECK(krumhansl.major[7] > krumhansl.major[4]);       // dominant > mediant
    CHECK(krumhansl.major[4] > krumhansl.major[2]);

    for (const KeyProfile& p : key_profiles()) {
        double sum_major = 0.0, sum_minor = 0.0;
        for (int c = 0; c < 12; ++c) {
            sum_major += p.major[c];
            sum_minor += p.minor[c];
            CHECK(p.major[c] >= 0.0);
            CHECK(p.minor[c] >= 0.0);
        }
        CHECK(sum_major == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(sum_minor == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("detect_key self-match resolves ties to C major") {
    const KeyProfile& diatonic = key_profile(KeyProfileName::diatonic);
    const KeyEstimate est = detect_key(diatonic.major, diatonic);
    CHECK(est.tonic == 0);
    CHECK(est.mode == KeyMode::major);
    CHECK(est.score == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("detect_key finds D major for a chroma with prominent D and A") {
    // D major scale support with salient D and A, the Fig.-5-style shape
    ChromaVector chroma{};
    for (int c : {2, 4, 6, 7, 9, 11, 1})
        chroma[c] = 0.10;
    chroma[2] = 0.28; // D
    chroma[9] = 0.22; // A
    double sum = 0.0;
    for (double x : chroma)
        sum += x;
    for (double& x : chroma)
        x /= sum;

    for (KeyProfileName name :
         {KeyProfileName::krumhansl, KeyProfileName::temperley, KeyProfileName::diatonic}) {
        const KeyEstimate est = detect_key(chroma, key_profile(name));
        CHECK(est.tonic == 2);
        if (name != KeyProfileName::diatonic)
            CHECK(est.mode == KeyMode::major);
    }
}

TEST_CASE("detect_key rotation equivariance and scale invariance") {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    ChromaVector chroma;
    for (double& x : chroma)
        x = dist(rng);

    const KeyProfile& profile = key_profile(KeyProfileName::krumhansl);
    const KeyEstimate base = detect_key(chroma, profile);

    for (int shift = 1; shift < 12; ++shift) {
        ChromaVector rotated;
        for (int c = 0; c < 12; ++c)
            rotated[(c + shift) % 12] = chroma[c];
        const KeyEstimate est = detect_key(rotated, profile);
        CHECK(est.tonic == (base.tonic + shift) % 12);
        CHECK(est.mode == base.mode);
    }

    ChromaVector scaled = chroma;
    for (double& x : scaled)
        x *= 37.5;
    const KeyEstimate est = detect_key(scaled, profile);
    CHECK(est.tonic == base.tonic);
    CHECK(est.mode == base.mode);
    CHECK(est.score == doctest::Approx(base.score).epsilon(1e-12));
}

TEST_CASE("detect_key rejects all-zero chroma and fills the full ranking") {
    CHECK_THROWS_AS(detect_key(ChromaVector{}, key_profile(KeyProfileName::krumhansl)), Error);

    ChromaVector chroma{};
    chroma[0] = 1.0;
    const KeyEstimate est = detect_key(chroma, key_profile(KeyProfileName::temperley));
    CHECK(est.ranking.size() == 24);
    for (std::size_t i = 1; i < est.ranking.size(); ++i)
        CHECK(est.ranking[i - 1].score >= est.ranking[i].score);
    CHECK(est.ranking[0].score == est.score);
}

TEST_CASE("average_chroma basics") {
    ChromaSequence seq;
    ChromaVector c{};
    c[0] = 2.0;
    seq.frames.push_back(c);
    seq.frame_times.push_back(0.0);
    const ChromaVector avg = average_chroma(seq);
    CHECK(avg[0] == doctest::Approx(1.0));

    ChromaVector g{};
    g[7] = 1.0;
    ChromaVector cc{};
    cc[0] = 1.0;
    ChromaSequence two{{cc, g}, {0.0, 0.1}};
    const ChromaVector avg2 = average_chroma(two);
    CHECK(avg2[0] == doctest::Approx(0.5));
    CHECK(avg2[7] == doctest::Approx(0.5));

    ChromaSequence zeros{{ChromaVector{}, ChromaVector{}}, {0.0, 0.1}};
    const ChromaVector avg3 = average_chroma(zeros);
    for (double x : avg3)
        CHECK(x == 0.0);

    CHECK_THROWS_AS(average_chroma(ChromaSequence{}), Error);
}

TEST_CASE("acf of the alternating frame matches the hand computation") {
    const std::vector<double> frame = {1.0, 0.0, 1.0, 0.0, 1.0, 0.0};
    const std::vector<double> r = acf(frame);
    const std::vector<double> expected = {1.0, 0.0, 2.0 / 3.0, 0.0, 1.0 / 3.0, 0.0};
    REQUIRE(r.size() == expected.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        CHECK(r[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("acf normalization, delta frame, and degenerate input") {
    const std::vector<double> delta = {1.0, 0.0, 0.0, 0.0};
    const std::vector<double> r = acf(delta);
    CHECK(r[0] == doctest::Approx(1.0));
    for (std::size_t i = 1; i < r.size(); ++i)
        CHECK(r[i] == doctest::Approx(0.0));

    const std::vector<double> zeros(16, 0.0);
    for (double x : acf(zeros))
        CHECK(x == 0.0);

    CHECK_THROWS_AS(acf(std::vector<double>{1.0}), Error);
}

TEST_CASE("fast acf equals the brute-force double loop") {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> frame(100 + trial * 13);
        for (double& x : frame)
            x = dist(rng);
        const std::vector<double> fast = acf(frame);
        const std::vector<double> brute = ref::acf_brute(frame);
        REQUIRE(fast.size() == brute.size());
        for (std::size_t i = 0; i < fast.size(); ++i)
            CHECK(std::abs(fast[i] - brute[i]) <= 1e-12);
    }
}

TEST_CASE("acf_f0 tracks sines and square waves") {
    const BlockSpec spec{2048, 1024, Window::rectangular};

    const AudioBuffer sine = synth::sine(100.0, 0.6, 8000);
    const F0Track track = acf_f0(sine, spec, {33.3, 2000.0, 0.3});
    REQUIRE(!track.frequencies.empty());
    int voiced = 0;
    for (std::size_t t = 0; t + 1 < track.frequencies.size(); ++t) {
        if (track.frequencies[t] > 0.0) {
            ++voiced;
            CHECK(track.frequencies[t] == doctest::Approx(100.0).epsilon(0.005));
        }
    }
    CHECK(voiced > 0);

    // square wave, period exactly 50 samples at 44.1 kHz
    AudioBuffer square;
    square.sample_rate = 44100;
    square.samples.resize(44100 / 2);
    for (std::size_t n = 0; n < square.samples.size(); ++n)
        square.samples[n] = (n % 50) < 25 ? 1.0 : -1.0;
    const F0Track sq = acf_f0(square, {4096, 2048, Window::rectangular}, {33.3, 3333.0, 0.3});
    for (std::size_t t = 0; t + 1 < sq.frequencies.size(); ++t)
        if (sq.frequencies[t] > 0.0)
            CHECK(std::abs(sq.frequencies[t] - 882.0) <= 1.0);
}

TEST_CASE("acf_f0 marks silence unvoiced and checks preconditions") {
    AudioBuffer silent;
    silent.sample_rate = 8000;
    silent.samples.assign(8192, 0.0);
    const F0Track track = acf_f0(silent, {2048, 1024, Window::rectangular}, {33.3, 2000.0, 0.3});
    for (double f : track.frequencies)
        CHECK(f == 0.0);

    AudioBuffer buf = synth::sine(100.0, 0.5, 8000);
    CHECK_THROWS_AS(acf_f0(buf, {256, 128, Window::rectangular}, {33.3, 2000.0, 0.3}), Error);
}

TEST_CASE("acf_f0 avoids octave errors on sines from 60 to 1000 Hz") {
    // octave sanity: the detected lag must be the fundamental period, never a
    // multiple, so 2% of f0 is the pass band here (1% accuracy is asserted
    // separately over [80, 1000] Hz)
    for (double freq : {60.0, 110.0, 220.0, 440.0, 700.0, 1000.0}) {
        const AudioBuffer buf = synth::sine(freq, 0.4);
        const F0Track track =
            acf_f0(buf, {4096, 2048, Window::rectangular}, {33.3, 3333.0, 0.3});
        for (std::size_t t = 0; t + 1 < track.frequencies.size(); ++t)
            if (track.frequencies[t] > 0.0)
                CHECK(track.frequencies[t] == doctest::Approx(freq).epsilon(0.02));
    }
}

TEST_CASE("hps_f0 finds harmonic complexes within one bin") {
    const AudioBuffer buf = synth::harmonic_complex(200.0, 5, 0.4, 44100, true);
    const Spectrogram sg = stft_magnitude(buf, tonal_block_spec());
    const double bin_hz = sg.bin_frequencies[1];
    const F0Track track = hps_f0(sg, {4, 50.0, 1000.0, 1e-6});
    for (std::size_t t = 0; t + 1 < track.frequencies.size(); ++t)
        if (track.frequencies[t] > 0.0)
            CHECK(std::abs(track.frequencies[t] - 200.0) <= bin_hz + 1e-9);
}

TEST_CASE("hps matches the literal decimate-and-multiply construction") {
    const AudioBuffer buf = synth::harmonic_complex(330.0, 5, 0.2, 44100);
    const Spectrogram sg = stft_magnitude(buf, tonal_block_spec());
    const double bin_hz = sg.bin_frequencies[1];
    const HpsParams params{4, 50.0, 1000.0, 1e-6};

    for (std::size_t t = 0; t < sg.num_frames(); ++t) {
        const std::vector<double> hps =
            ref::harmonic_product_spectrum({sg.magnitudes.row(t), sg.num_bins()}, 4);
        const std::size_t k_min = static_cast<std::size_t>(std::ceil(50.0 / bin_hz));
        const std::size_t k_max = static_cast<std::size_t>(std::floor(1000.0 / bin_hz));
        std::size_t best = k_min;
        for (std::size_t k = k_min; k <= std::min(k_max, hps.size() - 1); ++k)
            if (hps[k] > hps[best])
                best = k;
        const double expected = static_cast<double>(best) * bin_hz;
        const double got = hps_frame(sg.magnitudes.row(t), sg.num_bins(), bin_hz, params);
        CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("hps_f0 picks an exact-bin sine's own bin, silence is unvoiced") {
    // integer periods per frame and a rectangular window keep every bin but
    // the tone's own at numerical zero; with the subharmonic below fmin the
    // fundamental's product is the only one holding a live factor
    const int sr = 44100;
    const std::size_t block = 4096;
    const double f = 100.0 * sr / block; // exact bin 100
    AudioBuffer buf = synth::sine(f, 0.3, sr);
    const Spectrogram sg = stft_magnitude(buf, {block, 2048, Window::rectangular});
    const F0Track track = hps_f0(sg, {4, 800.0, 2000.0, 1e-6});
    bool saw_voiced = false;
    const std::size_t full_frames = (buf.size() - block) / 2048 + 1;
    for (std::size_t t = 0; t < full_frames; ++t)
        if (track.frequencies[t] > 0.0) {
            saw_voiced = true;
            CHECK(track.frequencies[t] == doctest::Approx(f).epsilon(1e-12));
        }
    CHECK(saw_voiced);

    AudioBuffer silent;
    silent.sample_rate = sr;
    silent.samples.assign(8192, 0.0);
    const F0Track sil = hps_f0(stft_magnitude(silent, tonal_block_spec()), {4, 50.0, 2000.0, 1e-6});
    for (double ff : sil.frequencies)
        CHECK(ff == 0.0);
}

TEST_CASE("hps_f0 validates order and range") {
    const AudioBuffer buf = synth::sine(440.0, 0.2);
    const Spectrogram sg = stft_magnitude(buf, tonal_block_spec());
    CHECK_THROWS_AS(hps_f0(sg, {1, 50.0, 1000.0, 1e-6}), Error);
    CHECK_THROWS_AS(hps_f0(sg, {4, 50.0, 9000.0, 1e-6}), Error); // 4 * 9000 > nyquist
}

TEST_CASE("iterative subtraction separates two non-colliding complexes") {
    const int sr = 44100;
    const std::size_t block = 4096;
    const double bin_hz = static_cast<double>(sr) / block;
    const double f1 = 20.0 * bin_hz;  // bin-aligned, no leakage
    const double f2 = 31.0 * bin_hz;

    AudioBuffer buf = synth::harmonic_complex(f1, 4, 0.3, sr, true);
    synth::mix_into(buf, synth::harmonic_complex(f2, 4, 0.3, sr, true));

    const Spectrogram sg = stft_magnitude(buf, {block, 2048, Window::rectangular});
    IterativeSubtractionParams params;
    params.max_voices = 4;
    params.energy_floor_ratio = 0.05;
    params.hps = {4, 50.0, 1200.0, 1e-6};
    const auto candidates = iterative_subtraction_f0(sg, params);

    // stable interior frame
    const std::size_t t = sg.num_frames() / 2;
    REQUIRE(candidates[t].size() >= 2);
    std::vector<double> found = candidates[t];
    std::sort(found.begin(), found.end());
    CHECK(std::abs(found[0] - f1) <= bin_hz + 1e-9);
    CHECK(std::abs(found[1] - f2) <= bin_hz + 1e-9);
}

TEST_CASE("iterative subtraction on silence and voice caps") {
    AudioBuffer silent;
    silent.sample_rate = 44100;
    silent.samples.assign(8192, 0.0);
    const Spectrogram sg = stft_magnitude(silent, tonal_block_spec());
    const auto empty = iterative_subtraction_f0(sg, {});
    for (const auto& frame : empty)
        CHECK(frame.empty());

    const AudioBuffer buf = synth::harmonic_complex(220.0, 4, 0.3, 44100, true);
    const Spectrogram sg2 = stft_magnitude(buf, tonal_block_spec());
    IterativeSubtractionParams one;
    one.max_voices = 1;
    const auto capped = iterative_subtraction_f0(sg2, one);
    for (const auto& frame : capped)
        CHECK(frame.size() <= 1);

    IterativeSubtractionParams bad;
    bad.energy_floor_ratio = 1.5;
    CHECK_THROWS_AS(iterative_subtraction_f0(sg2, bad), Error);
}
