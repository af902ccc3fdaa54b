#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aca/error.hpp"
#include "aca/reference.hpp"
#include "aca/structure.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace aca;

namespace {

std::vector<double> times_for(std::size_t n, double dt = 0.05) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = static_cast<double>(i) * dt;
    return t;
}

// ideal SSM: ones inside diagonal segment blocks, zeros elsewhere
SelfSimilarityMatrix ideal_block_ssm(const std::vector<std::size_t>& block_sizes) {
    std::size_t n = 0;
    for (std::size_t b : block_sizes)
        n += b;
    SelfSimilarityMatrix m;
    m.values = Matrix(n, n);
    m.frame_times = times_for(n);
    std::size_t start = 0;
    for (std::size_t b : block_sizes) {
        for (std::size_t i = start; i < start + b; ++i)
            for (std::size_t j = start; j < start + b; ++j)
                m.values(i, j) = 1.0;
        start += b;
    }
    return m;
}

} // namespace

TEST_CASE("ssm of identical frames is all ones") {
    Matrix frames(5, 3, 0.0);
    for (std::size_t i = 0; i < 5; ++i) {
        frames(i, 0) = 0.2;
        frames(i, 1) = 0.5;
        frames(i, 2) = 0.1;
    }
    const SelfSimilarityMatrix m = ssm(frames, times_for(5));
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            CHECK(m.values(i, j) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssm of one-hot chroma blocks is an exact block pattern") {
    ChromaSequence seq;
    seq.frame_times = times_for(4);
    ChromaVector c{};
    c[0] = 1.0;
    ChromaVector g{};
    g[7] = 1.0;
    seq.frames = {c, c, g, g};
    const SelfSimilarityMatrix m = ssm(seq);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            const bool same = (i < 2) == (j < 2);
            CHECK(m.values(i, j) == (same ? 1.0 : 0.0));
        }
}

TEST_CASE("ssm symmetry is exact and values stay within bounds") {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix frames(40, 7);
    for (double& x : frames.data())
        x = dist(rng);
    const SelfSimilarityMatrix m = ssm(frames, times_for(40));
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(m.values(i, i) == 1.0);
        for (std::size_t j = 0; j < 40; ++j) {
            CHECK(m.values(i, j) == m.values(j, i)); // bitwise
            CHECK(m.values(i, j) >= -1.0 - 1e-12);
            CHECK(m.values(i, j) <= 1.0 + 1e-12);
        }
    }

    // non-negative input keeps the matrix in [0, 1]
    Matrix nonneg(20, 5);
    std::uniform_real_distribution<double> pos(0.0, 1.0);
    for (double& x : nonneg.data())
        x = pos(rng);
    const SelfSimilarityMatrix p = ssm(nonneg, times_for(20));
    for (double v : p.values.data())
        CHECK(v >= 0.0);

    CHECK_THROWS_AS(ssm(Matrix(1, 3, 1.0), times_for(1)), Error);
}

TEST_CASE("ssm with an all-zero frame follows the declared convention") {
    Matrix frames(3, 4, 0.0);
    frames(0, 1) = 1.0;
    frames(2, 1) = 1.0; // frame 1 stays all-zero
    const SelfSimilarityMatrix m = ssm(frames, times_for(3));
    CHECK(m.values(1, 1) == 1.0);
    CHECK(m.values(0, 1) == 0.0);
    CHECK(m.values(1, 2) == 0.0);
    CHECK(m.values(0, 2) == doctest::Approx(1.0));
}

TEST_CASE("parallel ssm equals the serial reference bit for bit") {
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Matrix frames(64, 12);
    for (double& x : frames.data())
        x = dist(rng);
    const SelfSimilarityMatrix parallel = ssm(frames, times_for(64));
    const Matrix serial = ref::ssm_serial(frames);
    CHECK(parallel.values == serial);
}

TEST_CASE("boundary detection on a two-block ideal ssm") {
    const SelfSimilarityMatrix m = ideal_block_ssm({50, 50});
    const SegmentBoundaries b = boundary_novelty(m);
    REQUIRE(b.times.size() == 1);
    const double dt = 0.05;
    CHECK(std::abs(b.times[0] - 50.0 * dt) <= dt + 1e-9);
}

TEST_CASE("boundary detection on a three-block ideal ssm") {
    const SelfSimilarityMatrix m = ideal_block_ssm({50, 40, 60});
    const SegmentBoundaries b = boundary_novelty(m);
    REQUIRE(b.times.size() == 2);
    const double dt = 0.05;
    CHECK(std::abs(b.times[0] - 50.0 * dt) <= dt + 1e-9);
    CHECK(std::abs(b.times[1] - 90.0 * dt) <= dt + 1e-9);
}

TEST_CASE("all-ones ssm produces no boundaries") {
    const SelfSimilarityMatrix m = ideal_block_ssm({100});
    const SegmentBoundaries b = boundary_novelty(m);
    CHECK(b.times.empty());
    for (double v : b.novelty.values)
        CHECK(v == 0.0);
}

TEST_CASE("boundaries mirror when the frame order is reversed") {
    const SelfSimilarityMatrix m = ideal_block_ssm({30, 45, 61});
    const std::size_t n = m.size();
    SelfSimilarityMatrix reversed;
    reversed.frame_times = m.frame_times;
    reversed.values = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            reversed.values(i, j) = m.values(n - 1 - i, n - 1 - j);

    const SegmentBoundaries fwd = boundary_novelty(m);
    const SegmentBoundaries rev = boundary_novelty(reversed);
    REQUIRE(fwd.times.size() == rev.times.size());

    const double duration = m.frame_times.back();
    std::vector<double> mirrored;
    for (double t : rev.times)
        mirrored.push_back(duration - t);
    std::sort(mirrored.begin(), mirrored.end());
    const double dt = 0.05;
    for (std::size_t i = 0; i < fwd.times.size(); ++i)
        CHECK(std::abs(fwd.times[i] - mirrored[i]) <= dt + 1e-9);
}

TEST_CASE("boundary detection validates the kernel size") {
    const SelfSimilarityMatrix m = ideal_block_ssm({10, 10});
    BoundaryParams params;
    params.kernel_half_size = 16; // kernel 32 > 20 frames
    CHECK_THROWS_AS(boundary_novelty(m, params), Error);
}

TEST_CASE("repetition lags on an exactly periodic sequence") {
    // period 40: one-hot chroma cycling through 8 classes, 120 frames
    ChromaSequence seq;
    seq.frame_times = times_for(120);
    for (std::size_t i = 0; i < 120; ++i) {
        ChromaVector v{};
        v[(i / 5) % 8] = 1.0; // 8 distinct 5-frame states, period 40
        seq.frames.push_back(v);
    }
    const SelfSimilarityMatrix m = ssm(seq);
    const RepetitionReport report = repetition_lags(m, 10 * 0.05, 0.6);
    REQUIRE(!report.lags.empty());
    CHECK(report.lags[0].lag_frames == 40);
    CHECK(report.lags[0].support == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("repetition lags: random orthogonal frames have no support") {
    // frames cycle through 37 one-hot dimensions, no period within range
    Matrix frames(74, 37, 0.0);
    for (std::size_t i = 0; i < 74; ++i)
        frames(i, i % 37) = 1.0;
    const SelfSimilarityMatrix m = ssm(frames, times_for(74));
    const RepetitionReport report = repetition_lags(m, 0.05, 0.6);
    // the only qualifying lag is the 37-frame cycle itself
    for (const RepetitionLag& lag : report.lags)
        CHECK(lag.lag_frames % 37 == 0);
}

TEST_CASE("all-ones ssm merges to the smallest lag in range") {
    const SelfSimilarityMatrix m = ideal_block_ssm({80});
    const RepetitionReport report = repetition_lags(m, 12 * 0.05, 0.5);
    REQUIRE(report.lags.size() == 1);
    CHECK(report.lags[0].lag_frames == 12);
    CHECK(report.lags[0].support == doctest::Approx(1.0));

    CHECK_THROWS_AS(repetition_lags(m, 100.0, 0.5), Error); // beyond duration
}
