// Benchmarks the OpenMP kernels against their serial reference
// implementations and cross-checks that both produce the same numbers.

#include "aca/audio.hpp"
#include "aca/nmf.hpp"
#include "aca/reference.hpp"
#include "aca/signal.hpp"
#include "aca/structure.hpp"
#include "aca/tonal.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using clock_type = std::chrono::steady_clock;

double time_once(const std::function<void()>& fn) {
    const auto start = clock_type::now();
    fn();
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

double best_of(int repeats, const std::function<void()>& fn) {
    double best = 1e300;
    for (int i = 0; i < repeats; ++i)
        best = std::min(best, time_once(fn));
    return best;
}

void report(const char* name, double serial_s, double parallel_s, double max_abs_diff) {
    std::printf("%-14s serial %8.3f ms   openmp %8.3f ms   speedup %5.2fx   max|diff| %g\n",
                name, serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s, max_abs_diff);
}

double max_abs_diff(const aca::Matrix& a, const aca::Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

} // namespace

int main(int argc, char** argv) {
    double seconds = 30.0;
    std::size_t ssm_frames = 1200;
    std::size_t nmf_bins = 513;
    std::size_t nmf_frames = 400;
    std::size_t nmf_rank = 16;
    std::size_t nmf_iterations = 30;
    int repeats = 3;

    CLI::App app{"kernel benchmarks: serial reference vs OpenMP"};
    app.add_option("--seconds", seconds, "length of the benchmark signal");
    app.add_option("--ssm-frames", ssm_frames, "frames in the SSM benchmark");
    app.add_option("--nmf-iterations", nmf_iterations, "NMF iterations");
    app.add_option("--repeats", repeats, "repetitions, best time wins");
    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: not enabled in this build\n");
#endif

    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    aca::AudioBuffer buffer;
    buffer.sample_rate = 44100;
    buffer.samples.resize(static_cast<std::size_t>(seconds * buffer.sample_rate));
    for (double& x : buffer.samples)
        x = dist(rng);

    // STFT
    {
        const aca::BlockSpec spec{4096, 1024, aca::Window::hann};
        aca::Matrix serial_result;
        aca::Spectrogram parallel_result;
        const double serial_s =
            best_of(repeats, [&] { serial_result = aca::ref::stft_magnitudes_serial(buffer, spec); });
        const double parallel_s =
            best_of(repeats, [&] { parallel_result = aca::stft_magnitude(buffer, spec); });
        report("stft", serial_s, parallel_s,
               max_abs_diff(serial_result, parallel_result.magnitudes));
    }

    // SSM
    {
        aca::Matrix frames(ssm_frames, 12);
        std::uniform_real_distribution<double> pos(0.0, 1.0);
        for (double& x : frames.data())
            x = pos(rng);
        std::vector<double> times(ssm_frames);
        for (std::size_t i = 0; i < ssm_frames; ++i)
            times[i] = 0.05 * static_cast<double>(i);

        aca::Matrix serial_result;
        aca::SelfSimilarityMatrix parallel_result;
        const double serial_s = best_of(repeats, [&] { serial_result = aca::ref::ssm_serial(frames); });
        const double parallel_s =
            best_of(repeats, [&] { parallel_result = aca::ssm(frames, times); });
        report("ssm", serial_s, parallel_s, max_abs_diff(serial_result, parallel_result.values));
    }

    // NMF
    {
        aca::Matrix v(nmf_bins, nmf_frames);
        std::uniform_real_distribution<double> pos(0.0, 1.0);
        for (double& x : v.data())
            x = pos(rng);

        aca::NmfResult serial_result;
        aca::NmfResult parallel_result;
        const double serial_s = best_of(
            repeats, [&] { serial_result = aca::ref::nmf_serial(v, nmf_rank, nmf_iterations, 7); });
        const double parallel_s =
            best_of(repeats, [&] { parallel_result = aca::nmf(v, nmf_rank, nmf_iterations, 7); });
        const double diff = std::max(max_abs_diff(serial_result.templates, parallel_result.templates),
                                     max_abs_diff(serial_result.activations, parallel_result.activations));
        report("nmf", serial_s, parallel_s, diff);
    }

    // ACF (fast transform path vs brute-force reference)
    {
        std::vector<double> frame(4096);
        for (double& x : frame)
            x = dist(rng);
        std::vector<double> serial_result, parallel_result;
        const double serial_s = best_of(repeats, [&] { serial_result = aca::ref::acf_brute(frame); });
        const double parallel_s = best_of(repeats, [&] { parallel_result = aca::acf(frame); });
        double diff = 0.0;
        for (std::size_t i = 0; i < serial_result.size(); ++i)
            diff = std::max(diff, std::abs(serial_result[i] - parallel_result[i]));
        report("acf", serial_s, parallel_s, diff);
    }

    return 0;
}
