#include "aca/nmf.hpp"

#include "aca/error.hpp"

#include <algorithm>
#include <random>

namespace aca {

namespace {

// C = A * B, fixed inner loop order so results do not depend on the
// number of threads
void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(a.rows()); ++i) {
        double* crow = c.row(i);
        std::fill(crow, crow + c.cols(), 0.0);
        const double* arow = a.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                crow[j] += aik * brow[j];
        }
    }
}

// C = A^T * B
void matmul_at(const Matrix& a, const Matrix& b, Matrix& c) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(a.cols()); ++i) {
        double* crow = c.row(i);
        std::fill(crow, crow + c.cols(), 0.0);
        for (std::size_t k = 0; k < a.rows(); ++k) {
            const double aki = a(k, i);
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                crow[j] += aki * brow[j];
        }
    }
}

// C = A * B^T
void matmul_bt(const Matrix& a, const Matrix& b, Matrix& c) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(a.rows()); ++i) {
        double* crow = c.row(i);
        const double* arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k)
                acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
}

double squared_frobenius_error(const Matrix& v, const Matrix& wh) {
    double acc = 0.0;
    const std::vector<double>& a = v.data();
    const std::vector<double>& b = wh.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

} // namespace

NmfResult nmf(const Matrix& v, std::size_t rank, std::size_t iterations, std::uint64_t seed) {
    if (rank < 1)
        throw Error(ErrorCode::InvalidArgument, "nmf rank must be >= 1");
    if (iterations < 1)
        throw Error(ErrorCode::InvalidArgument, "nmf iterations must be >= 1");
    if (v.rows() == 0 || v.cols() == 0)
        throw Error(ErrorCode::EmptyInput, "nmf input matrix is empty");
    for (double x : v.data())
        if (x < 0.0)
            throw Error(ErrorCode::InvalidArgument, "nmf input must be non-negative");

    const std::size_t bins = v.rows();
    const std::size_t frames = v.cols();

    NmfResult result;
    result.templates = Matrix(bins, rank);
    result.activations = Matrix(rank, frames);

    // uniform (0, 1] drawn directly from the engine words, reproducible
    // across platforms
    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    auto draw = [&rng]() {
        return (static_cast<double>(rng()) + 1.0) / 4294967296.0;
    };
    for (double& x : result.templates.data())
        x = draw();
    for (double& x : result.activations.data())
        x = draw();

    Matrix wh(bins, frames);
    Matrix wt_v(rank, frames);
    Matrix wt_wh(rank, frames);
    Matrix v_ht(bins, rank);
    Matrix wh_ht(bins, rank);

    result.loss_history.reserve(iterations);
    for (std::size_t it = 0; it < iterations; ++it) {
        // H <- H .* (W^T V) ./ (W^T W H)
        matmul(result.templates, result.activations, wh);
        matmul_at(result.templates, v, wt_v);
        matmul_at(result.templates, wh, wt_wh);
        {
            std::vector<double>& h = result.activations.data();
            const std::vector<double>& num = wt_v.data();
            const std::vector<double>& den = wt_wh.data();
            for (std::size_t i = 0; i < h.size(); ++i)
                h[i] = std::max(h[i] * num[i] / std::max(den[i], kNmfEpsilon), kNmfEpsilon);
        }

        // W <- W .* (V H^T) ./ (W H H^T)
        matmul(result.templates, result.activations, wh);
        matmul_bt(v, result.activations, v_ht);
        matmul_bt(wh, result.activations, wh_ht);
        {
            std::vector<double>& w = result.templates.data();
            const std::vector<double>& num = v_ht.data();
            const std::vector<double>& den = wh_ht.data();
            for (std::size_t i = 0; i < w.size(); ++i)
                w[i] = std::max(w[i] * num[i] / std::max(den[i], kNmfEpsilon), kNmfEpsilon);
        }

        matmul(result.templates, result.activations, wh);
        result.loss_history.push_back(squared_frobenius_error(v, wh));
    }
    return result;
}

} // namespace aca
