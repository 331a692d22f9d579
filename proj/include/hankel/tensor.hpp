#pragma once

// Axis-by-axis application of dense matrices to tensor-grid samples.

#include <complex>
#include <cstddef>
#include <vector>

#include "parallel.hpp"

namespace hankel {

/// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
    double& operator()(std::size_t i, std::size_t k) { return a[i * cols + k]; }
    double operator()(std::size_t i, std::size_t k) const { return a[i * cols + k]; }
};

/// out[..., i, ...] = sum_k M[i][k] in[..., k, ...] along `axis`.
template <class T>
std::vector<T> apply_along_axis(const std::vector<T>& in, const std::vector<std::size_t>& shape, std::size_t axis,
                                const Matrix& m) {
    std::size_t inner = 1, outer = 1;
    for (std::size_t j = axis + 1; j < shape.size(); ++j) inner *= shape[j];
    for (std::size_t j = 0; j < axis; ++j) outer *= shape[j];
    const std::size_t nk = shape[axis], ni = m.rows;
    std::vector<T> out(outer * ni * inner);
    parallel_for(outer * ni, [&](std::size_t oi) {
        const std::size_t o = oi / ni, i = oi % ni;
        const double* row = &m.a[i * m.cols];
        T* dst = &out[(o * ni + i) * inner];
        for (std::size_t r = 0; r < inner; ++r) dst[r] = T{};
        for (std::size_t k = 0; k < nk; ++k) {
            const double c = row[k];
            if (c == 0.0) continue;
            const T* src = &in[(o * nk + k) * inner];
            for (std::size_t r = 0; r < inner; ++r) dst[r] += c * src[r];
        }
    });
    return out;
}

/// Applies one matrix per axis.
template <class T>
std::vector<T> apply_tensor(std::vector<T> v, std::vector<std::size_t> shape, const std::vector<Matrix>& mats) {
    for (std::size_t j = 0; j < mats.size(); ++j) {
        v = apply_along_axis(v, shape, j, mats[j]);
        shape[j] = mats[j].rows;
    }
    return v;
}

} // namespace hankel
