#pragma once

// The n-dimensional Hankel transform as dense per-axis contractions, and the
// Bessel operator by finite differences on the grid nodes.

#include <cmath>
#include <vector>

#include "measure_grid.hpp"
#include "specfun.hpp"
#include "tensor.hpp"

namespace hankel {

/// Hankel kernel (xy)^{-lambda+1/2} J_{lambda-1/2}(xy).
inline double hankel_kernel(double lambda, double xy) { return bessel_j_scaled(BesselOrder(lambda - 0.5), xy); }

class TransformPlan {
public:
    explicit TransformPlan(Grid source) : TransformPlan(source, source) {}

    TransformPlan(Grid source, Grid frequency) : source_(std::move(source)), frequency_(std::move(frequency)) {
        if (!(source_->order() == frequency_->order())) throw grid_mismatch("plan grids carry different orders");
        const std::size_t n = source_->dim();
        mats_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const Axis& ys = source_->axis(j);
            const Axis& xs = frequency_->axis(j);
            Matrix m(xs.size(), ys.size());
            parallel_for(xs.size(), [&](std::size_t i) {
                for (std::size_t k = 0; k < ys.size(); ++k)
                    m(i, k) = hankel_kernel(ys.lambda, xs.nodes[i] * ys.nodes[k]) * ys.weights[k];
            });
            mats_[j] = std::move(m);
        }
    }

    const Grid& source() const { return source_; }
    const Grid& frequency() const { return frequency_; }
    const Order& order() const { return source_->order(); }
    const std::vector<Matrix>& matrices() const { return mats_; }

    TransformPlan reversed() const { return source_ == frequency_ ? *this : TransformPlan(frequency_, source_); }

private:
    Grid source_, frequency_;
    std::vector<Matrix> mats_;
};

/// h(f) sampled on the plan's frequency grid.
inline GridFunction hankel_apply(const TransformPlan& plan, const GridFunction& f) {
    if (f.grid() != plan.source() && !f.grid()->same_layout(*plan.source()))
        throw grid_mismatch("hankel_apply: function does not live on the plan's source grid");
    auto v = apply_tensor(f.values(), plan.source()->shape(), plan.matrices());
    GridFunction out(plan.frequency(), std::move(v));
    if (!out.all_finite()) throw convergence_error("hankel_apply: non-finite transform values");
    return out;
}

/// ||h(h(f)) - f||_2 / ||f||_2 (0 for f = 0).
inline double self_inverse_residual(const TransformPlan& plan, const GridFunction& f) {
    const double nf = lp_norm(f, 2.0);
    if (nf == 0.0) return 0.0;
    const GridFunction hf = hankel_apply(plan, f);
    GridFunction back = hankel_apply(plan.reversed(), hf);
    return lp_norm(GridFunction(f.grid(), std::move(back.values())) - f, 2.0) / nf;
}

/// |int h(f) h(g) dm - int f g dm| / (||f||_2 ||g||_2) (bilinear form).
inline double plancherel_residual(const TransformPlan& plan, const GridFunction& f, const GridFunction& g) {
    const double den = lp_norm(f, 2.0) * lp_norm(g, 2.0);
    if (den == 0.0) return 0.0;
    const GridFunction hf = hankel_apply(plan, f), hg = hankel_apply(plan, g);
    GridFunction a(hf.grid()), b(f.grid());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = hf[i] * hg[i];
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = f[i] * g[i];
    return std::abs(integrate(a) - integrate(b)) / den;
}

/// Finite-difference weights (Fornberg) for derivatives 0..m at x0.
inline std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& xs, int m) {
    const std::size_t n = xs.size();
    std::vector<std::vector<double>> c(m + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0, c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const int mn = std::min<int>(static_cast<int>(i), m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

/// Matrix of the 1-D Bessel operator -(d^2/dx^2 + (2 lambda/x) d/dx) on the
/// axis nodes, from `width`-point stencils (one-sided near the ends).
inline Matrix bessel_operator_matrix(const Axis& ax, int width) {
    const std::size_t n = ax.size();
    if (width < 3 || static_cast<std::size_t>(width) > n)
        throw grid_mismatch("bessel_operator_apply: stencil span exceeds the axis");
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t half = static_cast<std::size_t>(width) / 2;
        std::size_t start = i > half ? i - half : 0;
        if (start + width > n) start = n - width;
        std::vector<double> xs(ax.nodes.begin() + start, ax.nodes.begin() + start + width);
        const auto c = fd_weights(ax.nodes[i], xs, 2);
        const double drift = 2.0 * ax.lambda / ax.nodes[i];
        for (int k = 0; k < width; ++k) m(i, start + k) = -(c[2][k] + drift * c[1][k]);
    }
    return m;
}

/// Delta f = sum_j -(d^2/dx_j^2 + (2 lambda_j/x_j) d/dx_j) f.
inline GridFunction bessel_operator_apply(const GridFunction& f, int stencil_width = 9) {
    const auto& g = *f.grid();
    const auto shape = g.shape();
    std::vector<cplx> total(f.size(), cplx{});
    for (std::size_t j = 0; j < g.dim(); ++j) {
        const auto part = apply_along_axis(f.values(), shape, j, bessel_operator_matrix(g.axis(j), stencil_width));
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += part[i];
    }
    return GridFunction(f.grid(), std::move(total));
}

} // namespace hankel
