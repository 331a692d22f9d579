#pragma once

// Bessel heat kernel W_t^lambda, its time derivative, the Euclidean heat
// kernel, and the semigroup acting on grid functions.

#include <array>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "hankel.hpp"
#include "measure_grid.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"
#include "tensor.hpp"

namespace hankel {

struct HeatKernelParams {
    Order order;
    double t;

    HeatKernelParams(Order o, double time) : order(std::move(o)), t(time) {
        if (!(t > 0.0) || !std::isfinite(t)) throw parameter_error("heat kernel time must be positive");
    }
};

namespace detail {

inline void check_coords(double u, double v) {
    if (!(u > 0.0) || !(v > 0.0) || !std::isfinite(u) || !std::isfinite(v))
        throw input_error("heat kernel coordinates must be positive and finite");
}

} // namespace detail

/// One-axis kernel and the bracket b with d/dt W = W b / t.
struct AxisHeat {
    double w;
    double bracket;
};

/// W_t^lambda(u, v) = (2t)^{-nu-1} G(z) e^{-(u-v)^2/4t} with nu = lambda - 1/2,
/// z = uv/2t and G(z) = z^{-nu} e^{-z} I_nu(z). Differentiating in t gives
/// three terms (orders nu and nu+1); with D = z(1 - I_{nu+1}/I_nu) they
/// collapse to d/dt W = W b / t, b = (u-v)^2/4t - (nu+1) + D.
class BesselHeatAxis {
public:
    explicit BesselHeatAxis(double lambda) : nu_(BesselOrder(lambda - 0.5).nu) {
        Order(std::vector<double>{lambda});
        origin_ = detail::scaled_origin_value(nu_);
        const double mu0 = 4.0 * nu_ * nu_, mu1 = 4.0 * (nu_ + 1.0) * (nu_ + 1.0);
        a_[0] = b_[0] = 1.0;
        for (int k = 1; k < kAsymTerms; ++k) {
            const double odd = (2.0 * k - 1.0) * (2.0 * k - 1.0);
            a_[k] = a_[k - 1] * (mu0 - odd) / (4.0 * k);
            b_[k] = b_[k - 1] * (mu1 - odd) / (4.0 * k);
        }
        asym_from_ = 30.0;
        while (!(detail::i_use_asymptotic(nu_, asym_from_) && detail::i_use_asymptotic(nu_ + 1.0, asym_from_)))
            asym_from_ *= 1.25;
    }

    double nu() const { return nu_; }

    AxisHeat operator()(double t, double u, double v, bool with_bracket = true) const {
        detail::check_coords(u, v);
        const double z = u * v / (2.0 * t);
        const double d = u - v;
        const double gauss = d * d / (4.0 * t);
        double g, defect = 0.0;
        if (z >= asym_from_) {
            double den = 0.0, num = 0.0, pw = 1.0;
            for (int k = 0; k < kAsymTerms; ++k) {
                den += a_[k] * pw;
                num += (a_[k] - b_[k]) * pw;
                pw *= -1.0 / (2.0 * z);
            }
            g = std::exp(-nu_ * std::log(z)) * den / std::sqrt(2.0 * std::numbers::pi * z);
            defect = z * num / den;
        } else {
            // Reduced series of orders nu and nu+1 in one pass.
            const double q = 0.25 * z * z;
            double t0 = 1.0, t1 = 1.0, s0 = 1.0, s1 = 1.0;
            for (int k = 1; k < 1000; ++k) {
                t0 *= q / (k * (nu_ + k));
                t1 *= q / (k * (nu_ + 1.0 + k));
                s0 += t0;
                s1 += t1;
                if (t0 <= 1e-18 * s0 && k > 0.5 * z) break;
            }
            g = origin_ * std::exp(-z) * s0;
            if (with_bracket) defect = z * (1.0 - z * s1 / (2.0 * (nu_ + 1.0) * s0));
        }
        const double w = std::exp(-(nu_ + 1.0) * std::log(2.0 * t) - gauss) * g;
        return {w, gauss - (nu_ + 1.0) + defect};
    }

private:
    double nu_, origin_, asym_from_;
    std::array<double, kAsymTerms> a_{}, b_{};
};

inline double heat_kernel_1d(double lambda, double t, double u, double v) {
    if (!(t > 0.0)) throw parameter_error("heat kernel time must be positive");
    return BesselHeatAxis(lambda)(t, u, v, false).w;
}

inline AxisHeat heat_axis(double lambda, double t, double u, double v) {
    if (!(t > 0.0)) throw parameter_error("heat kernel time must be positive");
    return BesselHeatAxis(lambda)(t, u, v);
}

inline double dt_heat_kernel_1d(double lambda, double t, double u, double v) {
    const AxisHeat a = heat_axis(lambda, t, u, v);
    return a.w * a.bracket / t;
}

/// prod_j W_t^{lambda_j}(x_j, y_j).
inline double heat_kernel(const HeatKernelParams& p, const Point& x, const Point& y) {
    double w = 1.0;
    for (std::size_t j = 0; j < p.order.n(); ++j) w *= heat_kernel_1d(p.order[j], p.t, x[j], y[j]);
    return w;
}

/// d/dt prod_j W_t^{lambda_j}: the Leibniz sum over axes,
/// sum_i (dW_i/dt) prod_{j != i} W_j = prod_j W_j * sum_i b_i / t.
inline double dt_heat_kernel(const HeatKernelParams& p, const Point& x, const Point& y) {
    double w = 1.0, b = 0.0;
    for (std::size_t j = 0; j < p.order.n(); ++j) {
        const AxisHeat a = heat_axis(p.order[j], p.t, x[j], y[j]);
        w *= a.w;
        b += a.bracket;
    }
    return w * b / p.t;
}

/// Classical heat kernel prod_j e^{-(x_j-y_j)^2/4t} / (2 sqrt(pi t)) with
/// closed-form derivatives (spatial ones taken in x_1).
struct EuclideanKernelValue {
    double value;
    double dt;
    double dx1;
    double dx1x1;
};

inline EuclideanKernelValue euclidean_kernel(double t, const Point& x, const Point& y) {
    if (!(t > 0.0)) throw parameter_error("heat kernel time must be positive");
    double r2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) r2 += (x[j] - y[j]) * (x[j] - y[j]);
    const double n = static_cast<double>(x.size());
    const double val = std::exp(-r2 / (4.0 * t)) * std::pow(4.0 * std::numbers::pi * t, -0.5 * n);
    const double d1 = x[0] - y[0];
    return {val, val * (r2 / (4.0 * t * t) - 0.5 * n / t), -val * d1 / (2.0 * t),
            val * (d1 * d1 / (4.0 * t * t) - 1.0 / (2.0 * t))};
}

/// One-axis Euclidean kernel.
inline double euclidean_kernel_1d(double t, double u, double v) {
    const double d = u - v;
    return std::exp(-d * d / (4.0 * t)) / (2.0 * std::sqrt(std::numbers::pi * t));
}

/// Result of the spectral-side quadrature of W_t^lambda(x, y).
struct SpectralHeatCheck {
    double quadrature;
    double closed_form;
    double residual;
    double truncation_radius;
};

namespace detail {

// int_0^Z e^{-t z^2} K(zx) K(zy) z^{2 lambda} dz with a weighted end panel;
// also returns the integral of the absolute integrand.
inline std::pair<double, double> spectral_heat_sum(double lambda, double t, double x, double y, double radius, int q) {
    const double width = std::min({1.0 / std::sqrt(t), 2.0 / (x + y), radius});
    auto g = [&](double z) { return std::exp(-t * z * z) * hankel_kernel(lambda, z * x) * hankel_kernel(lambda, z * y); };
    const double z0 = std::min(width, radius);
    const Rule& jr = gauss_jacobi_unit(q, 2.0 * lambda);
    double s = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < jr.x.size(); ++i) {
        const double v = jr.w[i] * g(z0 * jr.x[i]);
        s += v;
        mass += std::abs(v);
    }
    s *= std::pow(z0, 2.0 * lambda + 1.0);
    mass *= std::pow(z0, 2.0 * lambda + 1.0);
    const int pieces = static_cast<int>(std::ceil((radius - z0) / width));
    for (int p = 0; p < pieces; ++p) {
        const double a = z0 + (radius - z0) * p / pieces, b = z0 + (radius - z0) * (p + 1) / pieces;
        s += gl_panel([&](double z) { return g(z) * std::pow(z, 2.0 * lambda); }, a, b, q);
        mass += gl_panel([&](double z) { return std::abs(g(z)) * std::pow(z, 2.0 * lambda); }, a, b, q);
    }
    return {s, mass};
}

} // namespace detail

/// Compares the spectral integral of the heat kernel with the closed form.
inline SpectralHeatCheck heat_kernel_spectral_check(double lambda, double t, double x, double y) {
    Order(std::vector<double>{lambda});
    detail::check_coords(x, y);
    if (!(t > 0.0)) throw parameter_error("heat kernel time must be positive");
    // e^{-t Z^2} < 1e-18 beyond the radius; the z^{2 lambda} weight is
    // absorbed by the (xy z^2)^{-lambda} envelope of the kernel product.
    const double radius = std::sqrt(41.5 / t);
    const double coarse = detail::spectral_heat_sum(lambda, t, x, y, radius, 16).first;
    const auto [fine, mass] = detail::spectral_heat_sum(lambda, t, x, y, radius, 24);
    const double exact = heat_kernel_1d(lambda, t, x, y);
    // Far from the diagonal W is exponentially small against the oscillating
    // integrand, so the relative residual there reflects cancellation, not
    // a failure of the rule.
    if (std::abs(coarse - fine) > 1e-12 * mass)
        throw convergence_error("spectral heat-kernel quadrature did not settle");
    return {fine, exact, std::abs(fine - exact) / exact, radius};
}

inline double heat_kernel_spectral_residual(double lambda, double t, double x, double y) {
    return heat_kernel_spectral_check(lambda, t, x, y).residual;
}

/// Per-axis matrices W_t(x_i, y_k) * weight_k.
inline std::vector<Matrix> semigroup_matrices(const HeatKernelParams& p, const WeightedGrid& g) {
    if (!(p.order == g.order())) throw grid_mismatch("semigroup order differs from the grid's order");
    std::vector<Matrix> mats;
    for (std::size_t j = 0; j < g.dim(); ++j) {
        const Axis& ax = g.axis(j);
        Matrix m(ax.size(), ax.size());
        const BesselHeatAxis heat(ax.lambda);
        parallel_for(ax.size(), [&](std::size_t i) {
            for (std::size_t k = 0; k < ax.size(); ++k)
                m(i, k) = heat(p.t, ax.nodes[i], ax.nodes[k], false).w * ax.weights[k];
        });
        mats.push_back(std::move(m));
    }
    return mats;
}

/// W_t f(x) = int prod_j W_t(x_j, y_j) f(y) dm(y).
inline GridFunction semigroup_apply(const HeatKernelParams& p, const GridFunction& f) {
    const auto& g = *f.grid();
    return GridFunction(f.grid(), apply_tensor(f.values(), g.shape(), semigroup_matrices(p, g)));
}

} // namespace hankel
