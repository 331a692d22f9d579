#pragma once

// Comparison and maximal operators around the principal-value kernel: the
// global and local-difference operators, truncated maximal operators, the
// Hardy/averaging/tail family, the Gaussian and Hardy-Littlewood maximal
// operators, kernel envelope probes and named test inputs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "measure_grid.hpp"
#include "multiplier.hpp"
#include "semigroup.hpp"
#include "specfun.hpp"
#include "symbol.hpp"
#include "tensor.hpp"

namespace hankel {

enum class RegionKind { local, global };

inline RegionKind region_of(const Point& x, const Point& y) {
    return in_local_region(x, y) ? RegionKind::local : RegionKind::global;
}

// ---------------------------------------------------------------------------
// Operators built on the ray tables of the principal-value path.

/// T^{m,*}, T*_loc, G|f| and L|f| at the same nodes, from the same ray tables.
struct ComparisonProfiles {
    Grid grid;
    std::vector<std::size_t> nodes;
    std::vector<double> t_star;
    std::vector<double> t_loc_star;
    std::vector<double> global;
    std::vector<double> local_diff;
    std::vector<double> final_truncation;  // |int_{|y-x| > eps_K} f K dm|

    RealGridFunction scatter(const std::vector<double>& v) const {
        RealGridFunction out(grid);
        for (std::size_t i = 0; i < nodes.size(); ++i) out[nodes[i]] = v[i];
        return out;
    }

    /// Largest T* - (G + L + T*_loc), relative to the right-hand side.
    double worst_decomposition_excess() const {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double rhs = global[i] + local_diff[i] + t_loc_star[i];
            worst = std::max(worst, (t_star[i] - rhs) / std::max(rhs, std::numeric_limits<double>::min()));
        }
        return worst;
    }

    /// T* <= G + L + T*_loc at every node, up to `slack` relative rounding.
    bool decomposition_holds(double slack = 1e-12) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (t_star[i] > (global[i] + local_diff[i] + t_loc_star[i]) * (1.0 + slack)) return false;
        return true;
    }
};

inline ComparisonProfiles comparison_profiles(const LaplaceSymbol& sym, const Grid& grid, const Source& src,
                                              const PVConfig& cfg, bool comparison = true) {
    cfg.validate();
    const KernelEvaluator ev(sym, grid->order(), cfg.time);
    ComparisonProfiles out;
    out.grid = grid;
    out.nodes = eval_node_list(*grid, cfg);
    const std::size_t m = out.nodes.size();
    out.t_star.assign(m, 0.0);
    out.t_loc_star.assign(m, 0.0);
    out.global.assign(m, 0.0);
    out.local_diff.assign(m, 0.0);
    out.final_truncation.assign(m, 0.0);
    parallel_for(m, [&](std::size_t i) {
        const PointProfile pr = point_profile(ev, grid->point(out.nodes[i]), src, cfg, {comparison});
        double s = 0.0, sl = 0.0;
        for (std::size_t k = 0; k < pr.truncated.size(); ++k) {
            s = std::max(s, std::abs(pr.truncated[k]));
            sl = std::max(sl, std::abs(pr.truncated_local[k]));
        }
        out.t_star[i] = s;
        out.t_loc_star[i] = sl;
        out.global[i] = pr.global_abs;
        out.local_diff[i] = pr.local_diff_abs;
        out.final_truncation[i] = std::abs(pr.truncated.back());
    });
    return out;
}

/// G(|f|)(x) = int_{global(x)} |f| |K^phi| dm.
inline RealGridFunction global_operator_apply(const LaplaceSymbol& sym, const Grid& grid, const Source& src,
                                              const PVConfig& cfg = {}) {
    const auto p = comparison_profiles(sym, grid, src, cfg);
    return p.scatter(p.global);
}

/// L(|f|)(x) = int_{local(x)} |f| |K^phi - prod (x_j y_j)^{-lambda_j} H^phi| dm.
inline RealGridFunction local_diff_operator_apply(const LaplaceSymbol& sym, const Grid& grid, const Source& src,
                                                  const PVConfig& cfg = {}) {
    const auto p = comparison_profiles(sym, grid, src, cfg);
    return p.scatter(p.local_diff);
}

/// T^{m,*} f(x) = max over the eps schedule of |int_{|y-x| > eps} f K^phi dm|.
inline RealGridFunction maximal_truncated_apply(const LaplaceSymbol& sym, const Grid& grid, const Source& src,
                                                const PVConfig& cfg = {}) {
    const auto p = comparison_profiles(sym, grid, src, cfg, false);
    return p.scatter(p.t_star);
}

/// T*_loc f(x): the same maximum for the kernel prod (x_j y_j)^{-lambda_j} H^phi on local(x).
inline RealGridFunction t_loc_star_apply(const LaplaceSymbol& sym, const Grid& grid, const Source& src,
                                         const PVConfig& cfg = {}) {
    const auto p = comparison_profiles(sym, grid, src, cfg);
    return p.scatter(p.t_loc_star);
}

// Grid-function forms. Positive operators see a panel-linear interpolant of |f|.

inline RealGridFunction global_operator_apply(const LaplaceSymbol& sym, const GridFunction& f,
                                              const PVConfig& cfg = {}) {
    return global_operator_apply(sym, f.grid(), positive_grid_source(f), cfg);
}

inline RealGridFunction local_diff_operator_apply(const LaplaceSymbol& sym, const GridFunction& f,
                                                  const PVConfig& cfg = {}) {
    return local_diff_operator_apply(sym, f.grid(), positive_grid_source(f), cfg);
}

inline RealGridFunction maximal_truncated_apply(const LaplaceSymbol& sym, const GridFunction& f,
                                                const PVConfig& cfg = {}) {
    return maximal_truncated_apply(sym, f.grid(), grid_source(f), cfg);
}

inline RealGridFunction t_loc_star_apply(const LaplaceSymbol& sym, const GridFunction& f, const PVConfig& cfg = {}) {
    return t_loc_star_apply(sym, f.grid(), grid_source(f), cfg);
}

// ---------------------------------------------------------------------------
// Hardy, averaging and tail operators. Each integrates the panel-linear
// interpolant of the samples exactly against y^s, so the weights are
// nonnegative and indicators aligned with panel ends are reproduced exactly.

namespace detail {

// int_u^v y^{a-1} dy for 0 <= u < v.
inline double power_integral(double u, double v, double a) {
    if (!(v > u)) return 0.0;
    if (u == 0.0) {
        if (!(a > 0.0)) throw parameter_error("power_integral: divergent at 0");
        return std::pow(v, a) / a;
    }
    const double l = std::log(v / u);
    if (a == 0.0) return l;
    return std::pow(u, a) * std::expm1(a * l) / a;
}

/// Weights w with int_a^b P(g)(y) y^s dy = sum_i w_i g_i, P the panel-linear
/// interpolant on the axis (zero outside it).
inline std::vector<double> axis_moments(const Axis& ax, double s, double a, double b) {
    std::vector<double> w(ax.size(), 0.0);
    b = std::min(b, ax.hi);
    a = std::max(a, ax.lo);
    if (!(b > a)) return w;
    auto constant = [&](double c, double d, std::size_t i) {
        const double u = std::max(c, a), v = std::min(d, b);
        if (v > u) w[i] += power_integral(u, v, s + 1.0);
    };
    for (const Panel& p : ax.panels) {
        if (p.b <= a || p.a >= b) continue;
        const std::size_t f = p.first, l = p.first + p.count - 1;
        constant(p.a, ax.nodes[f], f);
        for (std::size_t i = f; i < l; ++i) {
            const double zl = ax.nodes[i], zr = ax.nodes[i + 1];
            const double u = std::max(zl, a), v = std::min(zr, b);
            if (!(v > u)) continue;
            const double h = zr - zl;
            const double p1 = power_integral(u, v, s + 1.0), p2 = power_integral(u, v, s + 2.0);
            w[i] += std::max(0.0, (zr * p1 - p2) / h);
            w[i + 1] += std::max(0.0, (p2 - zl * p1) / h);
        }
        constant(ax.nodes[l], p.b, l);
    }
    return w;
}

inline void check_betas(const WeightedGrid& g, const std::vector<double>& betas) {
    if (betas.size() != g.dim()) throw grid_mismatch("one beta per axis required");
    for (std::size_t j = 0; j < betas.size(); ++j) {
        if (!(betas[j] > -0.5)) throw parameter_error("beta must exceed -1/2");
        if (betas[j] != g.order()[j]) throw grid_mismatch("grid weight differs from x^{2 beta}");
    }
}

// Per-axis matrices with row i = scale(x_i) * axis_moments(s, lo(x_i), hi(x_i)).
template <class Lo, class Hi, class Scale>
std::vector<Matrix> moment_matrices(const WeightedGrid& g, const std::vector<double>& s, Lo lo, Hi hi, Scale scale) {
    std::vector<Matrix> mats;
    for (std::size_t j = 0; j < g.dim(); ++j) {
        const Axis& ax = g.axis(j);
        Matrix m(ax.size(), ax.size());
        parallel_for(ax.size(), [&](std::size_t i) {
            const double x = ax.nodes[i];
            const auto w = axis_moments(ax, s[j], lo(x), hi(x));
            const double c = scale(j, x);
            for (std::size_t k = 0; k < w.size(); ++k) m(i, k) = c * w[k];
        });
        mats.push_back(std::move(m));
    }
    return mats;
}

// Contracts per-axis weight vectors against the samples.
inline cplx contract(const GridFunction& g, const std::vector<std::vector<double>>& w) {
    std::vector<Matrix> rows;
    for (const auto& v : w) {
        Matrix m(1, v.size());
        m.a = v;
        rows.push_back(std::move(m));
    }
    return apply_tensor(g.values(), g.grid()->shape(), rows)[0];
}

inline GridFunction abs_complex(const GridFunction& g) { return to_complex(abs(g)); }

} // namespace detail

/// H_beta g(x) = x^{-2beta-1} int_0^x g(y) y^{2beta} dy on a 1-D grid with weight x^{2beta}.
inline GridFunction hardy_apply(double beta, const GridFunction& g) {
    const auto& gr = *g.grid();
    if (gr.dim() != 1) throw grid_mismatch("hardy_apply needs a one-dimensional grid");
    detail::check_betas(gr, {beta});
    const auto mats = detail::moment_matrices(
        gr, {2.0 * beta}, [](double) { return 0.0; }, [](double x) { return x; },
        [&](std::size_t, double x) { return std::pow(x, -2.0 * beta - 1.0); });
    return GridFunction(g.grid(), apply_tensor(g.values(), gr.shape(), mats));
}

/// H_beta g at an arbitrary x > 0.
inline cplx hardy_eval(double beta, const GridFunction& g, double x) {
    const auto& gr = *g.grid();
    if (gr.dim() != 1) throw grid_mismatch("hardy_eval needs a one-dimensional grid");
    detail::check_betas(gr, {beta});
    if (!(x > 0.0)) throw input_error("hardy_eval: x must be positive");
    return std::pow(x, -2.0 * beta - 1.0) * detail::contract(g, {detail::axis_moments(gr.axis(0), 2.0 * beta, 0.0, x)});
}

/// H_{beta_1..beta_k} g(x) = |x|^{-2 sum(beta_j + 1/2)} int_0^{x_1/2}..int_0^{x_k/2} g prod y_j^{2beta_j} dy.
inline GridFunction tensor_hardy_apply(const std::vector<double>& betas, const GridFunction& g) {
    const auto& gr = *g.grid();
    detail::check_betas(gr, betas);
    std::vector<double> s;
    double p = 0.0;
    for (double b : betas) {
        s.push_back(2.0 * b);
        p += b + 0.5;
    }
    const auto mats = detail::moment_matrices(
        gr, s, [](double) { return 0.0; }, [](double x) { return 0.5 * x; }, [](std::size_t, double) { return 1.0; });
    GridFunction out(g.grid(), apply_tensor(g.values(), gr.shape(), mats));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::pow(detail::norm2(gr.point(i)), -p);
    return out;
}

inline cplx tensor_hardy_eval(const std::vector<double>& betas, const GridFunction& g, const Point& x) {
    const auto& gr = *g.grid();
    detail::check_betas(gr, betas);
    if (x.size() != gr.dim()) throw grid_mismatch("point dimension differs from grid");
    std::vector<std::vector<double>> w;
    double p = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] > 0.0)) throw input_error("tensor_hardy_eval: coordinates must be positive");
        w.push_back(detail::axis_moments(gr.axis(j), 2.0 * betas[j], 0.0, 0.5 * x[j]));
        p += betas[j] + 0.5;
    }
    return std::pow(detail::norm2(x), -p) * detail::contract(g, w);
}

/// prod_j x_j^{-2beta_j-1} int_0^{x_j} applied axis by axis to |g|; dominates tensor_hardy_apply(|g|).
inline RealGridFunction iterated_hardy_apply(const std::vector<double>& betas, const GridFunction& g) {
    const auto& gr = *g.grid();
    detail::check_betas(gr, betas);
    std::vector<double> s;
    for (double b : betas) s.push_back(2.0 * b);
    const auto mats = detail::moment_matrices(
        gr, s, [](double) { return 0.0; }, [](double x) { return x; },
        [&](std::size_t j, double x) { return std::pow(x, -2.0 * betas[j] - 1.0); });
    const auto a = abs(g);
    return RealGridFunction(g.grid(), apply_tensor(a.values(), gr.shape(), mats));
}

/// Z g(x) = prod_j x_j^{-2beta_j-1} int_{x_j/2}^{2x_j} g prod y_j^{2beta_j} dy.
inline GridFunction averaging_apply(const std::vector<double>& betas, const GridFunction& g) {
    const auto& gr = *g.grid();
    detail::check_betas(gr, betas);
    std::vector<double> s;
    for (double b : betas) s.push_back(2.0 * b);
    const auto mats = detail::moment_matrices(
        gr, s, [](double x) { return 0.5 * x; }, [](double x) { return 2.0 * x; },
        [&](std::size_t j, double x) { return std::pow(x, -2.0 * betas[j] - 1.0); });
    return GridFunction(g.grid(), apply_tensor(g.values(), gr.shape(), mats));
}

inline cplx averaging_eval(const std::vector<double>& betas, const GridFunction& g, const Point& x) {
    const auto& gr = *g.grid();
    detail::check_betas(gr, betas);
    if (x.size() != gr.dim()) throw grid_mismatch("point dimension differs from grid");
    std::vector<std::vector<double>> w;
    double c = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] > 0.0)) throw input_error("averaging_eval: coordinates must be positive");
        w.push_back(detail::axis_moments(gr.axis(j), 2.0 * betas[j], 0.5 * x[j], 2.0 * x[j]));
        c *= std::pow(x[j], -2.0 * betas[j] - 1.0);
    }
    return c * detail::contract(g, w);
}

/// S_k g(x) = int_{2x_1}^inf..int_{2x_k}^inf |g(y)| / (y_1..y_k) dy; k is the grid dimension.
inline RealGridFunction tail_operator_apply(const GridFunction& g) {
    const auto& gr = *g.grid();
    const std::vector<double> s(gr.dim(), -1.0);
    const double inf = std::numeric_limits<double>::infinity();
    const auto mats = detail::moment_matrices(
        gr, s, [](double x) { return 2.0 * x; }, [&](double) { return inf; }, [](std::size_t, double) { return 1.0; });
    const auto a = abs(g);
    return RealGridFunction(g.grid(), apply_tensor(a.values(), gr.shape(), mats));
}

inline double tail_operator_eval(const GridFunction& g, const Point& x) {
    const auto& gr = *g.grid();
    if (x.size() != gr.dim()) throw grid_mismatch("point dimension differs from grid");
    std::vector<std::vector<double>> w;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] > 0.0)) throw input_error("tail_operator_eval: coordinates must be positive");
        w.push_back(detail::axis_moments(gr.axis(j), -1.0, 2.0 * x[j], std::numeric_limits<double>::infinity()));
    }
    return detail::contract(detail::abs_complex(g), w).real();
}

// ---------------------------------------------------------------------------
// Maximal operators.

/// Log-uniform ladder of times. With `extend`, blocks of 16 rungs at the same
/// spacing are added below t_min until the maximal function moves by less than
/// `tol` of its peak, or t reaches `t_floor`.
struct TimeLadder {
    double t_min = 1e-4;
    double t_max = 1e2;
    int rungs = 64;
    bool extend = true;
    double tol = 1e-3;
    double t_floor = 1e-14;

    std::vector<double> values() const {
        if (!(t_min > 0.0) || !(t_max > t_min) || rungs < 2) throw parameter_error("invalid time ladder");
        std::vector<double> t;
        for (int k = 0; k < rungs; ++k)
            t.push_back(std::exp(std::log(t_min) + (std::log(t_max) - std::log(t_min)) * k / (rungs - 1)));
        return t;
    }

    /// Ratio between neighbouring rungs.
    double step() const { return std::pow(t_max / t_min, 1.0 / (rungs - 1)); }
};

namespace detail {

// Weights w with int_a^b k(y) P(g)(y) dy = sum_i w_i g_i, P as in axis_moments.
// Each interval is cut into pieces no wider than h and integrated with 8-point
// Gauss-Legendre, so kernels varying on scale h are resolved.
template <class Kernel>
void add_kernel_moments(const Axis& ax, double a, double b, double h, Kernel k, double* w) {
    a = std::max(a, ax.lo);
    b = std::min(b, ax.hi);
    if (!(b > a)) return;
    const Rule& gl = gauss_legendre(8);
    auto piece = [&](double zl, double zr, std::size_t il, std::size_t ir) {
        const double u = std::max(zl, a), v = std::min(zr, b);
        if (!(v > u)) return;
        const int cuts = static_cast<int>(std::ceil((v - u) / h));
        const double step = (v - u) / cuts;
        for (int c = 0; c < cuts; ++c) {
            const double pa = u + c * step, mid = pa + 0.5 * step;
            for (std::size_t q = 0; q < gl.x.size(); ++q) {
                const double y = mid + 0.5 * step * gl.x[q];
                const double kv = 0.5 * step * gl.w[q] * k(y);
                if (il == ir) {
                    w[il] += kv;
                } else {
                    const double lam = (y - zl) / (zr - zl);
                    w[il] += kv * (1.0 - lam);
                    w[ir] += kv * lam;
                }
            }
        }
    };
    for (const Panel& p : ax.panels) {
        if (p.b <= a || p.a >= b) continue;
        const std::size_t f = p.first, l = p.first + p.count - 1;
        piece(p.a, ax.nodes[f], f, f);
        for (std::size_t i = f; i < l; ++i) piece(ax.nodes[i], ax.nodes[i + 1], i, i + 1);
        piece(ax.nodes[l], p.b, l, l);
    }
}

} // namespace detail

/// Omega g(x) = max over the ladder of
/// |int_{local(x)} prod_j (x_j y_j)^{-beta_j} t^{-1/2} e^{-(x_j-y_j)^2/4t} g dm|,
/// with g replaced by its panel-linear interpolant and the Gaussian resolved at
/// every t.
inline RealGridFunction gaussian_maximal_apply(const std::vector<double>& betas, const GridFunction& g,
                                               const TimeLadder& ladder = {}) {
    const auto& gr = *g.grid();
    detail::check_betas(gr, betas);
    RealGridFunction out(g.grid());
    auto rung = [&](double t) {
        const double rt = std::sqrt(t);
        std::vector<Matrix> mats;
        for (std::size_t j = 0; j < gr.dim(); ++j) {
            const Axis& ax = gr.axis(j);
            const double beta = betas[j];
            Matrix m(ax.size(), ax.size());
            parallel_for(ax.size(), [&](std::size_t i) {
                const double x = ax.nodes[i];
                // e^{-(x-y)^2/4t} < 1e-31 beyond 16 sqrt(t).
                const double a = std::max(0.5 * x, x - 16.0 * rt), b = std::min(2.0 * x, x + 16.0 * rt);
                auto k = [&](double y) { return std::pow(y / x, beta) * std::exp(-(x - y) * (x - y) / (4.0 * t)) / rt; };
                detail::add_kernel_moments(ax, a, b, rt, k, &m(i, 0));
            });
            mats.push_back(std::move(m));
        }
        const auto v = apply_tensor(g.values(), gr.shape(), mats);
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(out[i], std::abs(v[i]));
    };
    for (double t : ladder.values()) rung(t);
    if (!ladder.extend) return out;
    const double q = ladder.step();
    double t = ladder.t_min;
    while (t > ladder.t_floor) {
        const RealGridFunction before = out;
        for (int k = 0; k < 16; ++k) rung(t /= q);
        double peak = 0.0, moved = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            peak = std::max(peak, out[i]);
            moved = std::max(moved, out[i] - before[i]);
        }
        if (!(moved > ladder.tol * peak)) break;
    }
    return out;
}

/// Radii r_min 2^{k/per_octave} up to r_max.
struct RadiusLadder {
    double r_min = 0.0;  // 0: smallest node spacing
    double r_max = 0.0;  // 0: grid diameter
    int per_octave = 8;
};

namespace detail {

// Prefix sums S[i_1..i_d] = sum over nodes with indices < i_j.
inline std::vector<double> prefix_sums(const std::vector<double>& v, const std::vector<std::size_t>& shape) {
    std::vector<std::size_t> ext(shape.size());
    for (std::size_t j = 0; j < shape.size(); ++j) ext[j] = shape[j] + 1;
    std::size_t total = 1;
    for (auto e : ext) total *= e;
    std::vector<double> s(total, 0.0);
    std::vector<std::size_t> st(shape.size(), 1);
    for (std::size_t j = shape.size(); j-- > 1;) st[j - 1] = st[j] * ext[j];
    std::vector<std::size_t> vs(shape.size(), 1);
    for (std::size_t j = shape.size(); j-- > 1;) vs[j - 1] = vs[j] * shape[j];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t flat = 0;
        for (std::size_t j = 0; j < shape.size(); ++j) flat += ((i / vs[j]) % shape[j] + 1) * st[j];
        s[flat] = v[i];
    }
    for (std::size_t j = 0; j < shape.size(); ++j)
        for (std::size_t f = 0; f < total; ++f)
            if ((f / st[j]) % ext[j] > 0) s[f] += s[f - st[j]];
    return s;
}

} // namespace detail

/// Centered maximal average over cubes of half-side r on an unweighted grid,
/// with g taken as zero outside the grid box:
/// M g(x) = max_r sum_{cube} w |g| / (sum_{cube} w + |cube outside the box|).
inline RealGridFunction hl_maximal(const GridFunction& g, const RadiusLadder& ladder = {}) {
    const auto& gr = *g.grid();
    for (std::size_t j = 0; j < gr.dim(); ++j)
        if (gr.order()[j] != 0.0) throw grid_mismatch("hl_maximal needs an unweighted grid");
    const std::size_t d = gr.dim();
    const auto shape = gr.shape();
    double r_min = ladder.r_min, r_max = ladder.r_max;
    if (r_min <= 0.0) {
        // Small enough that every node has a cube inside the box.
        r_min = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < d; ++j) {
            const Axis& ax = gr.axis(j);
            const auto& x = ax.nodes;
            r_min = std::min({r_min, x.front() - ax.lo, ax.hi - x.back()});
            for (std::size_t i = 1; i < x.size(); ++i) r_min = std::min(r_min, x[i] - x[i - 1]);
        }
        if (!std::isfinite(r_min)) r_min = 1.0;
    }
    if (r_max <= 0.0) {
        r_max = 0.0;
        for (std::size_t j = 0; j < d; ++j) r_max = std::max(r_max, gr.axis(j).hi - gr.axis(j).lo);
    }
    if (ladder.per_octave < 1 || !(r_max >= r_min)) throw parameter_error("invalid radius ladder");
    std::vector<double> radii;
    for (int k = 0;; ++k) {
        const double r = r_min * std::exp2(static_cast<double>(k) / ladder.per_octave);
        if (r > r_max * (1.0 + 1e-12)) break;
        radii.push_back(r);
    }
    std::vector<double> mass(g.size()), wt(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        wt[i] = gr.weight(i);
        mass[i] = wt[i] * std::abs(g[i]);
    }
    const auto sm = detail::prefix_sums(mass, shape), sw = detail::prefix_sums(wt, shape);
    std::vector<std::size_t> st(d, 1);
    for (std::size_t j = d; j-- > 1;) st[j - 1] = st[j] * (shape[j] + 1);
    RealGridFunction out(g.grid());
    parallel_for(g.size(), [&](std::size_t i) {
        const Point x = gr.point(i);
        std::vector<std::size_t> lo(d), hi(d);
        double best = 0.0;
        for (double r : radii) {
            for (std::size_t j = 0; j < d; ++j) {
                const auto& nodes = gr.axis(j).nodes;
                lo[j] = static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), x[j] - r) - nodes.begin());
                hi[j] = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), x[j] + r) - nodes.begin());
            }
            double m = 0.0, w = 0.0;
            for (std::size_t c = 0; c < (std::size_t{1} << d); ++c) {
                std::size_t flat = 0;
                int sign = 1;
                for (std::size_t j = 0; j < d; ++j) {
                    if (c & (std::size_t{1} << j)) {
                        flat += lo[j] * st[j];
                        sign = -sign;
                    } else {
                        flat += hi[j] * st[j];
                    }
                }
                m += sign * sm[flat];
                w += sign * sw[flat];
            }
            double full = 1.0, inside = 1.0;
            for (std::size_t j = 0; j < d; ++j) {
                full *= 2.0 * r;
                inside *= std::min(x[j] + r, gr.axis(j).hi) - std::max(x[j] - r, gr.axis(j).lo);
            }
            w += std::max(0.0, full - inside);
            if (w > 0.0) best = std::max(best, std::max(0.0, m) / w);
        }
        out[i] = best;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Kernel envelope probes: ratios of a kernel to its stated envelope.

enum class Envelope {
    euclidean_decay,  // |x-y|^n |H^phi(x,y)| / sup|phi|
    heat_local,       // |W - (uv)^{-a} e^{-(u-v)^2/4t}/sqrt(4 pi t)| / ((uv)^{-a-1} sqrt(t) e^{-(u-v)^2/4t}), uv/t > 1
    heat_far,         // |W| t^{a+1/2} e^{v^2/20t}, 2u < v
    dt_heat_far,      // |dW/dt| t^{a+3/2} e^{v^2/20t}, 2u < v
};

inline Envelope envelope_from_name(const std::string& s) {
    if (s == "euclidean-decay") return Envelope::euclidean_decay;
    if (s == "heat-local") return Envelope::heat_local;
    if (s == "heat-far") return Envelope::heat_far;
    if (s == "dt-heat-far") return Envelope::dt_heat_far;
    throw parameter_error("unknown envelope '" + s + "'");
}

inline std::string envelope_name(Envelope e) {
    switch (e) {
    case Envelope::euclidean_decay: return "euclidean-decay";
    case Envelope::heat_local: return "heat-local";
    case Envelope::heat_far: return "heat-far";
    case Envelope::dt_heat_far: return "dt-heat-far";
    }
    return "";
}

namespace detail {

// log W_t^lambda(u, v) without underflow.
inline double log_heat(double lambda, double t, double u, double v) {
    const double nu = lambda - 0.5, z = u * v / (2.0 * t);
    return -(nu + 1.0) * std::log(2.0 * t) + std::log(bessel_i_scaled_exp(BesselOrder(nu), z)) -
           (u - v) * (u - v) / (4.0 * t);
}

} // namespace detail

/// Heat-kernel envelope ratio at one probe.
inline double heat_envelope_ratio(Envelope e, double lambda, double t, double u, double v) {
    detail::check_coords(u, v);
    if (!(t > 0.0)) throw parameter_error("heat kernel time must be positive");
    const double nu = lambda - 0.5;
    switch (e) {
    case Envelope::heat_local: {
        if (!(u * v > t)) throw input_error("heat-local envelope needs uv/t > 1");
        // Both terms carry e^{-(u-v)^2/4t}; compare the reduced factors.
        const double z = u * v / (2.0 * t);
        const double reduced = std::exp(-(nu + 1.0) * std::log(2.0 * t)) * bessel_i_scaled_exp(BesselOrder(nu), z);
        const double euclid = std::pow(u * v, -lambda) / std::sqrt(4.0 * std::numbers::pi * t);
        return std::abs(reduced - euclid) / (std::pow(u * v, -lambda - 1.0) * std::sqrt(t));
    }
    case Envelope::heat_far:
    case Envelope::dt_heat_far: {
        if (!(2.0 * u < v)) throw input_error("far envelopes need 2u < v");
        const double lr = detail::log_heat(lambda, t, u, v) + (lambda + 0.5) * std::log(t) + v * v / (20.0 * t);
        const double r = std::exp(lr);
        if (e == Envelope::heat_far) return r;
        return r * std::abs(BesselHeatAxis(lambda)(t, u, v).bracket);
    }
    case Envelope::euclidean_decay: break;
    }
    throw parameter_error("heat_envelope_ratio: not a heat-kernel envelope");
}

struct EnvelopeProbe {
    Envelope kind = Envelope::heat_local;
    double lambda = 0.5;      // heat-kernel envelopes
    std::size_t n = 1;        // Euclidean envelope
    std::uint64_t seed = 1;
};

struct EnvelopeResult {
    double sup_ratio = 0.0;
    std::size_t probes = 0;
    bool finite = true;
};

/// Sup of the envelope ratio over random probes in the envelope's regime:
/// log-uniform u in [1e-2, 10]; v = u (2 + 10^U(-2,1)) or log-uniform in
/// [u/4, 4u]; t log-uniform down to uv 1e-4 (heat-local) or in [1e-3, 1e3];
/// for H^phi, |x - y| log-uniform in [1e-2, 10] with a random direction.
inline EnvelopeResult envelope_sup(const EnvelopeProbe& probe, std::size_t count, const LaplaceSymbol* sym = nullptr) {
    std::mt19937_64 rng(probe.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto logu = [&](double a, double b) { return a * std::pow(b / a, unit(rng)); };
    EnvelopeResult out;
    out.probes = count;
    std::vector<std::array<double, 4>> samples(count);
    std::vector<Point> dirs(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double u = logu(1e-2, 10.0);
        double v, t;
        if (probe.kind == Envelope::heat_local) {
            v = logu(0.25 * u, 4.0 * u);
            t = u * v * logu(1e-4, 1.0 - 1e-12);
        } else {
            v = u * (2.0 + logu(1e-2, 10.0));
            t = logu(1e-3, 1e3);
        }
        samples[i] = {u, v, t, logu(1e-2, 10.0)};
        if (probe.kind == Envelope::euclidean_decay) {
            Point w(probe.n);
            double nn = 0.0;
            std::normal_distribution<double> gauss;
            for (auto& c : w) {
                c = gauss(rng);
                nn += c * c;
            }
            for (auto& c : w) c /= std::sqrt(nn);
            dirs[i] = w;
        }
    }
    std::vector<double> ratios(count);
    if (probe.kind == Envelope::euclidean_decay) {
        if (!sym) throw parameter_error("euclidean-decay envelope needs a symbol");
        const TimeRule rule;
        parallel_for(count, [&](std::size_t i) {
            const double r = samples[i][3];
            Point x(probe.n, 20.0), y(probe.n);
            for (std::size_t j = 0; j < probe.n; ++j) y[j] = x[j] + r * dirs[i][j];
            ratios[i] = std::pow(r, static_cast<double>(probe.n)) *
                        std::abs(KernelEvaluator::euclidean_K(*sym, x, y, rule)) / sym->sup_bound;
        });
    } else {
        parallel_for(count, [&](std::size_t i) {
            ratios[i] = heat_envelope_ratio(probe.kind, probe.lambda, samples[i][2], samples[i][0], samples[i][1]);
        });
    }
    for (double r : ratios) {
        if (!std::isfinite(r)) out.finite = false;
        else out.sup_ratio = std::max(out.sup_ratio, r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Named inputs.

/// A test input: an analytic source plus grid breakpoints that resolve it.
struct InputFunction {
    std::string label;
    Source source;
    std::vector<std::vector<double>> grid_breaks;  // per-axis breakpoints for grids sampling it

    GridFunction sample(const Grid& g) const {
        return GridFunction::sample(g, [&](const Point& x) {
            for (std::size_t j = 0; j < x.size(); ++j)
                if (x[j] < source.lo[j] || x[j] > source.hi[j]) return cplx{};
            return source.eval(x);
        });
    }
};

inline constexpr double kBumpCenter = 3.5;
inline constexpr double kBumpWidth = 0.4;
inline constexpr double kAtomCenter = 2.0;

/// prod_j exp(-(x_j - c)^2 / 2 s^2), set to zero once below 1e-16.
inline InputFunction bump_input(std::size_t n, double c = kBumpCenter, double s = kBumpWidth) {
    const double reach = s * std::sqrt(2.0 * std::log(1e16));
    const double lo = std::max(c - reach, 1e-3), hi = c + reach;
    auto f = [c, s](const Point& x) -> cplx {
        double e = 0.0;
        for (double v : x) e += (v - c) * (v - c);
        const double val = std::exp(-e / (2.0 * s * s));
        return val < 1e-16 ? 0.0 : val;
    };
    InputFunction in{"bump", analytic_source(f, Point(n, lo), Point(n, hi)), {}};
    in.grid_breaks.assign(n, {});
    return in;
}

/// Indicator of the cube [x0 - w/2, x0 + w/2]^n normalised to mass one in m.
inline InputFunction near_atom_input(const Order& order, double width, double x0 = kAtomCenter) {
    if (!(width > 0.0) || !(width < 2.0 * x0)) throw parameter_error("near-atom width must lie in (0, 2 x0)");
    const std::size_t n = order.n();
    const Point a(n, x0 - 0.5 * width), b(n, x0 + 0.5 * width);
    const double h = 1.0 / box_measure(order, a, b);
    auto f = [a, b, h](const Point& x) -> cplx {
        for (std::size_t j = 0; j < x.size(); ++j)
            if (x[j] < a[j] || x[j] > b[j]) return 0.0;
        return h;
    };
    InputFunction in{"near-atom:" + format_double(width), analytic_source(f, a, b), {}};
    // Panels shrink geometrically toward the atom so the superlevel sets of
    // operator outputs are resolved at the atom's scale.
    std::vector<double> br{a[0], b[0]};
    for (int k = 1; k <= 8; ++k) {
        const double d = width * std::ldexp(1.0, k - 1);
        if (a[0] - d > 0.0) br.push_back(a[0] - d);
        br.push_back(b[0] + d);
    }
    for (int k = 1; k <= 3; ++k) {
        const double d = 0.5 * width * (1.0 - std::ldexp(1.0, -k));
        br.push_back(a[0] + d);
        br.push_back(b[0] - d);
    }
    std::sort(br.begin(), br.end());
    in.grid_breaks.assign(n, br);
    return in;
}

/// Random sum of six cosines per axis under a wide Gaussian envelope.
inline InputFunction band_limited_input(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), freq(0.0, 4.0), phase(0.0, 2.0 * std::numbers::pi);
    std::vector<std::array<double, 3>> terms(6 * n);
    for (auto& t : terms) t = {amp(rng), freq(rng), phase(rng)};
    const double c = kBumpCenter, s = 0.8;
    const double reach = s * std::sqrt(2.0 * std::log(1e16));
    auto f = [terms, c, s](const Point& x) -> cplx {
        double v = 1.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < 6; ++k) {
                const auto& t = terms[6 * j + k];
                sum += t[0] * std::cos(t[1] * x[j] + t[2]);
            }
            const double env = std::exp(-(x[j] - c) * (x[j] - c) / (2.0 * s * s));
            if (env < 1e-16) return 0.0;
            v *= sum * env;
        }
        return v;
    };
    InputFunction in{"band-limited:" + std::to_string(seed),
                     analytic_source(f, Point(n, std::max(c - reach, 1e-3)), Point(n, c + reach)),
                     {}};
    in.grid_breaks.assign(n, {});
    return in;
}

inline std::vector<std::string> input_generator_names() { return {"bump", "near-atom:WIDTH", "band-limited:SEED"}; }

/// "bump", "near-atom:0.05", "band-limited:7".
inline InputFunction make_input(const std::string& spec, const Order& order) {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (name == "bump") {
        if (!arg.empty()) throw parameter_error("bump takes no argument");
        return bump_input(order.n());
    }
    if (name == "near-atom") return near_atom_input(order, parse_number(arg, spec));
    if (name == "band-limited") {
        const double s = parse_number(arg, spec);
        if (s < 0.0 || s != std::floor(s)) throw parameter_error("band-limited seed must be a nonnegative integer");
        return band_limited_input(order.n(), static_cast<std::uint64_t>(s));
    }
    throw parameter_error("unknown input generator '" + spec + "'");
}

} // namespace hankel
