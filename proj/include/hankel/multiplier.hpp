#pragma once

// Hankel multipliers of Laplace-transform type: the spectral path
// h(m h(f)), the kernels K^phi and H^phi, the boundary function alpha(eps),
// and the principal-value path evaluated on per-point ray quadratures.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "hankel.hpp"
#include "measure_grid.hpp"
#include "quadrature.hpp"
#include "semigroup.hpp"
#include "symbol.hpp"

namespace hankel {

/// Time quadrature for kernels built from d/dt of a heat kernel: log panels
/// on [r^2 lower_factor, T], T = upper_factor max(1, |x|^2, |y|^2), plus the
/// large-time tail in closed form.
struct TimeRule {
    int nodes = 16;
    double max_log_width = 1.0;
    double lower_factor = 1.0 / 240.0;
    double upper_factor = 1e8;
};

namespace detail {

inline double dist2(const Point& x, const Point& y) {
    if (x.size() != y.size()) throw grid_mismatch("points of different dimension");
    double r2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) r2 += (x[j] - y[j]) * (x[j] - y[j]);
    return r2;
}

inline double norm2(const Point& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

} // namespace detail

/// K^phi(x, y) = int_0^inf phi(t) d/dt prod_j W_t^{lambda_j}(x_j, y_j) dt for
/// a fixed symbol and order.
class KernelEvaluator {
public:
    KernelEvaluator(LaplaceSymbol sym, Order order, TimeRule rule = {})
        : sym_(std::move(sym)), order_(std::move(order)), rule_(rule) {
        for (std::size_t j = 0; j < order_.n(); ++j) axes_.emplace_back(order_[j]);
        p_ = 0.0;
        c_ = 1.0;
        for (std::size_t j = 0; j < order_.n(); ++j) {
            p_ += order_[j] + 0.5;
            c_ *= std::exp(-2.0 * order_[j] * std::numbers::ln2 - std::lgamma(order_[j] + 0.5));
        }
    }

    const LaplaceSymbol& symbol() const { return sym_; }
    const Order& order() const { return order_; }
    std::size_t dim() const { return order_.n(); }

    /// d/dt prod_j W_t(x_j, y_j).
    double dt_product(double t, const Point& x, const Point& y) const {
        double w = 1.0, b = 0.0;
        for (std::size_t j = 0; j < axes_.size(); ++j) {
            const AxisHeat a = axes_[j](t, x[j], y[j]);
            w *= a.w;
            b += a.bracket;
        }
        return w * b / t;
    }

    cplx K(const Point& x, const Point& y) const {
        check(x, y);
        const double r2 = detail::dist2(x, y);
        if (r2 == 0.0) throw singular_point("K^phi is singular at x = y");
        if (sym_.constant) return 0.0;
        const double T = rule_.upper_factor * std::max({1.0, detail::norm2(x), detail::norm2(y)});
        std::vector<double> breaks{r2 / 16.0, r2};
        for (std::size_t j = 0; j < x.size(); ++j) breaks.push_back(0.5 * x[j] * y[j]);
        breaks.insert(breaks.end(), sym_.breakpoints.begin(), sym_.breakpoints.end());
        const cplx body = log_panels([&](double t) { return sym_.phi(t) * dt_product(t, x, y); },
                                     r2 * rule_.lower_factor, T, breaks, rule_.nodes, rule_.max_log_width);
        // For t >> |x|^2, |y|^2: prod W ~ c t^{-p}, so d/dt ~ -p c t^{-p-1}.
        return body - p_ * c_ * tail_moment(sym_, T, p_);
    }

    /// prod_j (x_j y_j)^{-lambda_j}.
    double local_factor(const Point& x, const Point& y) const {
        double k = 1.0;
        for (std::size_t j = 0; j < x.size(); ++j) k *= std::pow(x[j] * y[j], -order_[j]);
        return k;
    }

    /// Euclidean comparison kernel H^phi(x, y).
    cplx H(const Point& x, const Point& y) const { return euclidean_K(sym_, x, y, rule_); }

    static cplx euclidean_K(const LaplaceSymbol& sym, const Point& x, const Point& y, const TimeRule& rule) {
        const double r2 = detail::dist2(x, y);
        if (r2 == 0.0) throw singular_point("H^phi is singular at x = y");
        if (sym.constant) return 0.0;
        const double n = static_cast<double>(x.size());
        const double T = rule.upper_factor * std::max(1.0, r2);
        std::vector<double> breaks{r2 / 16.0, r2};
        breaks.insert(breaks.end(), sym.breakpoints.begin(), sym.breakpoints.end());
        auto dt = [&](double t) {
            const double e = std::exp(-r2 / (4.0 * t)) * std::pow(4.0 * std::numbers::pi * t, -0.5 * n);
            return e * (r2 / (4.0 * t * t) - 0.5 * n / t);
        };
        const cplx body = log_panels([&](double t) { return sym.phi(t) * dt(t); }, r2 * rule.lower_factor, T, breaks,
                                     rule.nodes, rule.max_log_width);
        return body - 0.5 * n * std::pow(4.0 * std::numbers::pi, -0.5 * n) * tail_moment(sym, T, 0.5 * n);
    }

private:
    void check(const Point& x, const Point& y) const {
        if (x.size() != order_.n() || y.size() != order_.n()) throw grid_mismatch("point dimension differs from order");
        for (std::size_t j = 0; j < x.size(); ++j)
            if (!(x[j] > 0.0) || !(y[j] > 0.0)) throw input_error("kernel points must lie in (0,inf)^n");
    }

    LaplaceSymbol sym_;
    Order order_;
    TimeRule rule_;
    std::vector<BesselHeatAxis> axes_;
    double p_ = 0.0, c_ = 1.0;
};

inline cplx kernel_K(const LaplaceSymbol& sym, const Order& order, const Point& x, const Point& y, TimeRule rule = {}) {
    return KernelEvaluator(sym, order, rule).K(x, y);
}

/// H^phi(x, y) = int_0^inf phi(t) d/dt [e^{-|x-y|^2/4t} (4 pi t)^{-n/2}] dt.
inline cplx kernel_H(const LaplaceSymbol& sym, std::size_t n, const Point& x, const Point& y, TimeRule rule = {}) {
    if (x.size() != n || y.size() != n) throw grid_mismatch("point dimension differs from n");
    return KernelEvaluator::euclidean_K(sym, x, y, rule);
}

/// M = (2 sqrt(pi))^{-n} int_{|z| < 1, z in R^{n-1}} sqrt(1 - |z|^2) dz.
inline double constant_M(std::size_t n) {
    if (n == 0) throw parameter_error("dimension must be positive");
    double ball = 1.0;
    if (n >= 2) {
        // |S^{n-2}| int_0^1 sqrt(1-r^2) r^{n-2} dr with r = sin(theta).
        const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * (n - 1.0)) / std::tgamma(0.5 * (n - 1.0));
        const double radial = gl_panel(
            [&](double th) { return std::pow(std::cos(th), 2.0) * std::pow(std::sin(th), n - 2.0); }, 0.0,
            0.5 * std::numbers::pi, 40);
        ball = sphere * radial;
    }
    return std::pow(2.0 * std::sqrt(std::numbers::pi), -static_cast<double>(n)) * ball;
}

/// int_0^inf e^{-1/4s} s^{-n/2-1} ds by quadrature (closed form 4^{n/2} Gamma(n/2)).
inline double radial_gamma_integral(std::size_t n) {
    const double q = 0.5 * static_cast<double>(n);
    const double hi = 1e20;
    const double body = log_panels([&](double s) { return std::exp(-0.25 / s) * std::pow(s, -q - 1.0); }, 1.0 / 240.0,
                                   hi, {0.25}, 24, 0.5);
    // e^{-1/4s} = 1 to rounding past hi.
    return body + std::pow(hi, -q) / q;
}

/// alpha(eps) = int_0^1 phi(t) int_{|y|<eps} d^2/dy_1^2 [e^{-|y|^2/4t} (2 sqrt(pi t))^{-n}] dy dt,
/// evaluated in the reduced radial form -M eps^n int_0^1 phi(t) e^{-eps^2/4t} t^{-n/2-1} dt.
inline cplx alpha_epsilon(const LaplaceSymbol& sym, std::size_t n, double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw parameter_error("alpha_epsilon: eps must be positive");
    const double e2 = eps * eps;
    const double q = 0.5 * static_cast<double>(n);
    const double lo = std::min(e2 / 240.0, 0.5);
    std::vector<double> breaks{e2 / 16.0, e2};
    breaks.insert(breaks.end(), sym.breakpoints.begin(), sym.breakpoints.end());
    // Integrate in s = t / eps^2 so the integrand is O(1) at every eps.
    std::vector<double> sbreaks;
    for (double b : breaks) sbreaks.push_back(b / e2);
    const cplx body = log_panels(
        [&](double s) { return sym.phi(s * e2) * std::exp(-0.25 / s) * std::pow(s, -q - 1.0); }, lo / e2, 1.0 / e2,
        sbreaks, 16, 0.5);
    return -constant_M(n) * body;
}

/// C with C phi(0+) = -n lim_{eps -> 0+} alpha(eps).
inline double normalization_C(const LaplaceSymbol& sym, std::size_t n) {
    if (!sym.phi_zero_plus) throw parameter_error("normalization_C: symbol " + sym.label + " has no phi(0+)");
    return static_cast<double>(n) * constant_M(n) * radial_gamma_integral(n);
}

/// Multiplies the frequency samples by m.
inline GridFunction multiply_by_symbol(const LaplaceSymbol& sym, const GridFunction& hf) {
    const auto& g = *hf.grid();
    GridFunction out(hf.grid());
    for (std::size_t i = 0; i < hf.size(); ++i) out[i] = symbol_m(sym, g.point(i)) * hf[i];
    return out;
}

/// T^m f = h(m h(f)).
inline GridFunction spectral_apply(const LaplaceSymbol& sym, const TransformPlan& plan, const GridFunction& f) {
    const GridFunction hf = hankel_apply(plan, f);
    GridFunction back = hankel_apply(plan.reversed(), multiply_by_symbol(sym, hf));
    return GridFunction(f.grid(), std::move(back.values()));
}

// ---------------------------------------------------------------------------
// Sources: functions that can be evaluated off the grid.

/// f with a support box and per-axis points where it is not smooth.
struct Source {
    std::function<cplx(const Point&)> eval;
    Point lo, hi;
    std::vector<std::vector<double>> breaks;

    std::size_t dim() const { return lo.size(); }
};

inline Source analytic_source(std::function<cplx(const Point&)> f, Point lo, Point hi,
                              std::vector<std::vector<double>> breaks = {}) {
    if (lo.size() != hi.size() || lo.empty()) throw parameter_error("source box dimensions differ");
    breaks.resize(lo.size());
    for (std::size_t j = 0; j < lo.size(); ++j)
        if (!(lo[j] >= 0.0) || !(hi[j] > lo[j])) throw parameter_error("source box must satisfy 0 <= lo < hi");
    return Source{std::move(f), std::move(lo), std::move(hi), std::move(breaks)};
}

/// panel_lagrange: degree q-1 within each panel. panel_linear: linear between
/// the nodes of a panel and constant out to its ends; positivity preserving
/// and exact for panel-aligned indicators.
enum class Interpolation { panel_lagrange, panel_linear };

namespace detail {

struct AxisInterp {
    const Axis* axis;
    std::vector<std::vector<double>> bary;  // barycentric weights per panel

    explicit AxisInterp(const Axis& ax) : axis(&ax) {
        for (const Panel& p : ax.panels) {
            std::vector<double> w(p.count, 1.0);
            for (std::size_t i = 0; i < p.count; ++i)
                for (std::size_t k = 0; k < p.count; ++k)
                    if (k != i) w[i] /= ax.nodes[p.first + i] - ax.nodes[p.first + k];
            bary.push_back(std::move(w));
        }
    }

    // Indices and coefficients c with f(x) = sum c_i f(node_i).
    void lagrange(double x, std::vector<std::pair<std::size_t, double>>& out) const {
        out.clear();
        const Axis& ax = *axis;
        if (x < ax.lo || x > ax.hi) return;
        auto it = std::upper_bound(ax.panels.begin(), ax.panels.end(), x,
                                   [](double v, const Panel& p) { return v < p.b; });
        if (it == ax.panels.end()) --it;
        const std::size_t pi = static_cast<std::size_t>(it - ax.panels.begin());
        const Panel& p = *it;
        const auto& w = bary[pi];
        double den = 0.0;
        for (std::size_t i = 0; i < p.count; ++i) {
            const double d = x - ax.nodes[p.first + i];
            if (d == 0.0) {
                out.emplace_back(p.first + i, 1.0);
                return;
            }
            den += w[i] / d;
        }
        for (std::size_t i = 0; i < p.count; ++i)
            out.emplace_back(p.first + i, w[i] / (x - ax.nodes[p.first + i]) / den);
    }

    // Linear between the nodes of the panel holding x, constant to its ends.
    void panel_linear(double x, std::vector<std::pair<std::size_t, double>>& out) const {
        out.clear();
        const Axis& ax = *axis;
        if (x < ax.lo || x > ax.hi) return;
        auto it = std::upper_bound(ax.panels.begin(), ax.panels.end(), x,
                                   [](double v, const Panel& p) { return v < p.b; });
        if (it == ax.panels.end()) --it;
        const Panel& p = *it;
        const double* z = &ax.nodes[p.first];
        if (x <= z[0]) {
            out.emplace_back(p.first, 1.0);
            return;
        }
        if (x >= z[p.count - 1]) {
            out.emplace_back(p.first + p.count - 1, 1.0);
            return;
        }
        const std::size_t k = static_cast<std::size_t>(std::upper_bound(z, z + p.count, x) - z);
        const double s = (x - z[k - 1]) / (z[k] - z[k - 1]);
        out.emplace_back(p.first + k - 1, 1.0 - s);
        out.emplace_back(p.first + k, s);
    }
};

inline std::function<cplx(const Point&)> interpolant(const GridFunction& f, Interpolation kind) {
    const auto grid = f.grid();
    const std::size_t n = grid->dim();
    auto interps = std::make_shared<std::vector<AxisInterp>>();
    for (std::size_t j = 0; j < n; ++j) interps->emplace_back(grid->axis(j));
    auto values = std::make_shared<std::vector<cplx>>(f.values());
    return [grid, interps, values, kind, n](const Point& y) -> cplx {
        std::vector<std::vector<std::pair<std::size_t, double>>> c(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (kind == Interpolation::panel_lagrange) (*interps)[j].lagrange(y[j], c[j]);
            else (*interps)[j].panel_linear(y[j], c[j]);
            if (c[j].empty()) return cplx{};
        }
        // Tensor contraction over the per-axis stencils.
        cplx sum{};
        std::vector<std::size_t> idx(n, 0);
        for (;;) {
            std::size_t flat = 0;
            double coef = 1.0;
            for (std::size_t j = 0; j < n; ++j) {
                flat += c[j][idx[j]].first * grid->stride(j);
                coef *= c[j][idx[j]].second;
            }
            sum += coef * (*values)[flat];
            std::size_t j = n;
            while (j-- > 0) {
                if (++idx[j] < c[j].size()) break;
                idx[j] = 0;
                if (j == 0) return sum;
            }
        }
    };
}

} // namespace detail

/// Source interpolating grid samples. The box is the union of panels holding
/// a nonzero sample; breakpoints are the panel ends inside it.
inline Source grid_source(const GridFunction& f) {
    const auto& g = *f.grid();
    const std::size_t n = g.dim();
    Source src;
    src.lo.assign(n, 0.0);
    src.hi.assign(n, 0.0);
    src.breaks.assign(n, {});
    std::vector<std::size_t> first(n, SIZE_MAX), last(n, 0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == cplx{}) continue;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t k = g.index_along(i, j);
            first[j] = std::min(first[j], k);
            last[j] = std::max(last[j], k);
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        const Axis& ax = g.axis(j);
        if (first[0] == SIZE_MAX) {
            // Identically zero: a one-panel box keeps the table code uniform.
            src.lo[j] = ax.panels[0].a;
            src.hi[j] = ax.panels[0].b;
            continue;
        }
        src.lo[j] = ax.panels[ax.panel_of[first[j]]].a;
        src.hi[j] = ax.panels[ax.panel_of[last[j]]].b;
        for (const Panel& p : ax.panels)
            if (p.a > src.lo[j] && p.a < src.hi[j]) src.breaks[j].push_back(p.a);
    }
    src.eval = detail::interpolant(f, Interpolation::panel_lagrange);
    return src;
}

/// Panel-linear interpolant of |f| over the whole grid box, for positive
/// operators: equal tables for every input keep them monotone. In one
/// dimension the nodes are breakpoints as well.
inline Source positive_grid_source(const GridFunction& f) {
    const auto& g = *f.grid();
    const std::size_t n = g.dim();
    GridFunction a(f.grid());
    for (std::size_t i = 0; i < f.size(); ++i) a[i] = std::abs(f[i]);
    Source src;
    src.breaks.assign(n, {});
    for (std::size_t j = 0; j < n; ++j) {
        const Axis& ax = g.axis(j);
        src.lo.push_back(ax.lo);
        src.hi.push_back(ax.hi);
        for (const Panel& p : ax.panels)
            if (p.a > ax.lo) src.breaks[j].push_back(p.a);
        if (n == 1) src.breaks[j].insert(src.breaks[j].end(), ax.nodes.begin(), ax.nodes.end());
        std::sort(src.breaks[j].begin(), src.breaks[j].end());
    }
    src.eval = detail::interpolant(a, Interpolation::panel_linear);
    return src;
}

// ---------------------------------------------------------------------------
// Principal-value path.

/// eps_k = diam0 2^{-k}, k = 1..levels.
inline std::vector<double> dyadic_schedule(double diam0 = 0.5, int levels = 12) {
    std::vector<double> e;
    for (int k = 1; k <= levels; ++k) e.push_back(std::ldexp(diam0, -k));
    return e;
}

struct PVConfig {
    std::vector<double> eps = dyadic_schedule();
    bool extrapolate = true;
    int radial_order = 8;
    double max_panel = 0.25;  // radial panel width cap away from x
    int directions = 48;      // angular nodes for n = 2 (polar count for n = 3)
    int inner_levels = 8;     // shells inside the smallest eps (local operators only)
    TimeRule time;
    std::optional<std::vector<std::size_t>> eval_nodes;  // default: every grid node

    void validate() const {
        if (eps.size() < 2) throw parameter_error("epsilon schedule needs at least two entries");
        for (std::size_t k = 0; k < eps.size(); ++k) {
            if (!(eps[k] > 0.0)) throw parameter_error("epsilon schedule entries must be positive");
            if (k > 0 && !(eps[k] < eps[k - 1]))
                throw parameter_error("epsilon schedule must be strictly decreasing");
        }
        if (radial_order < 2 || directions < 4 || inner_levels < 0 || !(max_panel > 0.0))
            throw parameter_error("invalid principal-value quadrature settings");
    }
};

/// Quadrature nodes around one output point x: y = x + rho omega.
struct RayTable {
    std::size_t n = 0;
    std::vector<double> y;  // n coordinates per node
    std::vector<double> rho, weight;
    std::vector<char> local;
    std::vector<std::size_t> shell;  // smallest k with rho > eps_k; eps.size() if inside all
    std::vector<cplx> f;

    std::size_t size() const { return rho.size(); }
    Point point(std::size_t i) const { return Point(y.begin() + i * n, y.begin() + (i + 1) * n); }
};

/// True iff x_j/2 < y_j < 2 x_j for every j.
inline bool in_local_region(const Point& x, const Point& y) {
    if (x.size() != y.size()) throw grid_mismatch("points of different dimension");
    for (std::size_t j = 0; j < x.size(); ++j)
        if (!(y[j] > 0.5 * x[j] && y[j] < 2.0 * x[j])) return false;
    return true;
}

namespace detail {

struct Direction {
    Point omega;
    double weight;
};

inline std::vector<Direction> sphere_rule(std::size_t n, int count) {
    std::vector<Direction> d;
    if (n == 1) return {{{1.0}, 1.0}, {{-1.0}, 1.0}};
    if (n == 2) {
        for (int k = 0; k < count; ++k) {
            const double th = 2.0 * std::numbers::pi * (k + 0.5) / count;
            d.push_back({{std::cos(th), std::sin(th)}, 2.0 * std::numbers::pi / count});
        }
        return d;
    }
    if (n == 3) {
        const Rule& r = gauss_legendre(count);
        const int az = 2 * count;
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            const double c = r.x[i], s = std::sqrt(1.0 - c * c);
            for (int k = 0; k < az; ++k) {
                const double ph = 2.0 * std::numbers::pi * (k + 0.5) / az;
                d.push_back({{s * std::cos(ph), s * std::sin(ph), c}, r.w[i] * 2.0 * std::numbers::pi / az});
            }
        }
        return d;
    }
    throw parameter_error("principal-value quadrature supports n <= 3");
}

// Parameter interval of the ray x + rho omega inside the box [lo, hi].
inline bool ray_box(const Point& x, const Point& w, const Point& lo, const Point& hi, double& a, double& b) {
    a = 0.0;
    b = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (w[j] == 0.0) {
            if (x[j] < lo[j] || x[j] > hi[j]) return false;
            continue;
        }
        double t0 = (lo[j] - x[j]) / w[j], t1 = (hi[j] - x[j]) / w[j];
        if (t0 > t1) std::swap(t0, t1);
        a = std::max(a, t0);
        b = std::min(b, t1);
    }
    return b > a;
}

} // namespace detail

/// Builds the ray quadrature around x for a source, cutting at every eps,
/// at the source's breakpoints and at the boundary of the local region.
inline RayTable build_ray_table(const Order& order, const Point& x, const Source& src, const PVConfig& cfg) {
    const std::size_t n = order.n();
    if (src.dim() != n || x.size() != n) throw grid_mismatch("source dimension differs from order");
    RayTable tab;
    tab.n = n;
    const auto dirs = detail::sphere_rule(n, cfg.directions);
    const Rule& gl = gauss_legendre(cfg.radial_order);
    const double eps_min = cfg.eps.back();
    std::vector<double> cuts;
    for (const auto& d : dirs) {
        double a, b;
        if (!detail::ray_box(x, d.omega, src.lo, src.hi, a, b)) continue;
        cuts.clear();
        cuts.push_back(a);
        cuts.push_back(b);
        for (double e : cfg.eps) cuts.push_back(e);
        for (int k = 1; k <= cfg.inner_levels; ++k) cuts.push_back(std::ldexp(eps_min, -k));
        const double inner = std::ldexp(eps_min, -cfg.inner_levels);
        for (double e = cfg.eps.front() * 2.0; e < b; e *= 2.0) cuts.push_back(e);
        for (std::size_t j = 0; j < n; ++j) {
            if (d.omega[j] == 0.0) continue;
            auto add = [&](double v) { cuts.push_back((v - x[j]) / d.omega[j]); };
            for (double v : src.breaks[j]) add(v);
            add(0.5 * x[j]);
            add(2.0 * x[j]);
        }
        std::sort(cuts.begin(), cuts.end());
        double prev = std::max(a, inner);
        for (double c : cuts) {
            if (!(c > prev)) continue;
            const double end = std::min(c, b);
            if (!(end > prev * (1.0 + 1e-14))) continue;
            // Geometric width limit toward x, absolute cap elsewhere.
            const double width = std::max(std::min(prev, cfg.max_panel), 1e-300);
            const int pieces = std::max(1, static_cast<int>(std::ceil((end - prev) / width - 1e-9)));
            for (int p = 0; p < pieces; ++p) {
                const double ra = prev + (end - prev) * p / pieces, rb = prev + (end - prev) * (p + 1) / pieces;
                const double half = 0.5 * (rb - ra), mid = 0.5 * (ra + rb);
                for (std::size_t i = 0; i < gl.x.size(); ++i) {
                    const double r = mid + half * gl.x[i];
                    double wt = d.weight * half * gl.w[i] * std::pow(r, static_cast<double>(n) - 1.0);
                    bool inside = true;
                    const std::size_t base = tab.y.size();
                    for (std::size_t j = 0; j < n; ++j) {
                        const double yj = x[j] + r * d.omega[j];
                        if (!(yj > 0.0)) inside = false;
                        tab.y.push_back(yj);
                    }
                    if (!inside) {
                        tab.y.resize(base);
                        continue;
                    }
                    Point yp(tab.y.begin() + base, tab.y.end());
                    for (std::size_t j = 0; j < n; ++j) wt *= std::pow(yp[j], 2.0 * order[j]);
                    std::size_t sh = 0;
                    while (sh < cfg.eps.size() && !(r > cfg.eps[sh])) ++sh;
                    tab.rho.push_back(r);
                    tab.weight.push_back(wt);
                    tab.local.push_back(in_local_region(x, yp) ? 1 : 0);
                    tab.shell.push_back(sh);
                    tab.f.push_back(src.eval(yp));
                }
            }
            prev = end;
            if (prev >= b) break;
        }
    }
    return tab;
}

/// Per-point truncation data shared by the principal-value path and the
/// maximal and comparison operators. All sums run over the same nodes.
struct PointProfile {
    cplx fx;
    std::vector<cplx> truncated;        // int_{|y-x| > eps_k} f K dm
    std::vector<cplx> truncated_local;  // int_{local, |y-x| > eps_k} f k H dm
    double global_abs = 0.0;            // int_{global} |f| |K| dm
    double local_diff_abs = 0.0;        // int_{local} |f| |K - k H| dm
};

struct ProfileRequest {
    bool comparison = false;  // also compute the H-based pieces
};

inline PointProfile point_profile(const KernelEvaluator& ev, const Point& x, const Source& src, const PVConfig& cfg,
                                  ProfileRequest req = {}) {
    const RayTable tab = build_ray_table(ev.order(), x, src, cfg);
    const std::size_t ne = cfg.eps.size();
    PointProfile out;
    out.fx = src.eval(x);
    std::vector<cplx> shell_sum(ne + 1, cplx{}), shell_loc(ne + 1, cplx{});
    std::vector<double> g_terms, l_terms;
    for (std::size_t i = 0; i < tab.size(); ++i) {
        const cplx fv = tab.f[i];
        if (fv == cplx{}) continue;
        const Point y = tab.point(i);
        const cplx k = ev.K(x, y);
        const double w = tab.weight[i];
        shell_sum[tab.shell[i]] += fv * k * w;
        if (!req.comparison) continue;
        if (tab.local[i]) {
            const cplx hk = ev.local_factor(x, y) * ev.H(x, y);
            shell_loc[tab.shell[i]] += fv * hk * w;
            l_terms.push_back(std::abs(fv) * std::abs(k - hk) * w);
        } else {
            g_terms.push_back(std::abs(fv) * std::abs(k) * w);
        }
    }
    cplx acc{}, acc_loc{};
    for (std::size_t k = 0; k < ne; ++k) {
        acc += shell_sum[k];
        acc_loc += shell_loc[k];
        out.truncated.push_back(acc);
        out.truncated_local.push_back(acc_loc);
    }
    out.global_abs = pairwise_sum(g_terms);
    out.local_diff_abs = pairwise_sum(l_terms);
    return out;
}

/// Polynomial extrapolation to eps = 0 through the last three entries.
inline cplx extrapolate_to_zero(const std::vector<double>& eps, const std::vector<cplx>& v) {
    const std::size_t m = eps.size();
    if (m < 3) return v.back();
    cplx s{};
    for (std::size_t i = m - 3; i < m; ++i) {
        double c = 1.0;
        for (std::size_t j = m - 3; j < m; ++j)
            if (j != i) c *= eps[j] / (eps[j] - eps[i]);
        s += c * v[i];
    }
    return s;
}

struct PVResult {
    Grid grid;
    std::vector<std::size_t> nodes;
    std::vector<double> eps;
    std::vector<cplx> alpha;                  // alpha(eps_k)
    std::vector<std::vector<cplx>> per_eps;   // [k][node]: -(n alpha f + truncated)
    std::vector<cplx> value;                  // extrapolated (or last truncation)
    std::vector<double> last_increment;       // |per_eps[K-1] - per_eps[K-2]| per node
    bool extrapolated = false;

    /// Values as a grid function (zero off the evaluated nodes).
    GridFunction as_grid_function() const { return scatter(value); }
    GridFunction truncation(std::size_t k) const { return scatter(per_eps.at(k)); }

    GridFunction scatter(const std::vector<cplx>& v) const {
        GridFunction out(grid);
        for (std::size_t i = 0; i < nodes.size(); ++i) out[nodes[i]] = v[i];
        return out;
    }
};

inline std::vector<std::size_t> eval_node_list(const WeightedGrid& g, const PVConfig& cfg) {
    if (cfg.eval_nodes) {
        for (std::size_t i : *cfg.eval_nodes)
            if (i >= g.size()) throw grid_mismatch("evaluation node outside the grid");
        return *cfg.eval_nodes;
    }
    std::vector<std::size_t> all(g.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
}

/// T^m f(x) = -lim_{eps -> 0+} (n alpha(eps) f(x) + int_{|y-x|>eps} f K^phi dm), at
/// the nodes of `grid` (or cfg.eval_nodes).
inline PVResult pv_apply(const LaplaceSymbol& sym, const Grid& grid, const Source& src, const PVConfig& cfg) {
    cfg.validate();
    const Order& order = grid->order();
    const std::size_t n = order.n();
    const KernelEvaluator ev(sym, order, cfg.time);
    PVResult res;
    res.grid = grid;
    res.nodes = eval_node_list(*grid, cfg);
    res.eps = cfg.eps;
    for (double e : cfg.eps) res.alpha.push_back(alpha_epsilon(sym, n, e));
    const std::size_t m = res.nodes.size(), ne = cfg.eps.size();
    res.per_eps.assign(ne, std::vector<cplx>(m));
    res.value.assign(m, cplx{});
    res.last_increment.assign(m, 0.0);
    parallel_for(m, [&](std::size_t i) {
        const Point x = grid->point(res.nodes[i]);
        const PointProfile pr = point_profile(ev, x, src, cfg);
        std::vector<cplx> v(ne);
        for (std::size_t k = 0; k < ne; ++k) {
            v[k] = -(static_cast<double>(n) * res.alpha[k] * pr.fx + pr.truncated[k]);
            res.per_eps[k][i] = v[k];
        }
        res.last_increment[i] = std::abs(v[ne - 1] - v[ne - 2]);
        res.value[i] = cfg.extrapolate ? extrapolate_to_zero(cfg.eps, v) : v.back();
    });
    res.extrapolated = cfg.extrapolate;
    return res;
}

/// Grid-function form: the samples are interpolated panel by panel.
inline PVResult pv_apply(const LaplaceSymbol& sym, const GridFunction& f, const PVConfig& cfg = {}) {
    return pv_apply(sym, f.grid(), grid_source(f), cfg);
}

} // namespace hankel
