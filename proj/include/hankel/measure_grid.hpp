#pragma once

// Tensor quadrature grids on (0,inf)^n carrying the measure prod x_j^{2 lambda_j} dx,
// sampled functions on them, L^p / weak-L^1 functionals and dyadic cubes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"

namespace hankel {

using cplx = std::complex<double>;
using Point = std::vector<double>;

class Order {
public:
    Order() = default;
    explicit Order(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
        if (lambdas_.empty()) throw parameter_error("order needs at least one lambda");
        for (double l : lambdas_)
            if (!(l > -0.5) || !std::isfinite(l))
                throw parameter_error("λ must exceed −1/2 (got " + std::to_string(l) + ")");
    }
    static Order uniform(std::size_t n, double lambda) { return Order(std::vector<double>(n, lambda)); }

    std::size_t n() const { return lambdas_.size(); }
    double operator[](std::size_t j) const { return lambdas_[j]; }
    const std::vector<double>& lambdas() const { return lambdas_; }
    bool operator==(const Order&) const = default;

private:
    std::vector<double> lambdas_;
};

/// Layout of one axis. Panels are graded geometrically toward `lo` and have
/// width at most h elsewhere, with h chosen so that the panel count is
/// nodes / panel_order. A panel starting at 0 uses a Gauss rule for the weight
/// x^{2 lambda}.
struct AxisSpec {
    double lo = 0.0;
    double hi = 16.0;
    int nodes = 256;
    int panel_order = 8;
    int graded_panels = 4;
    std::vector<double> breakpoints;
};

struct Panel {
    double a, b;
    std::size_t first, count;
};

struct Axis {
    double lambda = 0.0;
    double lo = 0.0, hi = 0.0;
    std::vector<double> nodes;
    std::vector<double> base_weights;  // weight without the x^{2 lambda} factor
    std::vector<double> weights;       // combined weight
    std::vector<Panel> panels;
    std::vector<std::size_t> panel_of;

    std::size_t size() const { return nodes.size(); }
};

namespace detail {

inline std::vector<double> panel_cuts(const AxisSpec& s, double h) {
    std::vector<double> cuts{s.lo};
    if (s.lo == 0.0) {
        const int m = s.graded_panels;
        for (int k = m; k >= 1; --k) {
            const double c = h * std::ldexp(1.0, -k);
            if (c < s.hi) cuts.push_back(c);
        }
    } else {
        double c = s.lo;
        while (c < h && 2.0 * c < s.hi && s.graded_panels > 0) {
            c *= 2.0;
            cuts.push_back(c);
        }
    }
    double last = cuts.back();
    if (last < s.hi) {
        const int k = std::max(1, static_cast<int>(std::ceil((s.hi - last) / h - 1e-12)));
        for (int i = 1; i < k; ++i) cuts.push_back(last + (s.hi - last) * i / k);
        cuts.push_back(s.hi);
    }
    for (double b : s.breakpoints)
        if (b > s.lo && b < s.hi) cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(b)); }),
               cuts.end());
    return cuts;
}

} // namespace detail

inline Axis make_axis(double lambda, const AxisSpec& spec) {
    if (!(lambda > -0.5)) throw parameter_error("λ must exceed −1/2 (got " + std::to_string(lambda) + ")");
    if (!(spec.lo >= 0.0) || !(spec.hi > spec.lo) || !std::isfinite(spec.hi))
        throw parameter_error("axis bounds must satisfy 0 <= lo < hi");
    if (spec.panel_order < 2) throw parameter_error("panel order must be at least 2");
    const int target = std::max(1, spec.nodes / spec.panel_order);
    // Smallest uniform width h for which the panel count does not exceed the target.
    double lo_h = (spec.hi - spec.lo) / (target + 64.0), hi_h = spec.hi - spec.lo;
    auto count = [&](double h) { return static_cast<int>(detail::panel_cuts(spec, h).size()) - 1; };
    for (int it = 0; it < 200 && hi_h - lo_h > 1e-13 * hi_h; ++it) {
        const double mid = 0.5 * (lo_h + hi_h);
        (count(mid) <= target ? hi_h : lo_h) = mid;
    }
    const auto cuts = detail::panel_cuts(spec, hi_h);

    Axis ax;
    ax.lambda = lambda;
    ax.lo = spec.lo;
    ax.hi = spec.hi;
    const int q = spec.panel_order;
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        const double a = cuts[p], b = cuts[p + 1];
        Panel pan{a, b, ax.nodes.size(), static_cast<std::size_t>(q)};
        if (a == 0.0) {
            const Rule& r = gauss_jacobi_unit(q, 2.0 * lambda);
            const double scale = std::pow(b, 2.0 * lambda + 1.0);
            for (int i = 0; i < q; ++i) {
                const double x = b * r.x[i];
                ax.nodes.push_back(x);
                ax.weights.push_back(scale * r.w[i]);
                ax.base_weights.push_back(scale * r.w[i] / std::pow(x, 2.0 * lambda));
            }
        } else {
            const Rule& r = gauss_legendre(q);
            const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
            for (int i = 0; i < q; ++i) {
                const double x = mid + half * r.x[i];
                ax.nodes.push_back(x);
                ax.base_weights.push_back(half * r.w[i]);
                ax.weights.push_back(half * r.w[i] * std::pow(x, 2.0 * lambda));
            }
        }
        ax.panels.push_back(pan);
        for (int i = 0; i < q; ++i) ax.panel_of.push_back(p);
    }
    return ax;
}

class WeightedGrid {
public:
    WeightedGrid(Order order, std::vector<Axis> axes) : order_(std::move(order)), axes_(std::move(axes)) {
        if (axes_.size() != order_.n()) throw grid_mismatch("axis count differs from the order's dimension");
        for (std::size_t j = 0; j < axes_.size(); ++j) {
            if (axes_[j].lambda != order_[j]) throw grid_mismatch("axis lambda differs from the order");
            const auto& x = axes_[j].nodes;
            for (std::size_t i = 0; i < x.size(); ++i)
                if (!(x[i] > 0.0) || (i > 0 && !(x[i] > x[i - 1])))
                    throw grid_mismatch("axis nodes must be positive and strictly increasing");
        }
        strides_.assign(axes_.size(), 1);
        for (std::size_t j = axes_.size(); j-- > 1;) strides_[j - 1] = strides_[j] * axes_[j].size();
        size_ = strides_[0] * axes_[0].size();
    }

    const Order& order() const { return order_; }
    std::size_t dim() const { return axes_.size(); }
    const Axis& axis(std::size_t j) const { return axes_[j]; }
    const std::vector<Axis>& axes() const { return axes_; }
    std::size_t size() const { return size_; }
    std::size_t stride(std::size_t j) const { return strides_[j]; }
    std::vector<std::size_t> shape() const {
        std::vector<std::size_t> s;
        for (const auto& a : axes_) s.push_back(a.size());
        return s;
    }

    std::size_t index_along(std::size_t flat, std::size_t j) const { return (flat / strides_[j]) % axes_[j].size(); }

    Point point(std::size_t flat) const {
        Point p(axes_.size());
        for (std::size_t j = 0; j < axes_.size(); ++j) p[j] = axes_[j].nodes[index_along(flat, j)];
        return p;
    }

    double weight(std::size_t flat) const {
        double w = 1.0;
        for (std::size_t j = 0; j < axes_.size(); ++j) w *= axes_[j].weights[index_along(flat, j)];
        return w;
    }

    bool same_layout(const WeightedGrid& o) const {
        if (o.axes_.size() != axes_.size() || !(o.order_ == order_)) return false;
        for (std::size_t j = 0; j < axes_.size(); ++j)
            if (o.axes_[j].nodes != axes_[j].nodes || o.axes_[j].weights != axes_[j].weights) return false;
        return true;
    }

private:
    Order order_;
    std::vector<Axis> axes_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

using Grid = std::shared_ptr<const WeightedGrid>;

/// Grid with the same axis layout in every dimension.
inline Grid make_grid(const Order& order, const AxisSpec& spec) {
    std::vector<Axis> axes;
    for (std::size_t j = 0; j < order.n(); ++j) axes.push_back(make_axis(order[j], spec));
    return std::make_shared<const WeightedGrid>(order, std::move(axes));
}

inline Grid make_grid(const Order& order, const std::vector<AxisSpec>& specs) {
    if (specs.size() != order.n()) throw grid_mismatch("one axis spec per dimension required");
    std::vector<Axis> axes;
    for (std::size_t j = 0; j < order.n(); ++j) axes.push_back(make_axis(order[j], specs[j]));
    return std::make_shared<const WeightedGrid>(order, std::move(axes));
}

/// Default layout: 256 nodes per axis on [0, 16] for n <= 2, 96 for n = 3.
inline AxisSpec default_axis_spec(std::size_t n) {
    AxisSpec s;
    s.nodes = n <= 2 ? 256 : 96;
    return s;
}

template <class T>
class BasicGridFunction {
public:
    BasicGridFunction() = default;
    explicit BasicGridFunction(Grid g) : grid_(std::move(g)), values_(grid_->size()) {}
    BasicGridFunction(Grid g, std::vector<T> v) : grid_(std::move(g)), values_(std::move(v)) {
        if (values_.size() != grid_->size()) throw grid_mismatch("value count differs from grid size");
    }

    template <class F>
    static BasicGridFunction sample(Grid g, F&& f) {
        BasicGridFunction out(g);
        for (std::size_t i = 0; i < g->size(); ++i) out.values_[i] = static_cast<T>(f(g->point(i)));
        return out;
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    T& operator[](std::size_t i) { return values_[i]; }
    const T& operator[](std::size_t i) const { return values_[i]; }
    std::vector<T>& values() { return values_; }
    const std::vector<T>& values() const { return values_; }

    bool all_finite() const {
        for (const auto& v : values_)
            if (!std::isfinite(std::abs(v))) return false;
        return true;
    }

    BasicGridFunction& operator+=(const BasicGridFunction& o) {
        check_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    BasicGridFunction& operator-=(const BasicGridFunction& o) {
        check_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    BasicGridFunction& operator*=(T s) {
        for (auto& v : values_) v *= s;
        return *this;
    }
    friend BasicGridFunction operator+(BasicGridFunction a, const BasicGridFunction& b) { return a += b; }
    friend BasicGridFunction operator-(BasicGridFunction a, const BasicGridFunction& b) { return a -= b; }
    friend BasicGridFunction operator*(T s, BasicGridFunction a) { return a *= s; }

    void check_same(const BasicGridFunction& o) const {
        if (grid_ != o.grid_ && !grid_->same_layout(*o.grid_)) throw grid_mismatch("functions live on different grids");
    }

private:
    Grid grid_;
    std::vector<T> values_;
};

using GridFunction = BasicGridFunction<cplx>;
using RealGridFunction = BasicGridFunction<double>;

inline RealGridFunction abs(const GridFunction& f) {
    RealGridFunction out(f.grid());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = std::abs(f[i]);
    return out;
}

inline GridFunction to_complex(const RealGridFunction& f) {
    GridFunction out(f.grid());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i];
    return out;
}

/// Tensor quadrature of f against the weighted measure.
template <class T>
T integrate(const BasicGridFunction<T>& f) {
    const auto& g = *f.grid();
    std::vector<T> terms(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!std::isfinite(std::abs(f[i]))) throw input_error("integrate: non-finite sample");
        terms[i] = f[i] * g.weight(i);
    }
    return pairwise_sum(terms);
}

/// (integral |f|^p dm)^(1/p); p = infinity gives the max over nodes.
template <class T>
double lp_norm(const BasicGridFunction<T>& f, double p) {
    if (!(p >= 1.0)) throw parameter_error("lp_norm: p must be >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (const auto& v : f.values()) m = std::max(m, static_cast<double>(std::abs(v)));
        return m;
    }
    const auto& g = *f.grid();
    std::vector<double> terms(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) terms[i] = std::pow(std::abs(f[i]), p) * g.weight(i);
    return std::pow(pairwise_sum(terms), 1.0 / p);
}

/// Measure of {x : |f(x)| > gamma} from node weights.
template <class T>
double superlevel_measure(const BasicGridFunction<T>& f, double gamma) {
    const auto& g = *f.grid();
    std::vector<double> terms(f.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i)
        if (std::abs(f[i]) > gamma) terms[i] = g.weight(i);
    return pairwise_sum(terms);
}

/// (gamma, gamma * m{|f| > gamma}) for each gamma (ascending).
template <class T>
std::vector<std::pair<double, double>> weak_l1_profile(const BasicGridFunction<T>& f, const std::vector<double>& gammas) {
    if (gammas.empty()) throw parameter_error("weak_l1_profile: empty gamma list");
    if (!std::is_sorted(gammas.begin(), gammas.end())) throw parameter_error("weak_l1_profile: gammas must ascend");
    std::vector<std::pair<double, double>> out;
    double prev = std::numeric_limits<double>::infinity();
    for (double gm : gammas) {
        if (!(gm > 0.0)) throw parameter_error("weak_l1_profile: gammas must be positive");
        const double m = std::min(prev, superlevel_measure(f, gm));
        prev = m;
        out.emplace_back(gm, gm * m);
    }
    return out;
}

/// Q_j = prod [2^{j_i}, 2^{j_i+1}).
struct DyadicCube {
    std::vector<int> j;

    bool contains(const Point& x) const {
        for (std::size_t i = 0; i < j.size(); ++i)
            if (!(x[i] >= std::ldexp(1.0, j[i]) && x[i] < std::ldexp(1.0, j[i] + 1))) return false;
        return true;
    }
    // Enlarged cube prod [2^{j_i-1}, 2^{j_i+2}).
    bool enlarged_contains(const Point& x) const {
        for (std::size_t i = 0; i < j.size(); ++i)
            if (!(x[i] >= std::ldexp(1.0, j[i] - 1) && x[i] < std::ldexp(1.0, j[i] + 2))) return false;
        return true;
    }
    bool operator==(const DyadicCube&) const = default;
};

inline DyadicCube cube_of(const Point& x) {
    DyadicCube c;
    for (double v : x) {
        if (!(v > 0.0) || !std::isfinite(v)) throw input_error("cube_of: coordinates must be positive");
        int e;
        const double m = std::frexp(v, &e);  // v = m 2^e, m in [0.5, 1)
        (void)m;
        c.j.push_back(e - 1);
    }
    return c;
}

inline double cube_measure(const DyadicCube& c, const Order& order) {
    if (c.j.size() != order.n()) throw grid_mismatch("cube dimension differs from order");
    double m = 1.0;
    for (std::size_t i = 0; i < c.j.size(); ++i) {
        const double s = 2.0 * order[i] + 1.0;
        const double lo = std::ldexp(1.0, c.j[i]);
        m *= std::pow(lo, s) * std::expm1(s * std::numbers::ln2) / s;
    }
    return m;
}

/// Weighted measure of prod [a_j, b_j].
inline double box_measure(const Order& order, const Point& a, const Point& b) {
    double m = 1.0;
    for (std::size_t j = 0; j < order.n(); ++j) {
        const double s = 2.0 * order[j] + 1.0;
        m *= (std::pow(b[j], s) - std::pow(a[j], s)) / s;
    }
    return m;
}

/// CSV with columns x_1..x_n, re, im and 17 significant digits.
inline void write_csv(const GridFunction& f, std::ostream& os) {
    const auto& g = *f.grid();
    for (std::size_t j = 0; j < g.dim(); ++j) os << "x_" << (j + 1) << ',';
    os << "re,im\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Point p = g.point(i);
        for (double v : p) os << v << ',';
        os << f[i].real() << ',' << f[i].imag() << '\n';
    }
}

/// Reads values written by write_csv; coordinates must match the grid.
inline GridFunction read_csv(const Grid& grid, std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw input_error("read_csv: missing header");
    GridFunction f(grid);
    const std::size_t n = grid->dim();
    std::size_t row = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (row >= grid->size()) throw grid_mismatch("read_csv: more rows than grid nodes");
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
        if (cells.size() != n + 2) throw input_error("read_csv: wrong column count on row " + std::to_string(row + 2));
        const Point p = grid->point(row);
        for (std::size_t j = 0; j < n; ++j)
            if (std::abs(cells[j] - p[j]) > 1e-14 * std::max(1.0, std::abs(p[j])))
                throw grid_mismatch("read_csv: coordinates differ from grid on row " + std::to_string(row + 2));
        f[row] = cplx(cells[n], cells[n + 1]);
        ++row;
    }
    if (row != grid->size()) throw grid_mismatch("read_csv: fewer rows than grid nodes");
    return f;
}

} // namespace hankel
