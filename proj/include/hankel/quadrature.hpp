#pragma once

// Gauss rules and composite panel integrators.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace hankel {

/// Nodes and weights on [-1, 1].
struct Rule {
    std::vector<double> x, w;
};

namespace detail {

// Golub-Welsch for the weight (1-x)^a (1+x)^b on [-1, 1].
inline Rule golub_welsch_jacobi(int n, double a, double b) {
    if (n < 1) throw parameter_error("quadrature rule needs at least one node");
    if (!(a > -1.0) || !(b > -1.0)) throw parameter_error("Jacobi exponents must exceed -1");
    Eigen::VectorXd diag(n), off(n > 1 ? n - 1 : 1);
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + a + b;
        diag(k) = (k == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    }
    for (int k = 1; k < n; ++k) {
        const double s = 2.0 * k + a + b;
        const double num = 4.0 * k * (k + a) * (k + b) * (k + a + b);
        const double den = s * s * (s + 1.0) * (s - 1.0);
        off(k - 1) = std::sqrt(num / den);
    }
    const double mu0 = std::exp((a + b + 1.0) * std::numbers::ln2 + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                                std::lgamma(a + b + 2.0));
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    if (n == 1) {
        r.x[0] = diag(0);
        r.w[0] = mu0;
        return r;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off.head(n - 1));
    for (int i = 0; i < n; ++i) {
        r.x[i] = es.eigenvalues()(i);
        const double v = es.eigenvectors()(0, i);
        r.w[i] = mu0 * v * v;
    }
    return r;
}

// Legendre nodes by Newton iteration on P_n; weights from P_n'.
inline Rule newton_legendre(int n) {
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        r.x[n - 1 - i] = x;
        r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

} // namespace detail

/// n-point Gauss-Legendre rule on [-1, 1] (cached).
inline const Rule& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, Rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) {
        if (n < 1) throw parameter_error("quadrature rule needs at least one node");
        it = cache.emplace(n, detail::newton_legendre(n)).first;
    }
    return it->second;
}

/// n-point Gauss rule on [0, 1] for the weight u^beta (cached).
inline const Rule& gauss_jacobi_unit(int n, double beta) {
    static std::mutex mu;
    static std::map<std::pair<int, double>, Rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    const auto key = std::make_pair(n, beta);
    auto it = cache.find(key);
    if (it == cache.end()) {
        Rule r = detail::golub_welsch_jacobi(n, 0.0, beta);
        const double scale = std::pow(0.5, beta + 1.0);
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            r.x[i] = 0.5 * (r.x[i] + 1.0);
            r.w[i] *= scale;
        }
        it = cache.emplace(key, std::move(r)).first;
    }
    return it->second;
}

/// Sum f(t) dt over [a, b] with an n-point Gauss-Legendre rule.
template <class F>
auto gl_panel(F&& f, double a, double b, int n) {
    const Rule& r = gauss_legendre(n);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    decltype(f(a)) s{};
    for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(mid + half * r.x[i]);
    return s * half;
}

/// Composite rule on [a, b] in the variable s = ln t: panels of log-width at
/// most `max_width`, split at every breakpoint inside (a, b).
template <class F>
auto log_panels(F&& f, double a, double b, const std::vector<double>& breaks, int n, double max_width) {
    decltype(f(a)) total{};
    if (!(b > a) || !(a > 0.0)) return total;
    std::vector<double> cuts{a};
    for (double c : breaks)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    auto g = [&](double s) {
        const double t = std::exp(s);
        return f(t) * t;
    };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double sa = std::log(cuts[i]), sb = std::log(cuts[i + 1]);
        if (!(sb > sa)) continue;
        const int pieces = std::max(1, static_cast<int>(std::ceil((sb - sa) / max_width)));
        const double h = (sb - sa) / pieces;
        for (int p = 0; p < pieces; ++p) total += gl_panel(g, sa + p * h, sa + (p + 1) * h, n);
    }
    return total;
}

/// Pairwise (tree) summation; the reduction order depends only on the length.
template <class T>
T pairwise_sum(const T* v, std::size_t n) {
    if (n <= 8) {
        T s{};
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

template <class T>
T pairwise_sum(const std::vector<T>& v) {
    return pairwise_sum(v.data(), v.size());
}

} // namespace hankel
