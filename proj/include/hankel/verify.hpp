#pragma once

// Identity suites shared by the harness and the acceptance run. Each suite
// returns one row per case with the measured residual and its tolerance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "hankel.hpp"
#include "measure_grid.hpp"
#include "multiplier.hpp"
#include "semigroup.hpp"
#include "symbol.hpp"

namespace hankel {

enum class SuiteStatus { pass, fail, skipped, nonconvergence };

inline std::string status_name(SuiteStatus s) {
    switch (s) {
    case SuiteStatus::pass: return "pass";
    case SuiteStatus::fail: return "fail";
    case SuiteStatus::skipped: return "skipped";
    case SuiteStatus::nonconvergence: return "non-convergence";
    }
    return "";
}

struct SuiteResult {
    std::string suite;
    std::string label;
    double residual = 0.0;
    double tolerance = 0.0;
    bool lower_bound = false;  // residual must reach the tolerance instead of staying below it
    SuiteStatus status = SuiteStatus::pass;
    std::string note;

    bool passed() const { return status == SuiteStatus::pass || status == SuiteStatus::skipped; }
};

inline SuiteResult judge(std::string suite, std::string label, double residual, double tol, bool lower = false) {
    SuiteResult r{std::move(suite), std::move(label), residual, tol, lower, SuiteStatus::pass, {}};
    const bool ok = std::isfinite(residual) && (lower ? residual >= tol : residual <= tol);
    r.status = ok ? SuiteStatus::pass : SuiteStatus::fail;
    return r;
}

inline const std::map<std::string, double>& default_tolerances() {
    static const std::map<std::string, double> t = {
        {"involution", 1e-5},   {"plancherel", 1e-5},    {"gaussian-pair", 1e-6}, {"eigen", 1e-4},
        {"intertwining", 1e-4}, {"heat-kernel", 1e-7},   {"mass-one", 1e-6},      {"semigroup-law", 1e-6},
        {"dual-path", 2e-3},    {"normalization", 1e-8}, {"unitarity", 1e-5},     {"envelopes", 0.1},
        {"closed-form", 1e-8},
    };
    return t;
}

inline std::vector<std::string> suite_names() {
    return {"involution", "plancherel", "gaussian-pair", "eigen",    "intertwining", "heat-kernel",
            "mass-one",   "semigroup-law", "dual-path",  "normalization", "unitarity", "envelopes"};
}

struct VerifySettings {
    Order order = Order({1.0});
    AxisSpec axis = default_axis_spec(1);
    LaplaceSymbol symbol = identity_symbol();
    PVConfig pv;
    std::map<std::string, double> tolerances;  // overrides of default_tolerances()
    double tolerance_scale = 1.0;
    std::uint64_t seed = 1;
    std::vector<double> betas{0.5, 1.0, 2.0};  // unitarity
    int heat_samples = 100;
    std::size_t envelope_probes = 10000;
    std::size_t dual_path_stride = 0;  // 0: every node for n = 1, a sparse subset otherwise
    int eigen_min_order = 3;

    double tolerance(const std::string& suite) const {
        auto it = tolerances.find(suite);
        const double base = it != tolerances.end() ? it->second : default_tolerances().at(suite);
        return base * tolerance_scale;
    }

    Grid grid(int nodes = 0) const {
        AxisSpec s = axis;
        if (nodes > 0) s.nodes = nodes;
        return make_grid(order, s);
    }
};

namespace detail {

inline std::vector<double> distinct(const std::vector<double>& v) {
    std::vector<double> out = v;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// ||a - b||_2 / ||ref||_2 restricted to `nodes`.
inline double subset_relative(const WeightedGrid& g, const std::vector<std::size_t>& nodes, const GridFunction& a,
                              const GridFunction& b, const GridFunction& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t i : nodes) {
        num += g.weight(i) * std::norm(a[i] - b[i]);
        den += g.weight(i) * std::norm(ref[i]);
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

inline std::string lambda_label(double l) { return "lambda=" + format_double(l); }

// Eigen-identity residual of K(. y) on one axis, relative L2 over [0.05, 15].
inline double eigen_residual(double lambda, const AxisSpec& spec, double y) {
    const Grid g = make_grid(Order({lambda}), spec);
    const GridFunction f = GridFunction::sample(g, [&](const Point& p) { return hankel_kernel(lambda, p[0] * y); });
    const GridFunction d = bessel_operator_apply(f, 9);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double x = g->point(i)[0];
        if (x < 0.05 || x > 15.0) continue;
        num += g->weight(i) * std::norm(d[i] - y * y * f[i]);
        den += g->weight(i) * std::norm(y * y * f[i]);
    }
    return std::sqrt(num / den);
}

inline double intertwining_residual(const Grid& g, const GridFunction& f) {
    const TransformPlan plan(g);
    const GridFunction d = bessel_operator_apply(f, 9);
    const GridFunction hd = hankel_apply(plan, d), hf = hankel_apply(plan, f);
    GridFunction diff(g);
    for (std::size_t i = 0; i < g->size(); ++i) {
        const Point y = g->point(i);
        double r2 = 0.0;
        for (double v : y) r2 += v * v;
        diff[i] = hd[i] - r2 * hf[i];
    }
    return lp_norm(diff, 2.0) / lp_norm(d, 2.0);
}

inline double order_of(double coarse, double fine) { return std::log2(coarse / fine); }

} // namespace detail

/// Random heat-kernel probes: t log-uniform in [1e-2, 10], x log-uniform in
/// [0.1, 4], y = x + d with (x - y)^2 / 4t <= 8.
struct HeatProbe {
    double lambda, t, x, y;
};

inline std::vector<HeatProbe> heat_probes(const std::vector<double>& lambdas, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto logu = [&](double a, double b) { return a * std::pow(b / a, unit(rng)); };
    std::vector<HeatProbe> out;
    while (static_cast<int>(out.size()) < count) {
        const double lambda = lambdas[std::min<std::size_t>(lambdas.size() - 1, unit(rng) * lambdas.size())];
        const double t = logu(1e-2, 10.0), x = logu(0.1, 4.0);
        const double reach = std::sqrt(32.0 * t);
        const double y = x + reach * (2.0 * unit(rng) - 1.0);
        if (y < 0.05) continue;
        out.push_back({lambda, t, x, y});
    }
    return out;
}

inline std::vector<SuiteResult> suite_involution(const VerifySettings& s) {
    const Grid g = s.grid();
    const double r = self_inverse_residual(TransformPlan(g), bump_input(g->dim()).sample(g));
    return {judge("involution", "bump", r, s.tolerance("involution"))};
}

inline std::vector<SuiteResult> suite_plancherel(const VerifySettings& s) {
    const Grid g = s.grid();
    const auto f = bump_input(g->dim()).sample(g), h = band_limited_input(g->dim(), s.seed).sample(g);
    const double r = plancherel_residual(TransformPlan(g), f, h);
    return {judge("plancherel", "bump/band-limited:" + std::to_string(s.seed), r, s.tolerance("plancherel"))};
}

/// h(e^{-t|y|^2})(x) = prod_j (2t)^{-lambda_j - 1/2} e^{-x_j^2/4t} at t = 1/2,
/// checked on x in [0.1, 4]^n.
inline std::vector<SuiteResult> suite_gaussian_pair(const VerifySettings& s) {
    const double t = 0.5;
    const Grid g = s.grid();
    const auto& lambdas = g->order().lambdas();
    const GridFunction gauss = GridFunction::sample(g, [&](const Point& y) {
        double r2 = 0.0;
        for (double v : y) r2 += v * v;
        return std::exp(-t * r2);
    });
    const GridFunction hg = hankel_apply(TransformPlan(g), gauss);
    double worst = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const Point x = g->point(i);
        if (std::any_of(x.begin(), x.end(), [](double v) { return v < 0.1 || v > 4.0; })) continue;
        double exact = 1.0;
        for (std::size_t j = 0; j < x.size(); ++j)
            exact *= std::pow(2.0 * t, -lambdas[j] - 0.5) * std::exp(-x[j] * x[j] / (4.0 * t));
        worst = std::max(worst, std::abs(hg[i] / exact - 1.0));
    }
    return {judge("gaussian-pair", "t=0.5", worst, s.tolerance("gaussian-pair"))};
}

/// Delta K(., y) = y^2 K(., y) on each axis at the configured resolution and
/// at half of it; the second row is the observed order.
inline std::vector<SuiteResult> suite_eigen(const VerifySettings& s) {
    std::vector<SuiteResult> out;
    for (double lambda : detail::distinct(s.order.lambdas())) {
        AxisSpec fine = s.axis, coarse = s.axis;
        coarse.nodes = s.axis.nodes / 2;
        const double rf = detail::eigen_residual(lambda, fine, 1.3), rc = detail::eigen_residual(lambda, coarse, 1.3);
        out.push_back(judge("eigen", detail::lambda_label(lambda), rf, s.tolerance("eigen")));
        out.push_back(judge("eigen", detail::lambda_label(lambda) + " order " + std::to_string(coarse.nodes) + "->" +
                                         std::to_string(fine.nodes),
                            detail::order_of(rc, rf), s.eigen_min_order, true));
    }
    return out;
}

/// h(Delta f) = |y|^2 h(f) for the bump, with the same order check.
inline std::vector<SuiteResult> suite_intertwining(const VerifySettings& s) {
    const auto in = bump_input(s.order.n());
    const Grid gf = s.grid(), gc = s.grid(s.axis.nodes / 2);
    const double rf = detail::intertwining_residual(gf, in.sample(gf));
    const double rc = detail::intertwining_residual(gc, in.sample(gc));
    return {judge("intertwining", "bump", rf, s.tolerance("intertwining")),
            judge("intertwining",
                  "bump order " + std::to_string(s.axis.nodes / 2) + "->" + std::to_string(s.axis.nodes),
                  detail::order_of(rc, rf), s.eigen_min_order, true)};
}

inline std::vector<SuiteResult> suite_heat_kernel(const VerifySettings& s) {
    const auto probes = heat_probes(detail::distinct(s.order.lambdas()), s.heat_samples, s.seed);
    std::vector<double> res(probes.size());
    parallel_for(probes.size(), [&](std::size_t i) {
        const auto& p = probes[i];
        res[i] = heat_kernel_spectral_residual(p.lambda, p.t, p.x, p.y);
    });
    const double worst = res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
    return {judge("heat-kernel", std::to_string(probes.size()) + " random probes", worst, s.tolerance("heat-kernel"))};
}

/// int W_t(x, y) dm(y) = 1 for x in [0.1, 4] on each axis.
inline std::vector<SuiteResult> suite_mass_one(const VerifySettings& s) {
    std::vector<SuiteResult> out;
    for (double lambda : detail::distinct(s.order.lambdas())) {
        const Grid g = make_grid(Order({lambda}), s.axis);
        const Axis& ax = g->axis(0);
        double worst = 0.0;
        for (double t : {0.05, 0.5, 2.0}) {
            const Matrix m = semigroup_matrices(HeatKernelParams(Order({lambda}), t), *g)[0];
            for (std::size_t i = 0; i < ax.size(); ++i) {
                if (ax.nodes[i] < 0.1 || ax.nodes[i] > 4.0) continue;
                double sum = 0.0;
                for (std::size_t k = 0; k < ax.size(); ++k) sum += m(i, k);
                worst = std::max(worst, std::abs(sum - 1.0));
            }
        }
        out.push_back(judge("mass-one", detail::lambda_label(lambda), worst, s.tolerance("mass-one")));
    }
    return out;
}

/// W_s W_t f = W_{s+t} f for the bump.
inline std::vector<SuiteResult> suite_semigroup_law(const VerifySettings& s) {
    const Grid g = s.grid();
    const GridFunction f = bump_input(g->dim()).sample(g);
    const double a = 0.3, b = 0.5;
    const GridFunction two = semigroup_apply(HeatKernelParams(s.order, a), semigroup_apply(HeatKernelParams(s.order, b), f));
    const GridFunction one = semigroup_apply(HeatKernelParams(s.order, a + b), f);
    const double r = lp_norm(two - one, 2.0) / lp_norm(one, 2.0);
    return {judge("semigroup-law", "s=0.3,t=0.5", r, s.tolerance("semigroup-law"))};
}

/// Nodes used by the dual-path comparison: all of them in one dimension,
/// otherwise every stride-th node of the bump's core [2.5, 4.5]^n.
inline std::vector<std::size_t> dual_path_nodes(const WeightedGrid& g, std::size_t stride) {
    std::vector<std::size_t> nodes;
    if (g.dim() == 1 && stride <= 1) {
        for (std::size_t i = 0; i < g.size(); ++i) nodes.push_back(i);
        return nodes;
    }
    if (stride == 0) stride = g.dim() == 2 ? 7 : 5;
    std::size_t k = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.point(i);
        if (std::any_of(x.begin(), x.end(), [](double v) { return v < 2.5 || v > 4.5; })) continue;
        if (k++ % stride == 0) nodes.push_back(i);
    }
    return nodes;
}

struct DualPathResult {
    double residual = 0.0;                   // extrapolated PV vs spectral
    std::vector<double> per_eps;             // each truncation vs spectral
    int improvements = 0;                    // consecutive decreases at the end of per_eps
    bool monotone = false;                   // every step of the schedule improves
};

inline DualPathResult dual_path(const LaplaceSymbol& sym, const Grid& g, PVConfig cfg, std::size_t stride = 0) {
    const auto in = bump_input(g->dim());
    const GridFunction f = in.sample(g);
    const GridFunction sp = spectral_apply(sym, TransformPlan(g), f);
    const auto nodes = dual_path_nodes(*g, stride);
    cfg.eval_nodes = nodes;
    const PVResult pv = pv_apply(sym, g, in.source, cfg);
    DualPathResult out;
    out.residual = detail::subset_relative(*g, nodes, pv.as_grid_function(), sp, f);
    for (std::size_t k = 0; k < pv.eps.size(); ++k)
        out.per_eps.push_back(detail::subset_relative(*g, nodes, pv.truncation(k), sp, f));
    for (std::size_t k = out.per_eps.size(); k-- > 1 && out.per_eps[k] < out.per_eps[k - 1];) ++out.improvements;
    out.monotone = out.improvements + 1 == static_cast<int>(out.per_eps.size());
    return out;
}

inline std::vector<SuiteResult> suite_dual_path(const VerifySettings& s) {
    const auto r = dual_path(s.symbol, s.grid(), s.pv, s.dual_path_stride);
    auto row = judge("dual-path", s.symbol.label, r.residual, s.tolerance("dual-path"));
    row.note = "consecutive improvements " + std::to_string(r.improvements);
    auto mono = judge("dual-path", s.symbol.label + " improvements", r.improvements, 3, true);
    return {row, mono};
}

inline std::vector<SuiteResult> suite_normalization(const VerifySettings& s) {
    if (!s.symbol.phi_zero_plus) {
        SuiteResult r{"normalization", s.symbol.label, 0.0, s.tolerance("normalization"), false, SuiteStatus::skipped,
                      "symbol has no phi(0+)"};
        return {r};
    }
    const double c = normalization_C(s.symbol, s.order.n());
    return {judge("normalization", "n=" + std::to_string(s.order.n()), std::abs(c - 1.0), s.tolerance("normalization"))};
}

/// ||Delta^{i beta} f||_2 = ||f||_2 for f = h(bump). Its spectrum stays away
/// from y = 0, where |y|^{2 i beta} oscillates without bound; a spatial bump
/// would push part of Delta^{i beta} f out of the grid box.
inline std::vector<SuiteResult> suite_unitarity(const VerifySettings& s) {
    const Grid g = s.grid();
    const TransformPlan plan(g);
    const GridFunction f = hankel_apply(plan, bump_input(g->dim()).sample(g));
    std::vector<SuiteResult> out;
    for (double beta : s.betas) {
        const double r = lp_norm(spectral_apply(imaginary_power_symbol(beta), plan, f), 2.0) / lp_norm(f, 2.0);
        out.push_back(judge("unitarity", "beta=" + format_double(beta), std::abs(r - 1.0), s.tolerance("unitarity")));
    }
    return out;
}

/// Sup ratios at N and 2N probes; the residual is their relative change.
inline SuiteResult envelope_stability(const EnvelopeProbe& probe, std::size_t count, const LaplaceSymbol* sym,
                                      double tol, const std::string& label) {
    const auto a = envelope_sup(probe, count, sym), b = envelope_sup(probe, 2 * count, sym);
    const double change = b.sup_ratio == 0.0 && a.sup_ratio == 0.0 ? 0.0 : std::abs(b.sup_ratio / a.sup_ratio - 1.0);
    auto r = judge("envelopes", label, change, tol);
    if (!a.finite || !b.finite) r.status = SuiteStatus::fail;
    r.note = "sup ratio " + format_double(b.sup_ratio);
    return r;
}

inline std::vector<SuiteResult> suite_envelopes(const VerifySettings& s) {
    std::vector<SuiteResult> out;
    const double tol = s.tolerance("envelopes");
    for (double lambda : detail::distinct(s.order.lambdas()))
        for (Envelope e : {Envelope::heat_local, Envelope::heat_far, Envelope::dt_heat_far})
            out.push_back(envelope_stability({e, lambda, 1, s.seed}, s.envelope_probes, nullptr, tol,
                                             envelope_name(e) + " " + detail::lambda_label(lambda)));
    out.push_back(envelope_stability({Envelope::euclidean_decay, 0.0, s.order.n(), s.seed}, s.envelope_probes,
                                     &s.symbol, tol, "euclidean-decay " + s.symbol.label));
    return out;
}

/// Runs one suite by name. Non-convergence is reported as a row, not thrown.
inline std::vector<SuiteResult> run_suite(const std::string& name, const VerifySettings& s) {
    try {
        if (name == "involution") return suite_involution(s);
        if (name == "plancherel") return suite_plancherel(s);
        if (name == "gaussian-pair") return suite_gaussian_pair(s);
        if (name == "eigen") return suite_eigen(s);
        if (name == "intertwining") return suite_intertwining(s);
        if (name == "heat-kernel") return suite_heat_kernel(s);
        if (name == "mass-one") return suite_mass_one(s);
        if (name == "semigroup-law") return suite_semigroup_law(s);
        if (name == "dual-path") return suite_dual_path(s);
        if (name == "normalization") return suite_normalization(s);
        if (name == "unitarity") return suite_unitarity(s);
        if (name == "envelopes") return suite_envelopes(s);
    } catch (const convergence_error& e) {
        SuiteResult r{name, "", std::numeric_limits<double>::quiet_NaN(), 0.0, false, SuiteStatus::nonconvergence,
                      e.what()};
        return {r};
    }
    throw parameter_error("unknown verify suite '" + name + "'");
}

// ---------------------------------------------------------------------------
// Closed forms of the comparison operators.

struct ClosedFormRow {
    std::string op;
    std::string label;
    double computed;
    double exact;

    double error() const { return std::abs(computed - exact); }
};

/// H_beta chi_(0,1)(x) = 1/(2 beta + 1) for x <= 1, x^{-2 beta - 1}/(2 beta + 1) beyond.
inline std::vector<ClosedFormRow> hardy_closed_form(double beta, const AxisSpec& spec = {}) {
    AxisSpec sp = spec;
    sp.breakpoints.push_back(1.0);
    const Grid g = make_grid(Order({beta}), sp);
    const GridFunction chi = GridFunction::sample(g, [](const Point& y) { return y[0] < 1.0 ? 1.0 : 0.0; });
    std::vector<ClosedFormRow> rows;
    for (double x : {0.1, 0.25, 0.5, 0.9, 1.0, 1.5, 2.0, 5.0, 12.0}) {
        const double exact = (x <= 1.0 ? 1.0 : std::pow(x, -2.0 * beta - 1.0)) / (2.0 * beta + 1.0);
        rows.push_back({"hardy", "beta=" + format_double(beta) + " x=" + format_double(x),
                        hardy_eval(beta, chi, x).real(), exact});
    }
    return rows;
}

/// Tensor Hardy, averaging and tail operators on constants and indicators.
inline std::vector<ClosedFormRow> comparison_closed_forms(const AxisSpec& spec = {}) {
    std::vector<ClosedFormRow> rows;
    {
        const Grid g = make_grid(Order({0.0}), spec);
        const GridFunction one = GridFunction::sample(g, [](const Point&) { return 1.0; });
        for (double x : {0.3, 1.0, 4.0, 7.5}) {
            rows.push_back({"tensor-hardy", "g=1 k=1 beta=0 x=" + format_double(x),
                            tensor_hardy_eval({0.0}, one, {x}).real(), 0.5});
            rows.push_back({"averaging", "g=1 k=1 beta=0 x=" + format_double(x),
                            averaging_eval({0.0}, one, {x}).real(), 1.5});
        }
    }
    {
        AxisSpec sp = spec;
        sp.breakpoints.push_back(1.0);
        const Grid g1 = make_grid(Order({0.0}), sp);
        const auto chi = [](const Point& y) {
            for (double v : y)
                if (v > 1.0) return 0.0;
            return 1.0;
        };
        const GridFunction c1 = GridFunction::sample(g1, chi);
        rows.push_back({"tail", "k=1 chi(0,1] x=0.25", tail_operator_eval(c1, {0.25}), std::log(2.0)});
        rows.push_back({"tail", "k=1 chi(0,1] x=0.6", tail_operator_eval(c1, {0.6}), 0.0});
        const Grid g2 = make_grid(Order({0.0, 0.0}), sp);
        const GridFunction c2 = GridFunction::sample(g2, chi);
        rows.push_back({"tail", "k=2 chi(0,1]^2 x=(0.25,0.1)", tail_operator_eval(c2, {0.25, 0.1}),
                        std::log(2.0) * std::log(5.0)});
    }
    return rows;
}

} // namespace hankel
