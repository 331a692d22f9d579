#pragma once

// Named operators applied to named inputs across grid resolutions, with
// L^p ratios and weak-(1,1) profiles collected into reports.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "analysis.hpp"
#include "hankel.hpp"
#include "measure_grid.hpp"
#include "multiplier.hpp"
#include "symbol.hpp"

namespace hankel {

enum class OperatorKind {
    spectral,
    pv,
    t_star,
    global,
    local_diff,
    t_loc_star,
    hardy,
    tensor_hardy,
    averaging,
    tail,
    gaussian_maximal,
    hl_maximal,
};

inline const std::vector<std::pair<std::string, OperatorKind>>& operator_table() {
    static const std::vector<std::pair<std::string, OperatorKind>> t = {
        {"spectral", OperatorKind::spectral},
        {"pv", OperatorKind::pv},
        {"t-star", OperatorKind::t_star},
        {"global", OperatorKind::global},
        {"local-diff", OperatorKind::local_diff},
        {"t-loc-star", OperatorKind::t_loc_star},
        {"hardy", OperatorKind::hardy},
        {"tensor-hardy", OperatorKind::tensor_hardy},
        {"averaging", OperatorKind::averaging},
        {"tail", OperatorKind::tail},
        {"gaussian-maximal", OperatorKind::gaussian_maximal},
        {"hl-maximal", OperatorKind::hl_maximal},
    };
    return t;
}

inline OperatorKind operator_from_name(const std::string& s) {
    for (const auto& [name, kind] : operator_table())
        if (name == s) return kind;
    throw parameter_error("unknown operator '" + s + "'");
}

inline std::string operator_name(OperatorKind k) {
    for (const auto& [name, kind] : operator_table())
        if (kind == k) return name;
    return "";
}

inline std::vector<std::string> operator_names() {
    std::vector<std::string> v;
    for (const auto& e : operator_table()) v.push_back(e.first);
    return v;
}

/// Everything an operator may need besides its input.
struct OperatorContext {
    LaplaceSymbol symbol = identity_symbol();
    PVConfig pv;
    TimeLadder ladder;
    RadiusLadder radii;
    double hi = 16.0;  // right end of every axis
};

/// Grid with `nodes` per axis on [0, ctx.hi], refined where the input needs it.
inline Grid experiment_grid(const Order& order, int nodes, const InputFunction& in, double hi = 16.0) {
    std::vector<AxisSpec> specs;
    for (std::size_t j = 0; j < order.n(); ++j) {
        AxisSpec s;
        s.hi = hi;
        s.nodes = nodes;
        if (j < in.grid_breaks.size()) s.breakpoints = in.grid_breaks[j];
        specs.push_back(s);
    }
    return make_grid(order, specs);
}

inline Source abs_source(const Source& src) {
    Source out = src;
    auto f = src.eval;
    out.eval = [f](const Point& y) -> cplx { return std::abs(f(y)); };
    return out;
}

/// T f on `grid`. Principal-value operators use the input's analytic source;
/// the others act on its samples.
inline GridFunction apply_operator(OperatorKind op, const OperatorContext& ctx, const Grid& grid,
                                   const InputFunction& in) {
    const GridFunction f = in.sample(grid);
    const auto& lambdas = grid->order().lambdas();
    switch (op) {
    case OperatorKind::spectral: return spectral_apply(ctx.symbol, TransformPlan(grid), f);
    case OperatorKind::pv: return pv_apply(ctx.symbol, grid, in.source, ctx.pv).as_grid_function();
    case OperatorKind::t_star: return to_complex(maximal_truncated_apply(ctx.symbol, grid, in.source, ctx.pv));
    case OperatorKind::global:
        return to_complex(global_operator_apply(ctx.symbol, grid, abs_source(in.source), ctx.pv));
    case OperatorKind::local_diff:
        return to_complex(local_diff_operator_apply(ctx.symbol, grid, abs_source(in.source), ctx.pv));
    case OperatorKind::t_loc_star: return to_complex(t_loc_star_apply(ctx.symbol, grid, in.source, ctx.pv));
    case OperatorKind::hardy: return hardy_apply(lambdas.at(0), f);
    case OperatorKind::tensor_hardy: return tensor_hardy_apply(lambdas, f);
    case OperatorKind::averaging: return averaging_apply(lambdas, f);
    case OperatorKind::tail: return to_complex(tail_operator_apply(f));
    case OperatorKind::gaussian_maximal: return to_complex(gaussian_maximal_apply(lambdas, f, ctx.ladder));
    case OperatorKind::hl_maximal: return to_complex(hl_maximal(f, ctx.radii));
    }
    throw parameter_error("unhandled operator");
}

/// sup_gamma gamma m{|f| > gamma}, exact over the node values.
template <class T>
double weak_type_sup(const BasicGridFunction<T>& f) {
    const auto& g = *f.grid();
    std::vector<std::pair<double, double>> vw;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double v = std::abs(f[i]);
        if (v > 0.0) vw.emplace_back(v, g.weight(i));
    }
    std::sort(vw.begin(), vw.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    double best = 0.0, mass = 0.0;
    for (std::size_t k = 0; k < vw.size(); ++k) {
        mass += vw[k].second;
        // Ties share one level set.
        if (k + 1 < vw.size() && vw[k + 1].first == vw[k].first) continue;
        best = std::max(best, vw[k].first * mass);
    }
    return best;
}

struct ReportRow {
    std::string input;
    int resolution = 0;
    double value = 0.0;
};

/// One operator, one exponent (p = 0 marks the weak-(1,1) profile), rows per
/// input and resolution.
struct OperatorReport {
    std::string op;
    double p = 2.0;
    std::vector<ReportRow> rows;
    bool growing = false;         // some input's value grows by > 10% under refinement
    double spread = 0.0;          // max/min - 1 over all rows
    double growth_threshold = 0.1;

    std::string p_label() const { return p == 0.0 ? "weak" : format_double(p); }

    void summarize() {
        growing = false;
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& r : rows) {
            lo = std::min(lo, r.value);
            hi = std::max(hi, r.value);
        }
        spread = rows.empty() || !(lo > 0.0) ? (hi > 0.0 ? std::numeric_limits<double>::infinity() : 0.0) : hi / lo - 1.0;
        for (const auto& a : rows)
            for (const auto& b : rows)
                if (a.input == b.input && b.resolution > a.resolution && b.value > a.value * (1.0 + growth_threshold))
                    growing = true;
    }

    void write_csv(std::ostream& os, bool header = true) const {
        if (header) os << "operator,p_or_weak,input,resolution,value\n";
        for (const auto& r : rows)
            os << op << ',' << p_label() << ',' << r.input << ',' << r.resolution << ',' << format_double(r.value)
               << '\n';
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["operator"] = op;
        j["p_or_weak"] = p_label();
        j["growing"] = growing;
        j["spread"] = spread;
        auto& rs = j["rows"] = nlohmann::ordered_json::array();
        for (const auto& r : rows) rs.push_back({{"input", r.input}, {"resolution", r.resolution}, {"value", r.value}});
        return j;
    }
};

/// ||T f||_p / ||f||_p for each input at each resolution.
inline OperatorReport lp_ratio_experiment(OperatorKind op, const OperatorContext& ctx, const Order& order, double p,
                                          const std::vector<std::string>& inputs, const std::vector<int>& resolutions) {
    if (!(p >= 1.0)) throw parameter_error("lp_ratio_experiment: p must be >= 1");
    if (resolutions.size() < 2) throw parameter_error("experiments need at least two resolutions");
    OperatorReport rep;
    rep.op = operator_name(op);
    rep.p = p;
    for (const auto& name : inputs) {
        const InputFunction in = make_input(name, order);
        for (int n : resolutions) {
            const Grid g = experiment_grid(order, n, in, ctx.hi);
            const GridFunction f = in.sample(g);
            const double nf = lp_norm(f, p);
            if (!(nf > 0.0)) throw input_error("input '" + name + "' vanishes on the grid");
            rep.rows.push_back({in.label, n, lp_norm(apply_operator(op, ctx, g, in), p) / nf});
        }
    }
    rep.summarize();
    return rep;
}

/// sup_gamma gamma m{|T f| > gamma} / ||f||_1 for each input at each resolution.
inline OperatorReport weak11_experiment(OperatorKind op, const OperatorContext& ctx, const Order& order,
                                        const std::vector<std::string>& inputs, const std::vector<int>& resolutions) {
    if (resolutions.size() < 2) throw parameter_error("experiments need at least two resolutions");
    OperatorReport rep;
    rep.op = operator_name(op);
    rep.p = 0.0;
    for (const auto& name : inputs) {
        const InputFunction in = make_input(name, order);
        for (int n : resolutions) {
            const Grid g = experiment_grid(order, n, in, ctx.hi);
            const double nf = lp_norm(in.sample(g), 1.0);
            if (!(nf > 0.0)) throw input_error("input '" + name + "' vanishes on the grid");
            rep.rows.push_back({in.label, n, weak_type_sup(apply_operator(op, ctx, g, in)) / nf});
        }
    }
    rep.summarize();
    return rep;
}

} // namespace hankel
