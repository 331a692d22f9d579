#pragma once

// Experiment configuration: a JSON document checked key by key. Unknown keys,
// wrong types and out-of-range values are reported with their JSON path.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "analysis.hpp"
#include "experiments.hpp"
#include "measure_grid.hpp"
#include "multiplier.hpp"
#include "symbol.hpp"
#include "verify.hpp"

namespace hankel {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KernelProbe {
    Point x, y;
    double t = 1.0;
};

struct SliceAxis {
    double lo = 0.5, hi = 2.0;
    int count = 4;

    std::vector<double> values() const {
        std::vector<double> v;
        for (int i = 0; i < count; ++i) v.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
        return v;
    }
};

struct KernelSlice {
    double t = 0.25;
    SliceAxis x, y;
};

struct ExperimentConfig {
    Order order = Order({1.0});
    std::vector<AxisSpec> axes{default_axis_spec(1)};
    std::string symbol_spec = "identity";
    LaplaceSymbol symbol = identity_symbol();
    std::vector<std::string> inputs{"bump"};
    PVConfig pv;
    TimeLadder time_ladder;
    RadiusLadder radius_ladder;
    std::map<std::string, double> tolerances;
    std::uint64_t seed = 1;

    struct Verify {
        std::vector<std::string> suites = suite_names();
        std::vector<double> betas{0.5, 1.0, 2.0};
        int heat_samples = 100;
        std::size_t envelope_probes = 10000;
        std::size_t dual_path_stride = 0;
    } verify;

    struct Operator {
        std::vector<std::string> names;
        std::vector<double> p{0.0};  // 0 marks the weak-(1,1) profile
        std::vector<int> resolutions{128, 256};
        std::vector<double> hardy_betas{-0.4, 0.0, 0.5, 1.0, 2.3};
        double stability = 0.25;
        bool fail_on_unstable = false;
    } op;

    struct KernelDump {
        std::vector<KernelProbe> probes;
        std::optional<KernelSlice> slice;
    } dump;

    VerifySettings verify_settings(double tolerance_scale) const {
        VerifySettings s;
        s.order = order;
        s.axis = axes.front();
        s.symbol = symbol;
        s.pv = pv;
        s.tolerances = tolerances;
        s.tolerance_scale = tolerance_scale;
        s.seed = seed;
        s.betas = verify.betas;
        s.heat_samples = verify.heat_samples;
        s.envelope_probes = verify.envelope_probes;
        s.dual_path_stride = verify.dual_path_stride;
        return s;
    }

    Grid grid() const { return make_grid(order, axes); }

    OperatorContext operator_context() const {
        OperatorContext c;
        c.symbol = symbol;
        c.pv = pv;
        c.ladder = time_ladder;
        c.radii = radius_ladder;
        c.hi = axes.front().hi;
        return c;
    }
};

namespace detail {

using json = nlohmann::json;

inline std::string json_type(const json& j) { return j.type_name(); }

// A JSON object plus its path; every key must be consumed or it is rejected.
class ConfigNode {
public:
    ConfigNode(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("expected an object, got " + json_type(j_));
    }

    [[noreturn]] void fail(const std::string& msg) const { throw config_error(path_ + ": " + msg); }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    std::string child_path(const std::string& key) const { return path_ + "." + key; }
    const json& raw(const std::string& key) const { return j_.at(key); }

    ConfigNode object(const std::string& key) {
        seen_.insert(key);
        return ConfigNode(j_.at(key), child_path(key));
    }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        return as_number(j_.at(key), child_path(key));
    }

    int integer(const std::string& key, int fallback) {
        if (!has(key)) return fallback;
        return as_integer(j_.at(key), child_path(key));
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_boolean()) throw config_error(child_path(key) + ": expected a boolean");
        return j_.at(key).get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        return as_string(j_.at(key), child_path(key));
    }

    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
        if (!has(key)) return fallback;
        std::vector<double> v;
        const json& a = array(key);
        for (std::size_t i = 0; i < a.size(); ++i)
            v.push_back(as_number(a[i], child_path(key) + "[" + std::to_string(i) + "]"));
        return v;
    }

    std::vector<std::string> strings(const std::string& key, const std::vector<std::string>& fallback) {
        if (!has(key)) return fallback;
        std::vector<std::string> v;
        const json& a = array(key);
        for (std::size_t i = 0; i < a.size(); ++i)
            v.push_back(as_string(a[i], child_path(key) + "[" + std::to_string(i) + "]"));
        return v;
    }

    const json& array(const std::string& key) {
        seen_.insert(key);
        const json& a = j_.at(key);
        if (!a.is_array()) throw config_error(child_path(key) + ": expected an array, got " + json_type(a));
        return a;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw config_error(child_path(it.key()) + ": unknown key");
    }

    static double as_number(const json& v, const std::string& path) {
        if (!v.is_number()) throw config_error(path + ": expected a number, got " + json_type(v));
        return v.get<double>();
    }

    static int as_integer(const json& v, const std::string& path) {
        if (!v.is_number_integer()) throw config_error(path + ": expected an integer, got " + json_type(v));
        return v.get<int>();
    }

    static std::string as_string(const json& v, const std::string& path) {
        if (!v.is_string()) throw config_error(path + ": expected a string, got " + json_type(v));
        return v.get<std::string>();
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

// Runs `f`, turning library validation errors into config errors at `path`.
template <class F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const config_error&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw config_error(path + ": " + e.what());
    }
}

inline AxisSpec parse_axis(ConfigNode& node, AxisSpec s) {
    s.lo = node.number("lo", s.lo);
    s.hi = node.number("hi", s.hi);
    s.nodes = node.integer("nodes", s.nodes);
    s.panel_order = node.integer("panel_order", s.panel_order);
    s.graded_panels = node.integer("graded_panels", s.graded_panels);
    s.breakpoints = node.numbers("breakpoints", s.breakpoints);
    return s;
}

inline void check_axis(const AxisSpec& s, const std::string& path) {
    if (s.nodes < 16) throw config_error(path + ".nodes: node count must be at least 16");
    if (!(s.lo >= 0.0) || !(s.hi > s.lo)) throw config_error(path + ": bounds must satisfy 0 <= lo < hi");
    if (s.panel_order < 2 || s.panel_order > 64) throw config_error(path + ".panel_order: must lie in [2, 64]");
    if (s.graded_panels < 0 || s.graded_panels > 30) throw config_error(path + ".graded_panels: must lie in [0, 30]");
}

inline void parse_grid(ConfigNode node, ExperimentConfig& c) {
    const std::size_t n = c.order.n();
    AxisSpec common = parse_axis(node, default_axis_spec(n));
    c.axes.assign(n, common);
    if (node.has("axes")) {
        const json& a = node.array("axes");
        if (a.size() != n)
            throw config_error(node.child_path("axes") + ": expected " + std::to_string(n) + " entries (one per lambda)");
        for (std::size_t j = 0; j < n; ++j) {
            ConfigNode ax(a[j], node.child_path("axes") + "[" + std::to_string(j) + "]");
            c.axes[j] = parse_axis(ax, common);
            ax.finish();
        }
    }
    node.finish();
}

inline void parse_pv(ConfigNode node, PVConfig& pv) {
    if (node.has("eps")) {
        if (node.has("eps_schedule")) node.fail("give either eps or eps_schedule, not both");
        pv.eps = node.numbers("eps", pv.eps);
    } else if (node.has("eps_schedule")) {
        ConfigNode s = node.object("eps_schedule");
        const double d = s.number("diam0", 0.5);
        const int levels = s.integer("levels", 12);
        s.finish();
        if (!(d > 0.0) || levels < 2 || levels > 40)
            throw config_error(node.child_path("eps_schedule") + ": need diam0 > 0 and 2 <= levels <= 40");
        pv.eps = dyadic_schedule(d, levels);
    }
    pv.extrapolate = node.boolean("extrapolate", pv.extrapolate);
    pv.radial_order = node.integer("radial_order", pv.radial_order);
    pv.max_panel = node.number("max_panel", pv.max_panel);
    pv.directions = node.integer("directions", pv.directions);
    pv.inner_levels = node.integer("inner_levels", pv.inner_levels);
    if (node.has("time")) {
        ConfigNode t = node.object("time");
        pv.time.nodes = t.integer("nodes", pv.time.nodes);
        pv.time.max_log_width = t.number("max_log_width", pv.time.max_log_width);
        pv.time.lower_factor = t.number("lower_factor", pv.time.lower_factor);
        pv.time.upper_factor = t.number("upper_factor", pv.time.upper_factor);
        t.finish();
        if (pv.time.nodes < 2 || !(pv.time.max_log_width > 0.0) || !(pv.time.lower_factor > 0.0) ||
            !(pv.time.upper_factor > 1.0))
            throw config_error(node.child_path("time") + ": invalid time quadrature settings");
    }
    node.finish();
    at_path("$.pv", [&] {
        pv.validate();
        return 0;
    });
}

inline KernelProbe parse_probe(ConfigNode node, std::size_t n) {
    KernelProbe p;
    p.x = node.numbers("x", {});
    p.y = node.numbers("y", {});
    p.t = node.number("t", 1.0);
    node.finish();
    if (p.x.size() != n || p.y.size() != n) node.fail("x and y need one coordinate per lambda");
    for (std::size_t j = 0; j < n; ++j)
        if (!(p.x[j] > 0.0) || !(p.y[j] > 0.0)) node.fail("coordinates must be positive");
    if (!(p.t > 0.0)) node.fail("t must be positive");
    return p;
}

inline SliceAxis parse_slice_axis(ConfigNode node) {
    SliceAxis a;
    a.lo = node.number("lo", a.lo);
    a.hi = node.number("hi", a.hi);
    a.count = node.integer("count", a.count);
    node.finish();
    if (!(a.lo > 0.0) || !(a.hi >= a.lo) || a.count < 1 || a.count > 100000)
        node.fail("need 0 < lo <= hi and 1 <= count <= 100000");
    return a;
}

inline double parse_p(const json& v, const std::string& path) {
    if (v.is_string()) {
        if (v.get<std::string>() == "weak") return 0.0;
        throw config_error(path + ": expected a number >= 1 or \"weak\"");
    }
    const double p = ConfigNode::as_number(v, path);
    if (!(p >= 1.0)) throw config_error(path + ": p must be >= 1");
    return p;
}

inline void check_operator(OperatorKind op, const Order& order, const std::string& path) {
    const std::size_t n = order.n();
    switch (op) {
    case OperatorKind::hardy:
        if (n != 1) throw config_error(path + ": hardy acts on one-dimensional grids");
        break;
    case OperatorKind::hl_maximal:
        for (double l : order.lambdas())
            if (l != 0.0) throw config_error(path + ": hl-maximal needs an unweighted grid (every lambda = 0)");
        break;
    case OperatorKind::pv:
    case OperatorKind::t_star:
    case OperatorKind::global:
    case OperatorKind::local_diff:
    case OperatorKind::t_loc_star:
        if (n > 3) throw config_error(path + ": principal-value operators support n <= 3");
        break;
    default: break;
    }
}

} // namespace detail

/// 1-based line and column of a byte offset.
inline std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

inline ExperimentConfig parse_config(const std::string& text) {
    using detail::ConfigNode;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // nlohmann reports the byte just past the offending token.
        const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        std::string what = e.what();
        const auto colon = what.find("syntax error");
        if (colon != std::string::npos) what = what.substr(colon);
        throw config_error("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                           what);
    }

    ExperimentConfig c;
    ConfigNode root(j, "$");
    if (root.has("order")) {
        const auto ls = root.numbers("order", {});
        c.order = detail::at_path("$.order", [&] { return Order(ls); });
    }
    if (root.has("grid")) detail::parse_grid(root.object("grid"), c);
    else c.axes.assign(c.order.n(), default_axis_spec(c.order.n()));
    for (std::size_t j = 0; j < c.axes.size(); ++j) detail::check_axis(c.axes[j], "$.grid.axes[" + std::to_string(j) + "]");

    c.symbol_spec = root.string("symbol", c.symbol_spec);
    c.symbol = detail::at_path("$.symbol", [&] { return symbol_from_preset(c.symbol_spec); });

    c.inputs = root.strings("inputs", c.inputs);
    for (std::size_t i = 0; i < c.inputs.size(); ++i)
        detail::at_path("$.inputs[" + std::to_string(i) + "]", [&] { return make_input(c.inputs[i], c.order); });

    if (root.has("pv")) detail::parse_pv(root.object("pv"), c.pv);

    if (root.has("time_ladder")) {
        ConfigNode t = root.object("time_ladder");
        c.time_ladder.t_min = t.number("t_min", c.time_ladder.t_min);
        c.time_ladder.t_max = t.number("t_max", c.time_ladder.t_max);
        c.time_ladder.rungs = t.integer("rungs", c.time_ladder.rungs);
        c.time_ladder.extend = t.boolean("extend", c.time_ladder.extend);
        t.finish();
        if (!(c.time_ladder.t_min > 0.0) || !(c.time_ladder.t_max > c.time_ladder.t_min) || c.time_ladder.rungs < 2)
            t.fail("need 0 < t_min < t_max and rungs >= 2");
    }
    if (root.has("radius_ladder")) {
        ConfigNode r = root.object("radius_ladder");
        c.radius_ladder.r_min = r.number("r_min", c.radius_ladder.r_min);
        c.radius_ladder.r_max = r.number("r_max", c.radius_ladder.r_max);
        c.radius_ladder.per_octave = r.integer("per_octave", c.radius_ladder.per_octave);
        r.finish();
        if (c.radius_ladder.r_min < 0.0 || c.radius_ladder.r_max < 0.0 || c.radius_ladder.per_octave < 1 ||
            (c.radius_ladder.r_max > 0.0 && c.radius_ladder.r_max < c.radius_ladder.r_min))
            r.fail("need 0 <= r_min <= r_max (0 selects the default) and per_octave >= 1");
    }

    if (root.has("verify")) {
        ConfigNode v = root.object("verify");
        c.verify.suites = v.strings("suites", c.verify.suites);
        const auto known = suite_names();
        for (std::size_t i = 0; i < c.verify.suites.size(); ++i)
            if (std::find(known.begin(), known.end(), c.verify.suites[i]) == known.end())
                throw config_error("$.verify.suites[" + std::to_string(i) + "]: unknown suite '" + c.verify.suites[i] +
                                   "'");
        c.verify.betas = v.numbers("betas", c.verify.betas);
        c.verify.heat_samples = v.integer("heat_samples", c.verify.heat_samples);
        const int probes = v.integer("envelope_probes", static_cast<int>(c.verify.envelope_probes));
        const int stride = v.integer("dual_path_stride", static_cast<int>(c.verify.dual_path_stride));
        v.finish();
        if (c.verify.heat_samples < 1) throw config_error("$.verify.heat_samples: must be positive");
        if (probes < 1) throw config_error("$.verify.envelope_probes: must be positive");
        if (stride < 0) throw config_error("$.verify.dual_path_stride: must be nonnegative");
        c.verify.envelope_probes = static_cast<std::size_t>(probes);
        c.verify.dual_path_stride = static_cast<std::size_t>(stride);
    }

    if (root.has("operator")) {
        ConfigNode o = root.object("operator");
        c.op.names = o.strings("names", c.op.names);
        for (std::size_t i = 0; i < c.op.names.size(); ++i) {
            const std::string path = "$.operator.names[" + std::to_string(i) + "]";
            const auto kind = detail::at_path(path, [&] { return operator_from_name(c.op.names[i]); });
            detail::check_operator(kind, c.order, path);
        }
        if (o.has("p")) {
            c.op.p.clear();
            const auto& a = o.array("p");
            for (std::size_t i = 0; i < a.size(); ++i)
                c.op.p.push_back(detail::parse_p(a[i], "$.operator.p[" + std::to_string(i) + "]"));
        }
        if (o.has("resolutions")) {
            c.op.resolutions.clear();
            const auto& a = o.array("resolutions");
            for (std::size_t i = 0; i < a.size(); ++i) {
                const std::string path = "$.operator.resolutions[" + std::to_string(i) + "]";
                const int r = ConfigNode::as_integer(a[i], path);
                if (r < 16) throw config_error(path + ": node count must be at least 16");
                c.op.resolutions.push_back(r);
            }
        }
        if (c.op.resolutions.size() < 2) throw config_error("$.operator.resolutions: need at least two resolutions");
        c.op.hardy_betas = o.numbers("hardy_betas", c.op.hardy_betas);
        for (std::size_t i = 0; i < c.op.hardy_betas.size(); ++i)
            if (!(c.op.hardy_betas[i] > -0.5))
                throw config_error("$.operator.hardy_betas[" + std::to_string(i) + "]: beta must exceed -1/2");
        c.op.stability = o.number("stability", c.op.stability);
        c.op.fail_on_unstable = o.boolean("fail_on_unstable", c.op.fail_on_unstable);
        o.finish();
    }

    if (root.has("kernel_dump")) {
        ConfigNode k = root.object("kernel_dump");
        if (k.has("probes")) {
            const auto& a = k.array("probes");
            for (std::size_t i = 0; i < a.size(); ++i)
                c.dump.probes.push_back(
                    detail::parse_probe(ConfigNode(a[i], "$.kernel_dump.probes[" + std::to_string(i) + "]"), c.order.n()));
        }
        if (k.has("slice")) {
            ConfigNode s = k.object("slice");
            KernelSlice sl;
            sl.t = s.number("t", sl.t);
            if (!(sl.t > 0.0)) s.fail("t must be positive");
            if (s.has("x")) sl.x = detail::parse_slice_axis(s.object("x"));
            if (s.has("y")) sl.y = detail::parse_slice_axis(s.object("y"));
            s.finish();
            c.dump.slice = sl;
        }
        k.finish();
    }

    if (root.has("tolerances")) {
        ConfigNode t = root.object("tolerances");
        for (const auto& [name, base] : default_tolerances()) {
            const double v = t.number(name, base);
            if (!(v > 0.0)) throw config_error("$.tolerances." + name + ": must be positive");
            if (v != base) c.tolerances[name] = v;
        }
        t.finish();
    }

    if (root.has("seed")) {
        const auto& v = root.raw("seed");
        if (!v.is_number_unsigned()) throw config_error("$.seed: expected a nonnegative integer");
        root.has("seed");
        c.seed = v.get<std::uint64_t>();
    }
    root.finish();

    // Every grid the run will build must be constructible.
    detail::at_path("$.grid", [&] { return c.grid(); });
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace hankel
