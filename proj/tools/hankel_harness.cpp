// Batch runner: identity suites, operator experiments and kernel dumps driven
// by a JSON config. Exit codes: 0 pass, 1 tolerance failure, 2 configuration
// error, 3 non-convergence or incomplete run.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hankel/config.hpp"
#include "hankel/experiments.hpp"
#include "hankel/multiplier.hpp"
#include "hankel/semigroup.hpp"
#include "hankel/verify.hpp"

namespace fs = std::filesystem;
using namespace hankel;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kPass = 0;
constexpr int kToleranceFailure = 1;
constexpr int kConfigError = 2;
constexpr int kNonConvergence = 3;

struct Options {
    std::string config;
    std::string out = ".";
    unsigned threads = 0;
    double tolerance_scale = 1.0;
};

// Writes next to the target and renames, so readers never see a partial file.
void write_atomic(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ExperimentConfig load(const Options& o) { return o.config.empty() ? parse_config("{}") : load_config(o.config); }

ojson config_echo(const ExperimentConfig& c) {
    ojson j;
    j["order"] = c.order.lambdas();
    std::vector<int> nodes;
    for (const auto& a : c.axes) nodes.push_back(a.nodes);
    j["nodes"] = nodes;
    j["symbol"] = c.symbol_spec;
    j["seed"] = c.seed;
    return j;
}

int run_verify(const Options& o) {
    const ExperimentConfig cfg = load(o);
    const VerifySettings settings = cfg.verify_settings(o.tolerance_scale);
    std::vector<SuiteResult> rows;
    std::string incomplete;
    for (const auto& name : cfg.verify.suites) {
        try {
            for (auto& r : run_suite(name, settings)) rows.push_back(std::move(r));
        } catch (const std::bad_alloc&) {
            incomplete = "out of memory in suite '" + name + "'";
            break;
        }
        std::cerr << "verify: " << name << " done\n";
    }

    bool failed = false, nonconv = !incomplete.empty();
    ojson summary;
    summary["subcommand"] = "verify";
    summary["config"] = config_echo(cfg);
    summary["tolerance_scale"] = o.tolerance_scale;
    auto& results = summary["results"] = ojson::array();
    std::ostringstream csv;
    csv << "suite,case,residual,tolerance,bound,status\n";
    for (const auto& r : rows) {
        failed |= r.status == SuiteStatus::fail;
        nonconv |= r.status == SuiteStatus::nonconvergence;
        ojson e;
        e["suite"] = r.suite;
        e["case"] = r.label;
        e["residual"] = number_or_null(r.residual);
        e["tolerance"] = r.tolerance;
        e["bound"] = r.lower_bound ? "min" : "max";
        e["status"] = status_name(r.status);
        if (!r.note.empty()) e["note"] = r.note;
        results.push_back(e);
        csv << csv_field(r.suite) << ',' << csv_field(r.label) << ',' << g17(r.residual) << ',' << g17(r.tolerance)
            << ',' << (r.lower_bound ? "min" : "max") << ',' << status_name(r.status) << '\n';
        std::cout << (r.passed() ? "PASS " : "FAIL ") << r.suite << " [" << r.label << "] " << format_double(r.residual)
                  << (r.lower_bound ? " >= " : " <= ") << format_double(r.tolerance) << '\n';
    }
    const int code = nonconv ? kNonConvergence : failed ? kToleranceFailure : kPass;
    if (!incomplete.empty()) summary["incomplete"] = incomplete;
    summary["passed"] = code == kPass;
    summary["exit_code"] = code;
    write_atomic(fs::path(o.out) / "summary.json", summary.dump(2) + "\n");
    write_atomic(fs::path(o.out) / "residuals.csv", csv.str());
    return code;
}

// Closed-form tables for the comparison operators among `names`.
struct ClosedFormTable {
    std::string op;
    std::vector<ClosedFormRow> rows;
};

std::vector<ClosedFormTable> closed_form_tables(const ExperimentConfig& cfg) {
    std::vector<ClosedFormTable> out;
    const auto others = comparison_closed_forms();
    for (const auto& name : cfg.op.names) {
        ClosedFormTable t{name, {}};
        if (name == "hardy") {
            for (double b : cfg.op.hardy_betas)
                for (auto& r : hardy_closed_form(b)) t.rows.push_back(r);
        } else {
            for (const auto& r : others)
                if (r.op == name) t.rows.push_back(r);
        }
        if (!t.rows.empty()) out.push_back(std::move(t));
    }
    return out;
}

int run_operator(const Options& o) {
    const ExperimentConfig cfg = load(o);
    if (cfg.op.names.empty()) throw config_error("$.operator.names: no operators selected");
    const OperatorContext ctx = cfg.operator_context();
    const double cf_tol = cfg.verify_settings(o.tolerance_scale).tolerance("closed-form");

    ojson report;
    report["subcommand"] = "operator";
    report["config"] = config_echo(cfg);
    auto& reps = report["reports"] = ojson::array();
    std::ostringstream csv;
    csv << "operator,p_or_weak,input,resolution,value\n";
    bool failed = false, nonconv = false;
    std::string incomplete;
    try {
        for (const auto& name : cfg.op.names) {
            const OperatorKind op = operator_from_name(name);
            for (double p : cfg.op.p) {
                OperatorReport r;
                try {
                    r = p == 0.0 ? weak11_experiment(op, ctx, cfg.order, cfg.inputs, cfg.op.resolutions)
                                 : lp_ratio_experiment(op, ctx, cfg.order, p, cfg.inputs, cfg.op.resolutions);
                } catch (const convergence_error& e) {
                    nonconv = true;
                    ojson j;
                    j["operator"] = name;
                    j["p_or_weak"] = p == 0.0 ? "weak" : format_double(p);
                    j["error"] = e.what();
                    reps.push_back(j);
                    continue;
                }
                ojson j = r.to_json();
                for (const auto& row : r.rows)
                    if (!std::isfinite(row.value)) nonconv = true;
                const bool stable = r.spread <= cfg.op.stability && !r.growing;
                j["stable"] = stable;
                if (!stable && cfg.op.fail_on_unstable) failed = true;
                reps.push_back(j);
                r.write_csv(csv, false);
                std::cerr << "operator: " << name << " p=" << r.p_label() << " done\n";
            }
        }
    } catch (const std::bad_alloc&) {
        incomplete = "out of memory";
        nonconv = true;
    }

    auto& cfs = report["closed_forms"] = ojson::array();
    for (const auto& t : closed_form_tables(cfg)) {
        std::ostringstream tab;
        tab << "operator,case,computed,exact,abs_error,tolerance,status\n";
        double worst = 0.0;
        for (const auto& r : t.rows) {
            const bool ok = r.error() <= cf_tol;
            worst = std::max(worst, r.error());
            tab << csv_field(r.op) << ',' << csv_field(r.label) << ',' << g17(r.computed) << ',' << g17(r.exact) << ','
                << g17(r.error()) << ',' << g17(cf_tol) << ',' << (ok ? "pass" : "fail") << '\n';
        }
        const bool ok = worst <= cf_tol;
        failed |= !ok;
        const std::string file = "closed_form_" + t.op + ".csv";
        write_atomic(fs::path(o.out) / file, tab.str());
        cfs.push_back({{"operator", t.op}, {"file", file}, {"worst_error", worst}, {"tolerance", cf_tol},
                       {"status", ok ? "pass" : "fail"}});
        std::cout << (ok ? "PASS " : "FAIL ") << "closed form " << t.op << " worst " << format_double(worst) << '\n';
    }

    const int code = nonconv ? kNonConvergence : failed ? kToleranceFailure : kPass;
    if (!incomplete.empty()) report["incomplete"] = incomplete;
    report["exit_code"] = code;
    write_atomic(fs::path(o.out) / "operator_report.json", report.dump(2) + "\n");
    write_atomic(fs::path(o.out) / "operator_report.csv", csv.str());
    return code;
}

int run_kernel_dump(const Options& o) {
    const ExperimentConfig cfg = load(o);
    const std::size_t n = cfg.order.n();
    std::vector<KernelProbe> probes = cfg.dump.probes;
    if (cfg.dump.slice) {
        for (double u : cfg.dump.slice->x.values())
            for (double v : cfg.dump.slice->y.values()) probes.push_back({Point(n, u), Point(n, v), cfg.dump.slice->t});
    }
    if (probes.empty()) throw config_error("$.kernel_dump: no probes or slice given");

    std::ostringstream csv;
    auto coord_header = [&](const char* name) {
        if (n == 1) return std::string(name);
        std::string h;
        for (std::size_t j = 1; j <= n; ++j) h += (j > 1 ? "," : "") + std::string(name) + "_" + std::to_string(j);
        return h;
    };
    csv << coord_header("x") << ',' << coord_header("y") << ",t,W,dtW,K_re,K_im,H_re,H_im,local_flag\n";
    const KernelEvaluator ev(cfg.symbol, cfg.order, cfg.pv.time);
    bool nonconv = false;
    for (const auto& p : probes) {
        for (double v : p.x) csv << g17(v) << ',';
        for (double v : p.y) csv << g17(v) << ',';
        const HeatKernelParams hp(cfg.order, p.t);
        csv << g17(p.t) << ',' << g17(heat_kernel(hp, p.x, p.y)) << ',' << g17(dt_heat_kernel(hp, p.x, p.y)) << ',';
        if (p.x == p.y) {
            csv << "singular,singular,singular,singular,";
        } else {
            try {
                const cplx k = ev.K(p.x, p.y), h = ev.H(p.x, p.y);
                csv << g17(k.real()) << ',' << g17(k.imag()) << ',' << g17(h.real()) << ',' << g17(h.imag()) << ',';
            } catch (const convergence_error&) {
                nonconv = true;
                csv << "nan,nan,nan,nan,";
            }
        }
        csv << (in_local_region(p.x, p.y) ? 1 : 0) << '\n';
    }
    write_atomic(fs::path(o.out) / "kernel_dump.csv", csv.str());
    std::cout << "wrote " << probes.size() << " kernel rows\n";
    return nonconv ? kNonConvergence : kPass;
}

int run_presets() {
    std::cout << "symbols:\n";
    for (const auto& s : symbol_preset_names()) std::cout << "  " << s << '\n';
    std::cout << "inputs:\n";
    for (const auto& s : input_generator_names()) std::cout << "  " << s << '\n';
    std::cout << "operators:\n";
    for (const auto& s : operator_names()) std::cout << "  " << s << '\n';
    std::cout << "suites:\n";
    for (const auto& s : suite_names()) std::cout << "  " << s << '\n';
    std::cout << "envelopes:\n";
    for (auto e : {Envelope::euclidean_decay, Envelope::heat_local, Envelope::heat_far, Envelope::dt_heat_far})
        std::cout << "  " << envelope_name(e) << '\n';
    return kPass;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hankel transform and multiplier verification harness"};
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;
    app.add_option("--config", opt.config, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--threads", opt.threads, "worker threads (overrides HANKEL_THREADS)")->check(CLI::Range(1u, 4096u));
    app.add_option("--out", opt.out, "output directory")->capture_default_str();
    app.add_option("--tolerance-scale", opt.tolerance_scale, "multiplies every tolerance")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    auto* verify = app.add_subcommand("verify", "run the identity suites");
    auto* op = app.add_subcommand("operator", "run operator experiments");
    auto* dump = app.add_subcommand("kernel-dump", "tabulate W, dW/dt, K and H at probe points");
    auto* presets = app.add_subcommand("presets", "list symbol presets, inputs, operators and suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kConfigError;
    }
    if (opt.threads > 0) set_thread_count(opt.threads);

    try {
        if (verify->parsed()) return run_verify(opt);
        if (op->parsed()) return run_operator(opt);
        if (dump->parsed()) return run_kernel_dump(opt);
        if (presets->parsed()) return run_presets();
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const convergence_error& e) {
        std::cerr << "non-convergence: " << e.what() << '\n';
        return kNonConvergence;
    } catch (const std::bad_alloc&) {
        std::cerr << "out of memory\n";
        return kNonConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNonConvergence;
    }
    return kConfigError;
}
