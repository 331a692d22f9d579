#pragma once

// Laplace-transform-type symbols m(y) = |y|^2 int_0^inf e^{-t|y|^2} phi(t) dt,
// named presets, and a small expression parser for custom profiles.

#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"

namespace hankel {

using cplx = std::complex<double>;

struct LaplaceSymbol {
    std::function<cplx(double)> phi;
    double sup_bound = 1.0;
    std::optional<cplx> phi_zero_plus;
    std::string label;
    // Discontinuities of phi; time quadratures split there.
    std::vector<double> breakpoints;
    // Set when phi is constant, so every kernel built from d/dt vanishes.
    std::optional<cplx> constant;
    // Optional closed forms: m as a function of r2 = |y|^2, and the moment
    // int_T^inf phi(t) t^{-q-1} dt.
    std::function<cplx(double)> m_closed;
    std::function<cplx(double, double)> tail_closed;
};

namespace detail {

inline double symbol_quadrature_floor() { return 1e-16; }

// int_lo^hi phi(t) t^{-q-1} dt on log panels.
inline cplx phi_power_moment(const LaplaceSymbol& s, double lo, double hi, double q) {
    return log_panels([&](double t) { return s.phi(t) * std::pow(t, -q - 1.0); }, lo, hi, s.breakpoints, 16, 0.5);
}

} // namespace detail

/// int_T^inf phi(t) t^{-q-1} dt (q > 0).
inline cplx tail_moment(const LaplaceSymbol& s, double T, double q) {
    if (!(q > 0.0) || !(T > 0.0)) throw parameter_error("tail_moment: need T > 0 and q > 0");
    if (s.tail_closed) return s.tail_closed(T, q);
    // Quadrature over twelve decades, then phi frozen at its last value.
    const double hi = T * 1e12;
    return detail::phi_power_moment(s, T, hi, q) + s.phi(hi) * std::pow(hi, -q) / q;
}

/// m(y) with r2 = |y|^2.
inline cplx symbol_m_r2(const LaplaceSymbol& s, double r2) {
    if (!(r2 > 0.0) || !std::isfinite(r2)) throw input_error("symbol_m: |y|^2 must be positive and finite");
    if (s.m_closed) return s.m_closed(r2);
    // m = int_0^inf e^{-u} phi(u / r2) du; the piece below 1e-16 is at most
    // sup_bound * 1e-16 and e^{-u} < 1e-19 past 44.
    std::vector<double> breaks;
    for (double b : s.breakpoints) breaks.push_back(b * r2);
    const double lo = detail::symbol_quadrature_floor();
    const cplx coarse = log_panels([&](double u) { return std::exp(-u) * s.phi(u / r2); }, lo, 44.0, breaks, 12, 1.0);
    const cplx fine = log_panels([&](double u) { return std::exp(-u) * s.phi(u / r2); }, lo, 44.0, breaks, 16, 0.5);
    if (!std::isfinite(std::abs(fine)) || std::abs(fine - coarse) > 1e-8 * std::max(1.0, s.sup_bound))
        throw convergence_error("symbol_m: quadrature did not settle for " + s.label);
    return fine;
}

/// m(y) = |y|^2 int_0^inf e^{-t|y|^2} phi(t) dt.
inline cplx symbol_m(const LaplaceSymbol& s, const std::vector<double>& y) {
    double r2 = 0.0;
    for (double v : y) {
        if (!(v > 0.0)) throw input_error("symbol_m: coordinates must be positive");
        r2 += v * v;
    }
    return symbol_m_r2(s, r2);
}

inline LaplaceSymbol identity_symbol() {
    LaplaceSymbol s;
    s.phi = [](double) { return cplx(1.0); };
    s.sup_bound = 1.0;
    s.phi_zero_plus = 1.0;
    s.constant = 1.0;
    s.label = "identity";
    s.m_closed = [](double) { return cplx(1.0); };
    s.tail_closed = [](double T, double q) { return cplx(std::pow(T, -q) / q); };
    return s;
}

/// phi_beta(t) = t^{-i beta} / Gamma(1 - i beta), giving m(y) = |y|^{2 i beta}.
inline LaplaceSymbol imaginary_power_symbol(double beta) {
    if (!std::isfinite(beta)) throw parameter_error("imaginary power: beta must be finite");
    const cplx g = hankel::gamma(cplx(1.0, -beta));
    LaplaceSymbol s;
    s.phi = [beta, g](double t) { return std::exp(cplx(0.0, -beta * std::log(t))) / g; };
    s.sup_bound = 1.0 / std::abs(g);
    if (beta == 0.0) {
        s.phi_zero_plus = 1.0;
        s.constant = 1.0;
    }
    s.label = "imaginary-power:" + std::to_string(beta);
    s.m_closed = [beta](double r2) { return std::exp(cplx(0.0, beta * std::log(r2))); };
    s.tail_closed = [beta, g](double T, double q) {
        const cplx e(q, beta);
        return std::exp(-e * std::log(T)) / (e * g);
    };
    return s;
}

/// phi(t) = e^{-a t}, giving m(y) = |y|^2 / (a + |y|^2).
inline LaplaceSymbol resolvent_symbol(double a) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw parameter_error("resolvent: a must be >= 0");
    LaplaceSymbol s;
    s.phi = [a](double t) { return cplx(std::exp(-a * t)); };
    s.sup_bound = 1.0;
    s.phi_zero_plus = 1.0;
    if (a == 0.0) s.constant = 1.0;
    s.label = "resolvent:" + std::to_string(a);
    s.m_closed = [a](double r2) { return cplx(r2 / (a + r2)); };
    s.tail_closed = [a](double T, double q) {
        if (a == 0.0) return cplx(std::pow(T, -q) / q);
        if (a * T > 745.0) return cplx(0.0);
        // e^{-a t} < 1e-26 of its value at T beyond T + 60/a.
        return cplx(gl_panel([&](double t) { return std::exp(-a * t) * std::pow(t, -q - 1.0); }, T, T + 60.0 / a, 64));
    };
    return s;
}

/// phi = indicator of [0, T0], giving m(y) = 1 - e^{-T0 |y|^2}.
inline LaplaceSymbol indicator_symbol(double T0) {
    if (!(T0 > 0.0) || !std::isfinite(T0)) throw parameter_error("indicator: T must be positive");
    LaplaceSymbol s;
    s.phi = [T0](double t) { return cplx(t <= T0 ? 1.0 : 0.0); };
    s.sup_bound = 1.0;
    s.phi_zero_plus = 1.0;
    s.label = "indicator:" + std::to_string(T0);
    s.breakpoints = {T0};
    s.m_closed = [T0](double r2) { return cplx(-std::expm1(-T0 * r2)); };
    s.tail_closed = [T0](double T, double q) {
        return cplx(T >= T0 ? 0.0 : (std::pow(T, -q) - std::pow(T0, -q)) / q);
    };
    return s;
}

namespace detail {

// Recursive-descent parser for expressions in t:
//   expr := term (('+'|'-') term)*     term := unary (('*'|'/') unary)*
//   unary := '-' unary | power         power := atom ('^' unary)?
//   atom := number | 't' | 'i' | 'pi' | 'e' | name '(' expr ')' | '(' expr ')'
class ExprParser {
public:
    using Node = std::function<cplx(double)>;

    explicit ExprParser(std::string src) : s_(std::move(src)) {}

    Node parse() {
        Node n = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    std::string s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw parameter_error("custom expression: " + what + " at column " + std::to_string(pos_ + 1));
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Node expr() {
        Node lhs = term();
        for (;;) {
            if (eat('+')) {
                Node r = term();
                lhs = [lhs, r](double t) { return lhs(t) + r(t); };
            } else if (eat('-')) {
                Node r = term();
                lhs = [lhs, r](double t) { return lhs(t) - r(t); };
            } else {
                return lhs;
            }
        }
    }

    Node term() {
        Node lhs = unary();
        for (;;) {
            if (eat('*')) {
                Node r = unary();
                lhs = [lhs, r](double t) { return lhs(t) * r(t); };
            } else if (eat('/')) {
                Node r = unary();
                lhs = [lhs, r](double t) { return lhs(t) / r(t); };
            } else {
                return lhs;
            }
        }
    }

    Node unary() {
        if (eat('-')) {
            Node u = unary();
            return [u](double t) { return -u(t); };
        }
        if (eat('+')) return unary();
        return power();
    }

    Node power() {
        Node base = atom();
        if (eat('^')) {
            Node ex = unary();
            return [base, ex](double t) {
                const cplx b = base(t), e = ex(t);
                if (e.imag() == 0.0 && b.imag() == 0.0 && b.real() >= 0.0) return cplx(std::pow(b.real(), e.real()));
                return std::pow(b, e);
            };
        }
        return base;
    }

    Node atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Node n = expr();
            if (!eat(')')) fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v;
            try {
                v = std::stod(s_.substr(pos_), &used);
            } catch (const std::exception&) {
                fail("bad number");
            }
            pos_ += used;
            return [v](double) { return cplx(v); };
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t end = pos_;
            while (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_')) ++end;
            const std::string name = s_.substr(pos_, end - pos_);
            pos_ = end;
            if (name == "t") return [](double t) { return cplx(t); };
            if (name == "i") return [](double) { return cplx(0.0, 1.0); };
            if (name == "pi") return [](double) { return cplx(std::numbers::pi); };
            if (name == "e") return [](double) { return cplx(std::numbers::e); };
            if (!eat('(')) fail("unknown name '" + name + "'");
            Node arg = expr();
            if (!eat(')')) fail("expected ')'");
            return function(name, arg);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Node function(const std::string& name, Node a) {
        auto real_or_complex = [a](double (*fr)(double), cplx (*fc)(const cplx&), bool real_ok) -> Node {
            return [a, fr, fc, real_ok](double t) {
                const cplx v = a(t);
                if (v.imag() == 0.0 && real_ok) return cplx(fr(v.real()));
                return fc(v);
            };
        };
        if (name == "exp")
            return real_or_complex([](double x) { return std::exp(x); }, [](const cplx& z) { return std::exp(z); }, true);
        if (name == "sin")
            return real_or_complex([](double x) { return std::sin(x); }, [](const cplx& z) { return std::sin(z); }, true);
        if (name == "cos")
            return real_or_complex([](double x) { return std::cos(x); }, [](const cplx& z) { return std::cos(z); }, true);
        if (name == "tanh")
            return real_or_complex([](double x) { return std::tanh(x); }, [](const cplx& z) { return std::tanh(z); }, true);
        if (name == "log")
            return [a](double t) {
                const cplx v = a(t);
                return v.imag() == 0.0 && v.real() > 0.0 ? cplx(std::log(v.real())) : std::log(v);
            };
        if (name == "sqrt")
            return [a](double t) {
                const cplx v = a(t);
                return v.imag() == 0.0 && v.real() >= 0.0 ? cplx(std::sqrt(v.real())) : std::sqrt(v);
            };
        if (name == "abs") return [a](double t) { return cplx(std::abs(a(t))); };
        fail("unknown function '" + name + "'");
    }
};

} // namespace detail

/// phi given by an arithmetic expression in t. The sup bound and phi(0+)
/// are estimated from samples on [1e-10, 1e10].
inline LaplaceSymbol custom_symbol(const std::string& expression) {
    auto f = detail::ExprParser(expression).parse();
    LaplaceSymbol s;
    s.phi = f;
    s.label = "custom:" + expression;
    double sup = 0.0;
    for (int k = 0; k <= 400; ++k) {
        const double t = std::pow(10.0, -10.0 + 20.0 * k / 400.0);
        const cplx v = f(t);
        if (!std::isfinite(std::abs(v))) throw parameter_error("custom expression is not finite at t = " + std::to_string(t));
        sup = std::max(sup, std::abs(v));
    }
    s.sup_bound = sup > 0.0 ? sup : 1.0;
    const cplx a = f(1e-8), b = f(1e-10);
    if (std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(b))) s.phi_zero_plus = b;
    return s;
}

/// Parses a whole string as a double; `context` names it in errors.
inline double parse_number(const std::string& text, const std::string& context) {
    if (text.empty()) throw parameter_error("'" + context + "' needs a numeric parameter");
    std::size_t used = 0;
    double v;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw parameter_error("'" + context + "': bad number");
    }
    if (used != text.size() || !std::isfinite(v)) throw parameter_error("'" + context + "': bad number");
    return v;
}

/// Shortest decimal that round-trips.
inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

/// Resolves "identity", "imaginary-power:b", "resolvent:a", "indicator:T"
/// and "custom:expr".
inline LaplaceSymbol symbol_from_preset(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto number = [&]() { return parse_number(arg, spec); };
    if (name == "identity") {
        if (!arg.empty()) throw parameter_error("symbol preset 'identity' takes no parameter");
        return identity_symbol();
    }
    if (name == "imaginary-power") return imaginary_power_symbol(number());
    if (name == "resolvent") return resolvent_symbol(number());
    if (name == "indicator") return indicator_symbol(number());
    if (name == "custom") {
        if (arg.empty()) throw parameter_error("symbol preset 'custom' needs an expression");
        return custom_symbol(arg);
    }
    throw parameter_error("unknown symbol preset '" + name + "'");
}

inline std::vector<std::string> symbol_preset_names() {
    return {"identity", "imaginary-power:<beta>", "resolvent:<a>", "indicator:<T>", "custom:<expression in t>"};
}

} // namespace hankel
