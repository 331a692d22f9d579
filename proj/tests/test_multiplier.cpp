#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "hankel/analysis.hpp"
#include "hankel/multiplier.hpp"
#include "hankel/verify.hpp"

using namespace hankel;

namespace {

constexpr double kPi = std::numbers::pi;

Grid grid1(double lambda, int nodes = 256) {
    AxisSpec s = default_axis_spec(1);
    s.nodes = nodes;
    return make_grid(Order({lambda}), s);
}

// The same symbol with its closed forms removed, so m and tail moments go
// through quadrature.
LaplaceSymbol without_closed_forms(LaplaceSymbol s) {
    s.m_closed = nullptr;
    s.tail_closed = nullptr;
    return s;
}

TimeRule refined_rule() {
    TimeRule r;
    r.nodes = 48;
    r.max_log_width = 0.25;
    r.lower_factor = 1.0 / 2400.0;
    r.upper_factor = 1e10;
    return r;
}

double rel_l2(const GridFunction& a, const GridFunction& b) { return lp_norm(a - b, 2.0) / lp_norm(b, 2.0); }

} // namespace

TEST(Symbol, WorkedValues) {
    for (double r2 : {1e-6, 0.3, 1.0, 50.0, 1e6}) EXPECT_NEAR(std::abs(symbol_m_r2(identity_symbol(), r2) - 1.0), 0.0, 1e-14);
    const cplx m = symbol_m(imaginary_power_symbol(1.0), {1.0, 1.0});
    EXPECT_NEAR(m.real(), std::cos(std::log(2.0)), 1e-14);
    EXPECT_NEAR(m.imag(), std::sin(std::log(2.0)), 1e-14);
    EXPECT_NEAR(m.real(), 0.76924, 1e-5);
    EXPECT_NEAR(m.imag(), 0.63896, 1e-5);
    EXPECT_NEAR(std::abs(symbol_m(resolvent_symbol(1.0), {1.0}) - 0.5), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(symbol_m_r2(indicator_symbol(2.0), 0.7) - (1 - std::exp(-1.4))), 0.0, 1e-15);
}

TEST(Symbol, QuadratureAgreesWithClosedForms) {
    for (const auto& sym : {resolvent_symbol(1.0), resolvent_symbol(3.5), imaginary_power_symbol(0.5),
                            imaginary_power_symbol(-2.0), indicator_symbol(0.7)}) {
        const LaplaceSymbol q = without_closed_forms(sym);
        for (double r2 : {1e-4, 0.05, 1.0, 7.0, 300.0, 1e5}) {
            const cplx want = symbol_m_r2(sym, r2), got = symbol_m_r2(q, r2);
            EXPECT_LT(std::abs(got - want), 1e-8) << sym.label << " r2=" << r2;
        }
        // The fallback freezes phi beyond 1e12 T, so it is exact up to
        // sup|phi| (1e12 T)^{-q} / q.
        for (double T : {1.0, 1e4}) {
            for (double p : {0.5, 1.5}) {
                const cplx want = tail_moment(sym, T, p), got = tail_moment(q, T, p);
                const double bound = 2.0 * sym.sup_bound * std::pow(1e12 * T, -p) / p + 1e-10 * std::abs(want);
                EXPECT_LE(std::abs(got - want), bound) << sym.label << " T=" << T << " q=" << p;
            }
        }
    }
    // A custom expression is integrated without any shortcut.
    const LaplaceSymbol c = symbol_from_preset("custom:exp(-t)");
    for (double r2 : {0.01, 1.0, 40.0}) EXPECT_LT(std::abs(symbol_m_r2(c, r2) - r2 / (1 + r2)), 1e-8) << r2;
}

TEST(Symbol, ImaginaryPowerProfileHasConstantModulus) {
    for (double beta : {0.5, 1.0, -3.0}) {
        const auto s = imaginary_power_symbol(beta);
        const double want = 1.0 / std::abs(hankel::gamma({1.0, -beta}));
        for (double t : {1e-3, 1.0, 250.0}) EXPECT_NEAR(std::abs(s.phi(t)), want, 1e-12) << beta << ' ' << t;
        EXPECT_NEAR(s.sup_bound, want, 1e-12);
        EXPECT_FALSE(s.phi_zero_plus.has_value());
    }
    EXPECT_TRUE(imaginary_power_symbol(0.0).constant.has_value());
}

TEST(Symbol, RightLimitAtZero) {
    for (const auto& s : {identity_symbol(), resolvent_symbol(2.0), indicator_symbol(0.5), symbol_from_preset("custom:1/(1+t)")}) {
        ASSERT_TRUE(s.phi_zero_plus.has_value()) << s.label;
        for (double t : {1e-6, 1e-8}) EXPECT_LT(std::abs(s.phi(t) - *s.phi_zero_plus), 1e-5) << s.label << ' ' << t;
    }
    EXPECT_FALSE(symbol_from_preset("custom:sin(log(t))").phi_zero_plus.has_value());
}

TEST(Symbol, BoundedOnFrequencyGrid) {
    const Grid g = make_grid(Order({0.5, 1.0}), [] {
        AxisSpec s = default_axis_spec(2);
        s.nodes = 64;
        return s;
    }());
    for (const auto& sym : {identity_symbol(), resolvent_symbol(1.0), imaginary_power_symbol(1.0), indicator_symbol(1.0),
                            symbol_from_preset("custom:1/(1+t^2)")}) {
        double worst = 0.0;
        for (std::size_t i = 0; i < g->size(); ++i) worst = std::max(worst, std::abs(symbol_m(sym, g->point(i))));
        EXPECT_LE(worst, sym.sup_bound * (1 + 1e-10)) << sym.label;
    }
}

TEST(Symbol, UnresolvedOscillationIsReported) {
    // cos(u / r2) over u in [0, 44] is far beyond the panel resolution at small r2.
    EXPECT_THROW(symbol_m_r2(symbol_from_preset("custom:cos(t)"), 1e-4), convergence_error);
    EXPECT_NO_THROW(symbol_m_r2(symbol_from_preset("custom:cos(t)"), 10.0));
}

TEST(Symbol, PresetParsingAndErrors) {
    EXPECT_THROW(symbol_from_preset("resolvent:-1"), parameter_error);
    EXPECT_THROW(symbol_from_preset("resolvent:abc"), parameter_error);
    EXPECT_THROW(symbol_from_preset("indicator:0"), parameter_error);
    EXPECT_THROW(symbol_from_preset("bogus"), parameter_error);
    EXPECT_THROW(symbol_from_preset("custom:"), parameter_error);
    EXPECT_THROW(symbol_m_r2(identity_symbol(), 0.0), input_error);
}

TEST(Spectral, IdentityAndZeroPower) {
    for (double lambda : {-0.4, 1.0}) {
        const Grid g = grid1(lambda);
        const TransformPlan plan(g);
        const auto f = bump_input(1).sample(g);
        EXPECT_LE(rel_l2(spectral_apply(identity_symbol(), plan, f), f), 1e-5) << lambda;
        EXPECT_LE(rel_l2(spectral_apply(imaginary_power_symbol(0.0), plan, f), f), 1e-5) << lambda;
    }
}

TEST(Spectral, ResolventAgainstRefinedPath) {
    // Oracle: transform on a 512-node grid, multiply, and transform back onto
    // the 256-node grid through a rectangular plan.
    for (double lambda : {-0.4, 1.0, 2.3}) {
        const Grid g = grid1(lambda), fine = grid1(lambda, 512);
        const auto in = bump_input(1);
        const auto got = spectral_apply(resolvent_symbol(1.0), TransformPlan(g), in.sample(g));
        auto hf = hankel_apply(TransformPlan(fine), in.sample(fine));
        for (std::size_t i = 0; i < fine->size(); ++i) {
            const double r2 = fine->point(i)[0] * fine->point(i)[0];
            hf[i] *= r2 / (1 + r2);
        }
        const auto want = hankel_apply(TransformPlan(fine, g), hf);
        EXPECT_LE(rel_l2(got, want), 1e-5) << lambda;
    }
}

TEST(Spectral, ImaginaryPowerIsUnitary) {
    for (double lambda : {-0.4, 0.5, 2.3}) {
        const Grid g = grid1(lambda);
        const TransformPlan plan(g);
        const auto f = hankel_apply(plan, bump_input(1).sample(g));
        for (double beta : {0.5, 1.0, 2.0}) {
            const double r = lp_norm(spectral_apply(imaginary_power_symbol(beta), plan, f), 2.0) / lp_norm(f, 2.0);
            EXPECT_NEAR(r, 1.0, 1e-5) << lambda << ' ' << beta;
        }
    }
}

TEST(Spectral, BoundedBySupOfSymbol) {
    const Grid g = grid1(0.5);
    const TransformPlan plan(g);
    for (std::uint64_t seed : {1u, 2u}) {
        const auto f = band_limited_input(1, seed).sample(g);
        for (const auto& sym : {resolvent_symbol(0.3), indicator_symbol(2.0)})
            EXPECT_LE(lp_norm(spectral_apply(sym, plan, f), 2.0), lp_norm(f, 2.0) * (1 + 1e-5)) << sym.label;
    }
}

TEST(KernelK, VanishesForConstantSymbol) {
    EXPECT_EQ(kernel_K(identity_symbol(), Order({1.0}), {1.0}, {2.0}), cplx(0.0));
    // Without the constant shortcut the quadrature itself must cancel.
    LaplaceSymbol one = identity_symbol();
    one.constant.reset();
    for (const auto& lam : std::vector<std::vector<double>>{{1.0}, {-0.4}, {0.5, 2.0}}) {
        const Point x(lam.size(), 1.0), y(lam.size(), 1.7);
        EXPECT_LT(std::abs(kernel_K(one, Order(lam), x, y)), 1e-10) << lam[0];
    }
}

TEST(KernelK, Symmetric) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> U(0.1, 5.0);
    for (const auto& sym : {resolvent_symbol(1.0), imaginary_power_symbol(0.5)}) {
        const KernelEvaluator ev(sym, Order({0.3, 1.5}));
        for (int k = 0; k < 30; ++k) {
            const Point x = {U(rng), U(rng)}, y = {U(rng), U(rng)};
            const cplx a = ev.K(x, y), b = ev.K(y, x);
            EXPECT_LT(std::abs(a - b), 1e-10 * std::max(1.0, std::abs(a))) << sym.label;
        }
    }
}

TEST(KernelK, AgainstHighPrecisionAndRefinedRule) {
    struct R {
        double lambda, x, y, re, im;
    };
    // Resolvent: int e^{-t} W_t dt (by parts); imaginary power: int phi dW/dt.
    // mpmath at 30 digits.
    const R res[] = {{1, 1, 2, 0.079523093200894594654, 0},
                     {0.5, 1, 1.5, 0.27069192734160167905, 0},
                     {-0.4, 0.7, 0.9, 0.27293542778806081957, 0}};
    for (const auto& r : res) {
        const cplx k = kernel_K(resolvent_symbol(1.0), Order({r.lambda}), {r.x}, {r.y});
        EXPECT_NEAR(k.real(), r.re, 1e-9) << r.lambda;
        EXPECT_NEAR(k.imag(), 0.0, 1e-15);
        const cplx kr = kernel_K(resolvent_symbol(1.0), Order({r.lambda}), {r.x}, {r.y}, refined_rule());
        EXPECT_LT(std::abs(k - kr), 1e-7) << r.lambda;
    }
    const cplx k = kernel_K(imaginary_power_symbol(1.0), Order({1.0}), {1.0}, {2.0});
    EXPECT_NEAR(k.real(), -0.11891304928809938902, 1e-9);
    EXPECT_NEAR(k.imag(), 0.32393722206260716312, 1e-9);
}

TEST(KernelK, SingularAndInvalidPoints) {
    const KernelEvaluator ev(resolvent_symbol(1.0), Order({0.5}));
    EXPECT_THROW(ev.K({1.0}, {1.0}), singular_point);
    EXPECT_THROW(ev.K({-1.0}, {1.0}), input_error);
    EXPECT_THROW(ev.K({1.0, 2.0}, {1.0, 3.0}), grid_mismatch);
    EXPECT_THROW(kernel_H(resolvent_symbol(1.0), 1, {2.0}, {2.0}), singular_point);
}

TEST(KernelH, ClosedFormsForResolvent) {
    // int e^{-t} g_t dt: e^{-r}/2, K_0(r)/(2 pi), e^{-r}/(4 pi r) for n = 1, 2, 3.
    const auto sym = resolvent_symbol(1.0);
    EXPECT_NEAR(kernel_H(sym, 1, {1.0}, {2.0}).real(), std::exp(-1.0) / 2, 1e-8);
    for (double r : {0.05, 0.7, 3.0}) {
        EXPECT_NEAR(kernel_H(sym, 1, {1.0}, {1.0 + r}).real(), std::exp(-r) / 2, 1e-8) << r;
        EXPECT_NEAR(kernel_H(sym, 2, {1.0, 1.0}, {1.0 + r * 0.6, 1.0 + r * 0.8}).real(),
                    boost::math::cyl_bessel_k(0, r) / (2 * kPi), 1e-8)
            << r;
        const double s = r / std::sqrt(3.0);
        EXPECT_NEAR(kernel_H(sym, 3, {1.0, 1.0, 1.0}, {1.0 + s, 1.0 - s, 1.0 + s}).real(),
                    std::exp(-r) / (4 * kPi * r), 1e-8 * std::max(1.0, 1.0 / r))
            << r;
    }
    LaplaceSymbol one = identity_symbol();
    one.constant.reset();
    EXPECT_LT(std::abs(kernel_H(one, 2, {1.0, 1.0}, {1.5, 0.2})), 1e-10);
    EXPECT_EQ(kernel_H(identity_symbol(), 1, {1.0}, {3.0}), cplx(0.0));
}

TEST(KernelH, DecayEnvelopeStable) {
    for (const auto& sym : {resolvent_symbol(1.0), imaginary_power_symbol(0.5)}) {
        for (std::size_t n : {1u, 2u}) {
            const EnvelopeProbe probe{Envelope::euclidean_decay, 0.5, n, 3};
            const auto a = envelope_sup(probe, 10000, &sym), b = envelope_sup(probe, 20000, &sym);
            EXPECT_TRUE(a.finite && std::isfinite(a.sup_ratio)) << sym.label;
            EXPECT_NEAR(b.sup_ratio / a.sup_ratio, 1.0, 0.1) << sym.label << " n=" << n;
        }
    }
}

TEST(KernelKH, LocalCompatibilityBounded) {
    // |K - (xy)^{-lambda} H| against the one-dimensional envelope
    // (xy)^{-lambda-1} int_0^{xy} t^{-1/2} e^{-(x-y)^2/10t} dt
    //   + int_{xy}^inf (t^{-lambda-3/2} + (xy)^{-lambda} t^{-3/2}) dt.
    auto envelope = [](double lambda, double x, double y) {
        const double p = x * y, d2 = (x - y) * (x - y);
        const double head = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [&](double s) {  // t = s^2
                return 2.0 * std::exp(-d2 / (10.0 * s * s));
            },
            0.0, std::sqrt(p), 10, 1e-10);
        return std::pow(p, -lambda - 1) * head + std::pow(p, -lambda - 0.5) / (lambda + 0.5) +
               2.0 * std::pow(p, -lambda - 0.5);
    };
    auto sup_ratio = [&](const LaplaceSymbol& sym, double lambda, int count) {
        const KernelEvaluator ev(sym, Order({lambda}));
        std::mt19937_64 rng(41);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        double worst = 0.0;
        for (int k = 0; k < count; ++k) {
            const double x = 0.05 * std::pow(200.0, U(rng));
            double y = x * std::pow(2.0, 2 * U(rng) - 1);
            if (std::abs(y - x) < 1e-4 * x) y = x * (1 + 1e-4);
            const double diff = std::abs(ev.K({x}, {y}) - ev.local_factor({x}, {y}) * ev.H({x}, {y}));
            worst = std::max(worst, diff / (sym.sup_bound * envelope(lambda, x, y)));
        }
        return worst;
    };
    for (const auto& sym : {resolvent_symbol(1.0), imaginary_power_symbol(0.5)}) {
        for (double lambda : {-0.4, 1.0, 2.3}) {
            const double a = sup_ratio(sym, lambda, 1000), b = sup_ratio(sym, lambda, 2000);
            EXPECT_TRUE(std::isfinite(a) && a > 0.0) << sym.label << ' ' << lambda;
            EXPECT_NEAR(b / a, 1.0, 0.1) << sym.label << ' ' << lambda;
        }
    }
}

TEST(Alpha, ConstantsAndLimits) {
    EXPECT_NEAR(constant_M(1), 1 / (2 * std::sqrt(kPi)), 1e-15);
    EXPECT_NEAR(constant_M(2), 1.0 / 8.0, 1e-14);
    // n = 3: (4 pi^{3/2})^{-1} ... = (2 sqrt(pi))^{-3} * 2 pi / 3.
    EXPECT_NEAR(constant_M(3), std::pow(2 * std::sqrt(kPi), -3.0) * 2 * kPi / 3, 1e-14);
    for (std::size_t n : {1u, 2u, 3u}) {
        EXPECT_NEAR(radial_gamma_integral(n), std::pow(4.0, n / 2.0) * std::tgamma(n / 2.0), 1e-10) << n;
        EXPECT_NEAR(normalization_C(identity_symbol(), n), 1.0, 1e-8) << n;
        EXPECT_NEAR(normalization_C(resolvent_symbol(2.0), n), 1.0, 1e-8) << n;
        // phi = 1: n alpha(eps) = -n M 4^{n/2} Gamma(n/2, eps^2/4), which tends to -1.
        for (double eps : {0.5, 1e-2, 1e-6}) {
            const double q = 0.5 * static_cast<double>(n);
            const double want = -static_cast<double>(n) * constant_M(n) * std::pow(4.0, q) * boost::math::tgamma(q, eps * eps / 4);
            const cplx a = alpha_epsilon(identity_symbol(), n, eps);
            EXPECT_NEAR(static_cast<double>(n) * a.real(), want, 1e-10) << n << ' ' << eps;
            EXPECT_EQ(a.imag(), 0.0);
        }
        EXPECT_NEAR(static_cast<double>(n) * alpha_epsilon(identity_symbol(), n, 1e-6).real(), -1.0, 2e-6) << n;
    }
    EXPECT_EQ(alpha_epsilon(symbol_from_preset("custom:0"), 2, 0.1), cplx(0.0));
    EXPECT_THROW(normalization_C(imaginary_power_symbol(1.0), 1), parameter_error);
    EXPECT_THROW(alpha_epsilon(identity_symbol(), 1, 0.0), parameter_error);
}

TEST(Alpha, BoundedAsScheduleExtends) {
    for (const auto& sym : {resolvent_symbol(1.0), imaginary_power_symbol(0.5), imaginary_power_symbol(2.0),
                            symbol_from_preset("custom:sin(log(t))")}) {
        for (std::size_t n : {1u, 2u}) {
            double sup_short = 0.0, sup_long = 0.0;
            for (double e = 0.25; e >= 1e-6; e /= std::pow(2.0, 0.125)) {
                const double a = std::abs(alpha_epsilon(sym, n, e));
                if (e >= 1e-3) sup_short = std::max(sup_short, a);
                sup_long = std::max(sup_long, a);
            }
            EXPECT_TRUE(std::isfinite(sup_long));
            EXPECT_LE(sup_long, 1.1 * sup_short) << sym.label << " n=" << n;
        }
    }
}

TEST(PV, ConfigValidation) {
    PVConfig c;
    c.eps = {0.1};
    EXPECT_THROW(c.validate(), parameter_error);
    c.eps = {0.1, 0.1};
    EXPECT_THROW(c.validate(), parameter_error);
    c.eps = {0.1, 0.2};
    EXPECT_THROW(c.validate(), parameter_error);
    c.eps = {0.2, 0.1};
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(dyadic_schedule().size(), 12u);
    EXPECT_DOUBLE_EQ(dyadic_schedule().front(), 0.25);
}

TEST(PV, IdentitySymbolReproducesInput) {
    for (const auto& lam : std::vector<std::vector<double>>{{1.0}, {-0.4}, {0.5, 0.5}}) {
        const Order o(lam);
        AxisSpec s = default_axis_spec(o.n());
        if (o.n() == 2) s.nodes = 64;
        const Grid g = make_grid(o, s);
        const auto in = bump_input(o.n());
        const auto f = in.sample(g);
        const auto pv = pv_apply(identity_symbol(), g, in.source, PVConfig{}).as_grid_function();
        EXPECT_LE(rel_l2(pv, f), 2e-3) << lam[0];
    }
}

TEST(PV, DualPathResolvent) {
    const auto r = dual_path(resolvent_symbol(1.0), grid1(1.0), PVConfig{});
    EXPECT_LE(r.residual, 5e-3);
    EXPECT_GE(r.improvements, 3);
}

TEST(PV, DualPathImaginaryPowerAndCauchyTruncations) {
    const Grid g = grid1(1.0);
    const auto sym = imaginary_power_symbol(0.5);
    const auto r = dual_path(sym, g, PVConfig{});
    EXPECT_LE(r.residual, 1e-2);
    EXPECT_GE(r.improvements, 3);

    // The extrapolated limit lies within twice the last increment of the final
    // truncation, measured in L^2 over the grid.
    const auto in = bump_input(1);
    const PVResult pv = pv_apply(sym, g, in.source, PVConfig{});
    const std::size_t K = pv.eps.size();
    const double last = lp_norm(pv.truncation(K - 1) - pv.truncation(K - 2), 2.0);
    const double gap = lp_norm(pv.as_grid_function() - pv.truncation(K - 1), 2.0);
    EXPECT_LE(gap, 2.0 * last);
    // Successive increments shrink (Cauchy in eps).
    for (std::size_t k = K - 4; k + 1 < K; ++k)
        EXPECT_LT(lp_norm(pv.truncation(k + 1) - pv.truncation(k), 2.0), lp_norm(pv.truncation(k) - pv.truncation(k - 1), 2.0))
            << k;
}
