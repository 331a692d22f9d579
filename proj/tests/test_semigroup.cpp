#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "hankel/analysis.hpp"
#include "hankel/hankel.hpp"
#include "hankel/semigroup.hpp"

using namespace hankel;

namespace {

struct HeatRef {
    double lambda, t, u, v, w, dtw;
};

// W and dW/dt from the closed form, mpmath at 30 digits.
const HeatRef kHeat[] = {
    {0.5, 0.25, 1, 1, 0.61701664510734207907, -0.97624204755363423027},
    {1, 0.5, 1, 2, 0.11876943805360267131, -0.017727393647752028702},
    {-0.4, 0.01, 0.3, 0.32, 1.0238635143630733563, -58.000821094827563732},
    {2.3, 3, 0.2, 4, 0.00029860947937918429817, -0.00014597092523725110721},
    {0, 1e-3, 50, 50.01, 8.7003696738629298582, -4132.6755950848916827},
    {1, 0.3, 1, 1.2, 0.40751967784584319686, -0.73529605200329835759},
    {0.7, 200, 5, 1, 0.00069230755960042910762, -4.0415707363667719108e-6},
};

Grid grid1(double lambda, int nodes = 256) {
    AxisSpec s = default_axis_spec(1);
    s.nodes = nodes;
    return make_grid(Order({lambda}), s);
}

double boost_heat(double lambda, double t, double u, double v) {
    const double z = u * v / (2 * t);
    return std::pow(u * v, 0.5 - lambda) / (2 * t) * boost::math::cyl_bessel_i(lambda - 0.5, z) *
           std::exp(-(u * u + v * v) / (4 * t));
}

} // namespace

TEST(HeatKernel, MatchesHighPrecisionTable) {
    for (const auto& r : kHeat) {
        EXPECT_NEAR(heat_kernel_1d(r.lambda, r.t, r.u, r.v), r.w, 1e-12 * r.w) << r.lambda << ' ' << r.t;
        EXPECT_NEAR(dt_heat_kernel_1d(r.lambda, r.t, r.u, r.v), r.dtw, 1e-10 * std::abs(r.dtw)) << r.lambda << ' ' << r.t;
    }
}

TEST(HeatKernel, WorkedValue) {
    // 2 I_0(2) e^{-2} at lambda = 1/2, t = 1/4, x = y = 1.
    const double want = 2 * boost::math::cyl_bessel_i(0, 2.0) * std::exp(-2.0);
    EXPECT_NEAR(heat_kernel(HeatKernelParams(Order({0.5}), 0.25), {1.0}, {1.0}), want, 1e-14);
    EXPECT_NEAR(want, 0.6170166451073421, 1e-15);
}

TEST(HeatKernel, AgreesWithBoostOnRandomProbes) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto logu = [&](double a, double b) { return a * std::pow(b / a, U(rng)); };
    for (int k = 0; k < 3000; ++k) {
        const double lambda = -0.45 + 3.5 * U(rng);
        const double t = logu(1e-3, 1e2), u = logu(1e-3, 20.0), v = logu(1e-3, 20.0);
        if (u * v / (2 * t) > 600.0) continue;  // Boost's unscaled I overflows
        const double want = boost_heat(lambda, t, u, v);
        if (!(want > 1e-250)) continue;
        EXPECT_NEAR(heat_kernel_1d(lambda, t, u, v), want, 1e-11 * want) << lambda << ' ' << t << ' ' << u << ' ' << v;
    }
}

TEST(HeatKernel, SymmetricAndPositive) {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 2000; ++k) {
        const Order o({-0.45 + 3 * U(rng), -0.45 + 3 * U(rng)});
        const HeatKernelParams p(o, std::exp(-6 + 10 * U(rng)));
        const Point x = {std::exp(-4 + 7 * U(rng)), std::exp(-4 + 7 * U(rng))};
        const Point y = {std::exp(-4 + 7 * U(rng)), std::exp(-4 + 7 * U(rng))};
        const double a = heat_kernel(p, x, y), b = heat_kernel(p, y, x);
        EXPECT_EQ(a, b);
        EXPECT_GE(a, 0.0);
        EXPECT_EQ(dt_heat_kernel(p, x, y), dt_heat_kernel(p, y, x));
    }
}

TEST(HeatKernel, NoOverflowForLargeArgument) {
    // uv/2t = 1e6: near the diagonal W ~ (uv)^{-lambda} / sqrt(4 pi t).
    for (double lambda : {-0.4, 0.0, 1.0, 2.3}) {
        const double t = 1e-4, u = 20.0, v = 20.0;
        const double w = heat_kernel_1d(lambda, t, u, v);
        const double lead = std::pow(u * v, -lambda) / std::sqrt(4 * std::numbers::pi * t);
        EXPECT_TRUE(std::isfinite(w));
        EXPECT_NEAR(w / lead, 1.0, 1e-3) << lambda;
        EXPECT_TRUE(std::isfinite(dt_heat_kernel_1d(lambda, t, u, v)));
    }
}

TEST(HeatKernel, SmallSecondArgumentLimit) {
    for (double lambda : {-0.4, 0.0, 0.5, 1.0, 2.3}) {
        for (double t : {0.1, 1.0}) {
            const double x = 1.3;
            const double want = std::pow(2 * t, -lambda - 0.5) * std::exp(-x * x / (4 * t)) /
                                (std::pow(2.0, lambda - 0.5) * std::tgamma(lambda + 0.5));
            EXPECT_NEAR(heat_kernel_1d(lambda, t, x, 1e-8), want, 1e-8 * want) << lambda << ' ' << t;
        }
    }
}

TEST(HeatKernel, RejectsBadArguments) {
    EXPECT_THROW(HeatKernelParams(Order({0.5}), 0.0), parameter_error);
    EXPECT_THROW(HeatKernelParams(Order({0.5}), -1.0), parameter_error);
    const HeatKernelParams p(Order({0.5}), 1.0);
    EXPECT_THROW(heat_kernel(p, {0.0}, {1.0}), input_error);
    EXPECT_THROW(heat_kernel(p, {1.0}, {-1.0}), input_error);
}

TEST(SpectralCheck, WorkedResiduals) {
    EXPECT_LE(heat_kernel_spectral_residual(1.0, 0.5, 1.0, 2.0), 1e-8);
    EXPECT_LE(heat_kernel_spectral_residual(0.5, 0.1, 1.0, 1.0), 1e-7);
    EXPECT_LE(heat_kernel_spectral_residual(1.0, 10.0, 1.0, 2.0), 1e-8);
    EXPECT_LE(heat_kernel_spectral_residual(2.3, 10.0, 0.3, 3.0), 1e-8);
    // Truncation radius scales as 1/sqrt(t).
    const double r10 = heat_kernel_spectral_check(0.5, 10.0, 1.0, 1.0).truncation_radius;
    const double r01 = heat_kernel_spectral_check(0.5, 0.1, 1.0, 1.0).truncation_radius;
    EXPECT_NEAR(r10 * std::sqrt(10.0), r01 * std::sqrt(0.1), 1e-12 * r01);
}

TEST(SpectralCheck, RandomProbes) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto logu = [&](double a, double b) { return a * std::pow(b / a, U(rng)); };
    for (int k = 0; k < 100; ++k) {
        const double lambda = std::vector<double>{-0.4, 0.0, 0.5, 1.0, 2.3}[k % 5];
        const double t = logu(1e-2, 10.0), x = logu(0.1, 4.0);
        const double y = x + std::sqrt(32 * t) * (2 * U(rng) - 1);
        if (y < 0.05) continue;
        EXPECT_LE(heat_kernel_spectral_residual(lambda, t, x, y), 1e-7) << lambda << ' ' << t << ' ' << x << ' ' << y;
    }
}

TEST(TimeDerivative, FiniteDifferences) {
    auto fd = [](double lambda, double t, double u, double v) {
        const double h = 1e-4 * t;
        return (heat_kernel_1d(lambda, t + h, u, v) - heat_kernel_1d(lambda, t - h, u, v)) / (2 * h);
    };
    const double d = dt_heat_kernel_1d(1.0, 0.3, 1.0, 1.2);
    EXPECT_NEAR(d, fd(1.0, 0.3, 1.0, 1.2), 1e-6 * std::abs(d));
    // Random probes: difference log W instead, which stays smooth in t even
    // where (u - v)^2 / 4t is large, and compare dW/dt / W.
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        const double lambda = -0.45 + 3 * U(rng), t = std::exp(-5 + 8 * U(rng));
        const double u = std::exp(-3 + 5 * U(rng)), v = u * std::exp(-1 + 2 * U(rng));
        const double w = heat_kernel_1d(lambda, t, u, v);
        if (w == 0.0) {  // underflow: W and dW/dt both vanish in double
            EXPECT_EQ(dt_heat_kernel_1d(lambda, t, u, v), 0.0);
            continue;
        }
        const double h = 1e-4 * t;
        const double want = (detail::log_heat(lambda, t + h, u, v) - detail::log_heat(lambda, t - h, u, v)) / (2 * h);
        const double got = dt_heat_kernel_1d(lambda, t, u, v) / w;
        EXPECT_NEAR(got, want, 1e-6 * (std::abs(want) + 1.0 / t)) << lambda << ' ' << t << ' ' << u << ' ' << v;
    }
}

TEST(TimeDerivative, FundamentalTheorem) {
    for (double lambda : {-0.4, 0.5, 2.3}) {
        const double u = 1.1, v = 0.7, a = 0.1, b = 2.0;
        const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [&](double t) { return dt_heat_kernel_1d(lambda, t, u, v); }, a, b, 15, 1e-14);
        EXPECT_NEAR(integral, heat_kernel_1d(lambda, b, u, v) - heat_kernel_1d(lambda, a, u, v), 1e-8) << lambda;
    }
}

TEST(TimeDerivative, NegativeOnDiagonalForSmallTime) {
    for (double lambda : {-0.4, 0.0, 1.0, 2.3})
        for (double x : {0.2, 1.0, 5.0})
            for (double t : {1e-3, 1e-2}) EXPECT_LT(dt_heat_kernel_1d(lambda, t, x, x), 0.0) << lambda << ' ' << x << ' ' << t;
}

TEST(TimeDerivative, ProductRuleIn2D) {
    const HeatKernelParams p(Order({0.3, 1.8}), 0.7);
    const Point x = {0.9, 2.1}, y = {1.4, 1.7};
    const double w0 = heat_kernel_1d(0.3, 0.7, x[0], y[0]), w1 = heat_kernel_1d(1.8, 0.7, x[1], y[1]);
    const double want = dt_heat_kernel_1d(0.3, 0.7, x[0], y[0]) * w1 + w0 * dt_heat_kernel_1d(1.8, 0.7, x[1], y[1]);
    EXPECT_NEAR(dt_heat_kernel(p, x, y), want, 1e-13 * std::abs(want));
    EXPECT_NEAR(heat_kernel(p, x, y), w0 * w1, 1e-15);
}

TEST(Semigroup, MassOneInInterior) {
    for (double lambda : {-0.4, 0.0, 0.5, 1.0, 2.3}) {
        const Grid g = grid1(lambda);
        for (double t : {0.05, 0.5, 2.0}) {
            const auto w = semigroup_apply(HeatKernelParams(Order({lambda}), t), GridFunction::sample(g, [](const Point&) { return 1.0; }));
            for (std::size_t i = 0; i < g->size(); ++i) {
                const double x = g->point(i)[0];
                if (x < 0.1 || x > 4.0) continue;
                EXPECT_NEAR(w[i].real(), 1.0, 1e-6) << lambda << ' ' << t << ' ' << x;
            }
        }
    }
}

TEST(Semigroup, LawForGaussian) {
    for (double lambda : {-0.4, 0.5, 2.3}) {
        const Grid g = grid1(lambda);
        const Order o({lambda});
        const auto f = GridFunction::sample(g, [](const Point& x) { return std::exp(-x[0] * x[0]); });
        const auto two = semigroup_apply(HeatKernelParams(o, 0.25), semigroup_apply(HeatKernelParams(o, 0.25), f));
        const auto one = semigroup_apply(HeatKernelParams(o, 0.5), f);
        EXPECT_LE(lp_norm(two - one, 2.0) / lp_norm(f, 2.0), 1e-6) << lambda;
    }
}

TEST(Semigroup, SpectralConsistency) {
    for (const auto& lam : std::vector<std::vector<double>>{{-0.4}, {1.0}, {2.3}, {0.5, 0.2}}) {
        const Order o(lam);
        const Grid g = make_grid(o, default_axis_spec(o.n()));
        const TransformPlan plan(g);
        const auto f = bump_input(o.n()).sample(g);
        const double t = 0.3;
        auto hf = hankel_apply(plan, f);
        for (std::size_t i = 0; i < g->size(); ++i) {
            double r2 = 0.0;
            for (double v : g->point(i)) r2 += v * v;
            hf[i] *= std::exp(-t * r2);
        }
        const auto spectral = hankel_apply(plan, hf);
        const auto direct = semigroup_apply(HeatKernelParams(o, t), f);
        EXPECT_LE(lp_norm(direct - spectral, 2.0) / lp_norm(spectral, 2.0), 1e-6) << lam[0];
    }
}

TEST(Semigroup, ContractionInL2) {
    for (double lambda : {-0.4, 1.0}) {
        const Grid g = grid1(lambda);
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto f = band_limited_input(1, seed).sample(g);
            for (double t : {0.01, 0.3, 3.0})
                EXPECT_LE(lp_norm(semigroup_apply(HeatKernelParams(Order({lambda}), t), f), 2.0),
                          lp_norm(f, 2.0) * (1 + 1e-8))
                    << lambda << ' ' << seed << ' ' << t;
        }
    }
}

TEST(Semigroup, RejectsOrderMismatch) {
    const Grid g = grid1(0.5, 64);
    EXPECT_THROW(semigroup_apply(HeatKernelParams(Order({0.6}), 1.0), GridFunction(g)), grid_mismatch);
}

TEST(Euclidean, PeakDerivativesAndMass) {
    EXPECT_NEAR(euclidean_kernel_1d(0.25, 3.0, 3.0), 1 / std::sqrt(std::numbers::pi), 1e-15);
    EXPECT_NEAR(euclidean_kernel(0.25, {3.0}, {3.0}).value, 0.5641895835477563, 1e-15);
    const double t = 0.4;
    const Point x = {1.0, 2.0}, y = {1.7, 1.1};
    const auto k = euclidean_kernel(t, x, y);
    const double h = 1e-5;
    const double dt = (euclidean_kernel(t + h, x, y).value - euclidean_kernel(t - h, x, y).value) / (2 * h);
    EXPECT_NEAR(k.dt, dt, 1e-8);
    const double dx = (euclidean_kernel(t, {x[0] + h, x[1]}, y).value - euclidean_kernel(t, {x[0] - h, x[1]}, y).value) / (2 * h);
    EXPECT_NEAR(k.dx1, dx, 1e-8);
    const double dxx = (euclidean_kernel(t, {x[0] + 1e-4, x[1]}, y).value - 2 * k.value +
                        euclidean_kernel(t, {x[0] - 1e-4, x[1]}, y).value) / 1e-8;
    EXPECT_NEAR(k.dx1x1, dxx, 1e-6);
    const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [](double v) { return euclidean_kernel_1d(0.7, 0.3, v); }, -40.0, 40.0, 15, 1e-14);
    EXPECT_NEAR(mass, 1.0, 1e-10);
}

TEST(Envelopes, HeatRegimeSupsFiniteAndStable) {
    for (Envelope e : {Envelope::heat_local, Envelope::heat_far, Envelope::dt_heat_far}) {
        for (double lambda : {-0.4, 0.5, 2.3}) {
            const EnvelopeProbe probe{e, lambda, 1, 7};
            const double a = envelope_sup(probe, 10000).sup_ratio;
            const double b = envelope_sup(probe, 20000).sup_ratio;
            EXPECT_TRUE(std::isfinite(a) && a > 0.0) << envelope_name(e) << ' ' << lambda;
            EXPECT_NEAR(b / a, 1.0, 0.1) << envelope_name(e) << ' ' << lambda;
        }
    }
}
