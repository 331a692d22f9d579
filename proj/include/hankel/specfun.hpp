#pragma once

// Bessel functions J_nu, I_nu of real order nu > -1 and the complex gamma
// function used by the imaginary-power symbols.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"

namespace hankel {

struct BesselOrder {
    double nu;

    explicit BesselOrder(double v) : nu(v) {
        if (!(v > -1.0) || !std::isfinite(v))
            throw parameter_error("Bessel order must exceed -1, got " + std::to_string(v));
    }
};

// Number of asymptotic terms used for I_nu; J_nu uses this many terms for
// each of its two (even/odd) sums.
inline constexpr int kAsymTerms = 12;

/// Coefficients [nu,k] = (4nu^2-1)(4nu^2-9)...(4nu^2-(2k-1)^2) / (4^k k!),
/// k = 0..count-1.
inline std::vector<double> asym_coeffs(BesselOrder order, int count) {
    if (count < 1) throw parameter_error("asym_coeffs: count must be >= 1");
    const double mu = 4.0 * order.nu * order.nu;
    std::vector<double> c(static_cast<std::size_t>(count));
    c[0] = 1.0;
    for (int k = 1; k < count; ++k) {
        const double odd = 2.0 * k - 1.0;
        c[k] = c[k - 1] * (mu - odd * odd) / (4.0 * k);
    }
    return c;
}

namespace detail {

inline void check_arg(double z, bool allow_zero) {
    if (!std::isfinite(z)) throw input_error("Bessel argument must be finite");
    if (allow_zero ? z < 0.0 : z <= 0.0)
        throw input_error("Bessel argument out of range: " + std::to_string(z));
}

// 1 / (2^nu Gamma(nu+1)), the value of z^-nu J_nu and z^-nu I_nu at zero.
inline double scaled_origin_value(double nu) {
    return std::exp(-nu * std::numbers::ln2 - std::lgamma(nu + 1.0));
}

// sum_k (sign z^2/4)^k / (k! (nu+1)_k), the reduced ascending series.
inline double reduced_series(double nu, double z, double sign) {
    const double q = sign * 0.25 * z * z;
    double term = 1.0, sum = 1.0, comp = 0.0;
    for (int k = 1; k < 100000; ++k) {
        term *= q / (k * (nu + k));
        // Neumaier summation keeps the alternating J series at its rounding floor.
        const double t = sum + term;
        comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
        sum = t;
        if (std::abs(term) <= 1e-18 * std::abs(sum) && k > 0.5 * z) break;
    }
    return sum + comp;
}

// z^-nu J_nu(z) by Miller's backward recurrence, normalised with
// (z/2)^nu = sum_k (nu+2k) Gamma(nu+k)/k! J_{nu+2k}(z).
inline double j_scaled_miller(double nu, double z) {
    const int half = static_cast<int>(0.5 * (z + 20.0 + 6.0 * std::cbrt(z))) + 1;
    const int top = 2 * half;
    // r = Gamma(nu+k) / (k! Gamma(nu+1)) at k = half, stepped down alongside.
    double r = std::exp(std::lgamma(nu + half) - std::lgamma(half + 1.0) - std::lgamma(nu + 1.0));
    double next = 0.0, cur = 1e-300;
    double norm = (nu + 2.0 * half) * r * cur;
    for (int k = top; k >= 1; --k) {
        const double prev = 2.0 * (nu + k) / z * cur - next;
        next = cur;
        cur = prev;
        const int idx = k - 1;
        if (idx % 2 == 0) {
            const int m = idx / 2;
            if (m >= 1) {
                r *= (m + 1.0) / (nu + m);
                norm += (nu + 2.0 * m) * r * cur;
            } else {
                norm += cur;
            }
        }
        if (std::abs(cur) > 1e250) {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
        }
    }
    return cur / norm * scaled_origin_value(nu);
}

// Hankel expansion of J_nu(z) with `terms` terms in each of P and Q.
inline double j_asymptotic(double nu, double z, int terms = kAsymTerms) {
    const double mu = 4.0 * nu * nu;
    double p = 0.0, q = 0.0, term = 1.0;
    const double inv = 1.0 / (2.0 * z);
    for (int k = 0; k < 2 * terms; ++k) {
        if (k > 0) term *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (4.0 * k) * inv;
        const double sgn = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
        if (k % 2 == 0) p += sgn * term;
        else q += sgn * term;
    }
    const double chi = z - (0.5 * nu + 0.25) * std::numbers::pi;
    return std::sqrt(2.0 / (std::numbers::pi * z)) * (p * std::cos(chi) - q * std::sin(chi));
}

// Magnitude of the first omitted term of an expansion in (2z)^-1.
inline double asym_tail(double nu, double z, int count) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0;
    for (int k = 1; k <= count; ++k) term *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * z);
    return std::abs(term);
}

// e^-z I_nu(z) from the large-argument expansion with `count` terms.
inline double i_exp_asymptotic(double nu, double z, int count = kAsymTerms) {
    const double mu = 4.0 * nu * nu;
    double s = 1.0, term = 1.0;
    for (int k = 1; k < count; ++k) {
        term *= -(mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * z);
        s += term;
    }
    return s / std::sqrt(2.0 * std::numbers::pi * z);
}

// e^-z I_nu(z) from the ascending series with the prefactor taken in logs.
inline double i_exp_series(double nu, double z) {
    if (z == 0.0) return nu == 0.0 ? 1.0 : (nu > 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    return std::exp(nu * std::log(0.5 * z) - z - std::lgamma(nu + 1.0)) * reduced_series(nu, z, 1.0);
}

inline bool j_use_series(double nu, double z) { return z <= 6.0 || z * z <= 4.0 * (nu + 1.0); }

inline bool j_use_asymptotic(double nu, double z) {
    return z >= 20.0 && asym_tail(nu, z, 2 * kAsymTerms) < 1e-17;
}

inline bool i_use_asymptotic(double nu, double z) {
    return z >= 30.0 && asym_tail(nu, z, kAsymTerms) < 1e-17;
}

} // namespace detail

/// z^-nu J_nu(z); finite at z = 0 where it equals 1/(2^nu Gamma(nu+1)).
inline double bessel_j_scaled(BesselOrder order, double z) {
    detail::check_arg(z, true);
    const double nu = order.nu;
    if (detail::j_use_series(nu, z)) return detail::scaled_origin_value(nu) * detail::reduced_series(nu, z, -1.0);
    if (detail::j_use_asymptotic(nu, z)) return detail::j_asymptotic(nu, z) * std::pow(z, -nu);
    return detail::j_scaled_miller(nu, z);
}

/// J_nu(z) for z > 0.
inline double bessel_j(BesselOrder order, double z) {
    detail::check_arg(z, false);
    const double nu = order.nu;
    if (!detail::j_use_series(nu, z) && detail::j_use_asymptotic(nu, z)) return detail::j_asymptotic(nu, z);
    return bessel_j_scaled(order, z) * std::pow(z, nu);
}

/// e^-z I_nu(z), overflow-safe for large z.
inline double bessel_i_exp_scaled(BesselOrder order, double z) {
    detail::check_arg(z, true);
    const double nu = order.nu;
    if (detail::i_use_asymptotic(nu, z)) return detail::i_exp_asymptotic(nu, z);
    return detail::i_exp_series(nu, z);
}

/// z^-nu I_nu(z); finite at z = 0. Overflows (to +inf) beyond z ~ 700.
inline double bessel_i_scaled(BesselOrder order, double z) {
    detail::check_arg(z, true);
    const double nu = order.nu;
    if (z <= 30.0) return detail::scaled_origin_value(nu) * detail::reduced_series(nu, z, 1.0);
    return std::exp(z - nu * std::log(z)) * bessel_i_exp_scaled(order, z);
}

/// z^-nu e^-z I_nu(z): finite at z = 0 and free of overflow for large z.
inline double bessel_i_scaled_exp(BesselOrder order, double z) {
    detail::check_arg(z, true);
    const double nu = order.nu;
    if (z <= 30.0) return detail::scaled_origin_value(nu) * std::exp(-z) * detail::reduced_series(nu, z, 1.0);
    return std::exp(-nu * std::log(z)) * bessel_i_exp_scaled(order, z);
}

/// z (1 - I_{nu+1}(z)/I_nu(z)), evaluated without cancellation at large z.
inline double bessel_i_ratio_defect(BesselOrder order, double z) {
    detail::check_arg(z, true);
    const double nu = order.nu;
    if (z == 0.0) return 0.0;
    if (detail::i_use_asymptotic(nu, z) && detail::i_use_asymptotic(nu + 1.0, z)) {
        const auto a = asym_coeffs(BesselOrder(nu), kAsymTerms);
        const auto b = asym_coeffs(BesselOrder(nu + 1.0), kAsymTerms);
        double num = 0.0, den = 0.0, pw = 1.0;
        for (int k = 0; k < kAsymTerms; ++k) {
            den += a[k] * pw;
            num += (a[k] - b[k]) * pw;
            pw *= -1.0 / (2.0 * z);
        }
        return z * num / den;
    }
    const double r = bessel_i_exp_scaled(BesselOrder(nu + 1.0), z) / bessel_i_exp_scaled(order, z);
    return z * (1.0 - r);
}

namespace detail {

inline constexpr double kLanczosG = 7.0;
inline constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

} // namespace detail

/// Gamma(z) for complex z (Lanczos, g = 7, with reflection for Re z < 1/2).
inline std::complex<double> gamma(std::complex<double> z) {
    using C = std::complex<double>;
    constexpr double pi = std::numbers::pi;
    if (z.real() < 0.5) return pi / (std::sin(pi * z) * gamma(1.0 - z));
    z -= 1.0;
    C x = detail::kLanczos[0];
    for (std::size_t i = 1; i < detail::kLanczos.size(); ++i) x += detail::kLanczos[i] / (z + static_cast<double>(i));
    const C t = z + detail::kLanczosG + 0.5;
    return std::sqrt(2.0 * pi) * std::exp((z + 0.5) * std::log(t) - t) * x;
}

} // namespace hankel
