// Copyright 2026 The fbldelay Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file specfun.hpp
 * @brief Scalar special functions: Gaussian Q and its inverse, the modified
 * Bessel function I0 (plain and exponentially scaled), the first-order Marcum
 * Q-function and the AWGN channel dispersion.
 *
 * All functions are pure and thread-safe. Probabilities are plain doubles in
 * [0,1]; arguments outside the domain throw fbldelay::domain_error.
 */

#pragma once

#include "fbldelay/errors.hpp"
#include "fbldelay/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace fbldelay::specfun {

inline constexpr double log2e = std::numbers::log2e;
inline constexpr double ln2 = std::numbers::ln2;
inline constexpr double sqrt_2pi = 2.506628274631000502415765284811;
inline constexpr double log_sqrt_2pi = 0.918938533204672741780329736406;

/// Gaussian tail probability Q(x) = P{N(0,1) > x}.
inline double gaussian_q(double x)
{
    fbldelay::detail::require_finite(x, "gaussian_q argument");
    return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0);
}

namespace detail {

// Rational approximation of the standard normal quantile (P. J. Acklam),
// relative error about 1.15e-9 before refinement.
inline double normal_quantile_initial(double p)
{
    static constexpr std::array<double, 6> a = {-3.969683028665376e+01, 2.209460984245205e+02,
                                                -2.759285104469687e+02, 1.383577518672690e+02,
                                                -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr std::array<double, 5> b = {-5.447609879822406e+01, 1.615858368580409e+02,
                                                -1.556989798598866e+02, 6.680131188771972e+01,
                                                -1.328068155288572e+01};
    static constexpr std::array<double, 6> c = {-7.784894002430293e-03, -3.223964580411365e-01,
                                                -2.400758277161838e+00, -2.549732539343734e+00,
                                                4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr std::array<double, 4> d = {7.784695709041462e-03, 3.224671290700398e-01,
                                                2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

} // namespace detail

/// Inverse of gaussian_q on (0,1): returns x with Q(x) = p.
///
/// The rational starting value is polished with Halley steps on Q(x) - p. The
/// step uses (Q(x)-p)/phi(x) evaluated in log space so that p down to the
/// subnormal range does not overflow exp(x^2/2).
inline double inverse_q(double p)
{
    if (!(p > 0.0 && p < 1.0))
        throw domain_error(fbldelay::detail::concat("inverse_q requires 0 < p < 1, got ", p));
    if (p > 0.5) return -inverse_q(1.0 - p);
    if (p == 0.5) return 0.0;
    double x = -detail::normal_quantile_initial(p);
    for (int it = 0; it < 3; ++it) {
        const double e = 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0) - p;
        if (e == 0.0) break;
        const double u =
            std::copysign(std::exp(std::log(std::abs(e)) + 0.5 * x * x + log_sqrt_2pi), e);
        const double step = u / (1.0 - 0.5 * x * u);
        x += step;
        if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

/// Exponentially scaled modified Bessel function e^{-x} I0(x), x >= 0.
inline double bessel_i0e(double x)
{
    if (!(x >= 0.0)) throw domain_error(fbldelay::detail::concat("bessel_i0e requires x >= 0, got ", x));
    if (std::isinf(x)) return 0.0;
    if (x <= 22.0) {
        // Power series sum (x^2/4)^k / (k!)^2, all terms positive.
        const double y = 0.25 * x * x;
        double term = 1.0;
        double sum = 1.0;
        for (int k = 1; k < 200; ++k) {
            term *= y / (static_cast<double>(k) * k);
            sum += term;
            if (term < 1e-17 * sum) break;
        }
        return sum * std::exp(-x);
    }
    // Hankel asymptotic expansion; at x > 22 the smallest term is below 1e-18.
    const double inv8x = 1.0 / (8.0 * x);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        const double odd = 2.0 * k - 1.0;
        const double next = term * odd * odd * inv8x / k;
        if (next > term) break;
        term = next;
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

/// Modified Bessel function of the first kind, order 0. Overflows to +inf
/// beyond x ~ 713; use bessel_i0e there.
inline double bessel_i0(double x)
{
    if (!(x >= 0.0)) throw domain_error(fbldelay::detail::concat("bessel_i0 requires x >= 0, got ", x));
    return bessel_i0e(x) * std::exp(x);
}

namespace detail {

// e^{-x} I_k(x) for k = 0..kmax by Miller's backward recurrence, normalised
// against the directly computed e^{-x} I_0(x).
inline std::vector<double> scaled_bessel_sequence(double x, int kmax)
{
    std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
    const int start = kmax + 30 + static_cast<int>(std::sqrt(40.0 * (x + kmax)));
    double next = 0.0;
    double cur = 1e-280;
    for (int k = start; k >= 1; --k) {
        const double prev = 2.0 * k / x * cur + next;
        next = cur;
        cur = prev;
        if (k - 1 <= kmax) out[static_cast<std::size_t>(k - 1)] = cur;
        if (std::abs(cur) > 1e250) {
            for (auto& v : out) v *= 1e-250;
            cur *= 1e-250;
            next *= 1e-250;
        }
    }
    // out[0] now holds the unnormalised I_0; the k = kmax entry was set when k-1 == kmax.
    const double scale = bessel_i0e(x) / out[0];
    for (auto& v : out) v *= scale;
    return out;
}

inline double marcum_series(double a, double b)
{
    const double x = a * b;
    const int kmax = static_cast<int>(x + 40.0 + 12.0 * std::sqrt(x + 1.0));
    const auto ik = scaled_bessel_sequence(x, kmax);
    if (b > a) {
        // Q1 = exp(-(b-a)^2/2) sum_{k>=0} (a/b)^k e^{-ab} I_k(ab)
        const double ratio = a / b;
        double pw = 1.0;
        double sum = 0.0;
        for (int k = 0; k <= kmax; ++k) {
            const double t = pw * ik[static_cast<std::size_t>(k)];
            sum += t;
            if (k > x && t < 1e-18 * sum) break;
            pw *= ratio;
        }
        return std::min(1.0, std::exp(-0.5 * (b - a) * (b - a)) * sum);
    }
    // Q1 = 1 - exp(-(a-b)^2/2) sum_{k>=1} (b/a)^k e^{-ab} I_k(ab)
    const double ratio = b / a;
    double pw = ratio;
    double sum = 0.0;
    for (int k = 1; k <= kmax; ++k) {
        const double t = pw * ik[static_cast<std::size_t>(k)];
        sum += t;
        if (k > x && t < 1e-18 * sum) break;
        pw *= ratio;
    }
    return std::max(0.0, 1.0 - std::exp(-0.5 * (a - b) * (a - b)) * sum);
}

// Integrates the Rician density t exp(-(t-a)^2/2) e^{-at} I0(at) over whichever
// side of b carries less mass.
inline double marcum_quadrature(double a, double b)
{
    auto pdf = [a](double t) {
        if (t <= 0.0) return 0.0;
        return t * std::exp(-0.5 * (t - a) * (t - a)) * bessel_i0e(a * t);
    };
    const quad::Tolerance tol{1e-15, 1e-13, 800};
    if (b >= a) {
        const double hi = b + 40.0;
        const auto br = quad::make_breaks(b, hi, {b + 1.0, b + 3.0, b + 8.0});
        const auto r = quad::integrate(pdf, std::span<const double>(br), tol);
        if (!r.converged)
            throw numeric_error(fbldelay::detail::concat("marcum_q1 quadrature did not converge at a=", a,
                                                         " b=", b, " err=", r.abs_error));
        return std::clamp(r.value, 0.0, 1.0);
    }
    // The guard in marcum_q1 keeps a - b below 9, so the lower limit sits well inside [0, b).
    const double lo = std::max(0.0, a - 40.0);
    const auto br = quad::make_breaks(lo, b, {b - 1.0, b - 3.0, b - 8.0});
    const auto r = quad::integrate(pdf, std::span<const double>(br), tol);
    if (!r.converged)
        throw numeric_error(fbldelay::detail::concat("marcum_q1 quadrature did not converge at a=", a,
                                                     " b=", b, " err=", r.abs_error));
    return std::clamp(1.0 - r.value, 0.0, 1.0);
}

} // namespace detail

/// First-order Marcum Q-function Q1(a,b) = int_b^inf t exp(-(t^2+a^2)/2) I0(at) dt.
///
/// Uses the Bessel-series representation for a*b <= 150 and direct quadrature of
/// the Rician density otherwise. Far tails are cut off by the Chernoff-type
/// bounds Q1(a,b) <= exp(-(b-a)^2/2) (b > a) and 1-Q1(a,b) <= exp(-(a-b)^2/2) (b < a).
inline double marcum_q1(double a, double b)
{
    if (!(a >= 0.0) || !(b >= 0.0))
        throw domain_error(fbldelay::detail::concat("marcum_q1 requires a,b >= 0, got a=", a, " b=", b));
    if (b == 0.0) return 1.0;
    if (a == 0.0) return std::exp(-0.5 * b * b);
    if (std::isinf(b)) return 0.0;
    if (std::isinf(a)) return 1.0;
    const double gap = 0.5 * (b - a) * (b - a);
    if (b > a && gap > 745.0) return 0.0;
    if (a > b && gap > 40.0) return 1.0; // complement below 4.3e-18
    if (a * b <= 150.0) return detail::marcum_series(a, b);
    return detail::marcum_quadrature(a, b);
}

/// AWGN channel dispersion V(gamma) = log2(e)^2 (1 - 1/(1+gamma)^2).
inline double dispersion(double gamma)
{
    if (!(gamma >= 0.0)) throw domain_error(fbldelay::detail::concat("dispersion requires gamma >= 0, got ", gamma));
    if (std::isinf(gamma)) return log2e * log2e;
    const double onep = 1.0 + gamma;
    // 1 - 1/(1+g)^2 = g(2+g)/(1+g)^2 without cancellation at small g.
    return log2e * log2e * (gamma * (2.0 + gamma) / (onep * onep));
}

} // namespace fbldelay::specfun
