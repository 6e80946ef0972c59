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
 * @file errmodel.hpp
 * @brief Decoding error probabilities for a slot with an imperfect channel estimate.
 *
 * Three families live here:
 *  - exact references: the conditional outage probability (Marcum Q) and the
 *    finite-blocklength normal approximation averaged over the conditional SNR
 *    law by adaptive quadrature (the "true" error probability eps);
 *  - closed-form Gaussian-SNR bounds eps' = Q((gamma_hat - (2^r - 1)) / sigma)
 *    with sigma^2 = sigma_ICSI^2 (outage only) or sigma_ICSI^2 + sigma_FBL^2
 *    (outage plus finite blocklength), and their exact rate inversions;
 *  - extensions: transmit power scaling and fixed-rate transmission without CSI.
 *
 * The Gaussian surrogates drop two non-negative remainders (the quadratic
 * estimation-error term and the Taylor slack of the logarithm). They only ever
 * make the true error smaller, so they have no runtime representation. The
 * direction of the combined bound additionally relies on replacing
 * sigma_FBL(Gamma) by sigma_FBL(gamma_hat); that step is checked numerically by
 * the test-suite, never assumed inside the code.
 *
 * Rates are in bits per channel use.
 */

#pragma once

#include "fbldelay/channel.hpp"
#include "fbldelay/errors.hpp"
#include "fbldelay/quadrature.hpp"
#include "fbldelay/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace fbldelay {

struct VarianceTerms {
    double sigma_icsi_sq = 0.0; ///< 2 sigma_N^2 avg_snr gamma_hat
    double sigma_fbl = 0.0;     ///< SNR-domain standard deviation of the finite-blocklength penalty
    double sigma_icf_sq = 0.0;  ///< sigma_icsi_sq + sigma_fbl^2
};

/// Finite-blocklength penalty mapped to the SNR domain:
/// (1+gamma)/log2(e) * sqrt(V(gamma)/n), which simplifies to sqrt(gamma (2+gamma) / n).
inline double sigma_fbl(double gamma, int n)
{
    detail::require_nonnegative(gamma, "SNR");
    if (n < 1) throw domain_error(detail::concat("blocklength must be >= 1, got ", n));
    return std::sqrt(gamma * (2.0 + gamma) / n);
}

inline VarianceTerms variance_terms(const EstimationModel& model, double gamma_hat, int n)
{
    detail::require_nonnegative(gamma_hat, "estimated SNR");
    VarianceTerms v;
    v.sigma_icsi_sq = 2.0 * model.sigma_n_sq * model.avg_snr * gamma_hat;
    v.sigma_fbl = sigma_fbl(gamma_hat, n);
    v.sigma_icf_sq = v.sigma_icsi_sq + v.sigma_fbl * v.sigma_fbl;
    return v;
}

namespace detail {

inline void require_rate(double r)
{
    if (!(r >= 0.0)) throw domain_error(concat("rate must be >= 0, got ", r));
}

inline void require_blocklength(int n)
{
    if (n < 1) throw domain_error(concat("blocklength must be >= 1, got ", n));
}

/// SNR threshold 2^r - 1 of a rate.
inline double snr_threshold(double r) { return std::expm1(r * specfun::ln2); }

/// Gaussian-SNR bound Q((gamma_hat - (2^r - 1)) / sigma) with the degenerate
/// conventions for gamma_hat == 0 (0 at r = 0, else 1) and sigma == 0 (step).
inline double gaussian_snr_bound(double gamma_hat, double r, double sigma)
{
    if (gamma_hat == 0.0) return r == 0.0 ? 0.0 : 1.0;
    const double margin = gamma_hat - snr_threshold(r);
    if (sigma == 0.0) return margin > 0.0 ? 0.0 : (margin == 0.0 ? 0.5 : 1.0);
    return specfun::gaussian_q(margin / sigma);
}

/// Inverts gaussian_snr_bound for r on the admissible interval Q(gamma_hat/sigma) < eps < 1/2.
inline double gaussian_snr_rate(double gamma_hat, double sigma, double eps, const char* name)
{
    if (!(eps < 0.5))
        throw precondition_error(concat(name, ": target error probability must be < 1/2, got ", eps));
    if (!(gamma_hat > 0.0))
        throw precondition_error(concat(name, ": estimated SNR must be > 0, got ", gamma_hat));
    const double floor = sigma > 0.0 ? specfun::gaussian_q(gamma_hat / sigma) : 0.0;
    if (!(eps > floor))
        throw precondition_error(concat(name, ": target error probability must exceed Q(gamma_hat/sigma) = ",
                                        floor, ", got ", eps));
    const double backoff = sigma > 0.0 ? sigma * specfun::inverse_q(eps) : 0.0;
    return std::log1p(gamma_hat - backoff) * specfun::log2e;
}

/// Q((log2(1+x) - r) / sqrt(V(x)/n)), the normal-approximation error at a known SNR.
inline double fbl_error_at(double x, int n, double r)
{
    if (x <= 0.0) return r > 0.0 ? 1.0 : 0.5;
    const double cap = std::log1p(x) * specfun::log2e;
    const double sd = specfun::log2e * std::sqrt(x * (2.0 + x)) / (1.0 + x) / std::sqrt(static_cast<double>(n));
    return 0.5 * std::erfc((cap - r) / sd * (std::numbers::sqrt2 / 2.0));
}

} // namespace detail

/// Outage probability P{log2(1+Gamma) < r | gamma_hat}.
inline double outage_exact(const EstimationModel& model, double gamma_hat, double r)
{
    detail::require_nonnegative(gamma_hat, "estimated SNR");
    detail::require_rate(r);
    if (r == 0.0) return 0.0;
    if (std::isinf(r)) return 1.0;
    return conditional_snr_cdf(model, gamma_hat, detail::snr_threshold(r));
}

/// Gaussian-Q upper bound on the outage probability with sigma^2 = sigma_ICSI^2.
inline double outage_bound_icsi(const EstimationModel& model, double gamma_hat, double r)
{
    detail::require_nonnegative(gamma_hat, "estimated SNR");
    detail::require_rate(r);
    const double sigma = std::sqrt(2.0 * model.sigma_n_sq * model.avg_snr * gamma_hat);
    return detail::gaussian_snr_bound(gamma_hat, r, sigma);
}

/// Rate whose outage bound equals eps_target; requires Q(gamma_hat/sigma_ICSI) < eps_target < 1/2.
inline double rate_icsi(const EstimationModel& model, double gamma_hat, double eps_target)
{
    const double sigma = std::sqrt(2.0 * model.sigma_n_sq * model.avg_snr * gamma_hat);
    return detail::gaussian_snr_rate(gamma_hat, sigma, eps_target, "rate_icsi");
}

/// Normal-approximation error probability at a perfectly known SNR gamma.
inline double eps_fbl_perfect_csi(double gamma, int n, double r)
{
    detail::require_nonnegative(gamma, "SNR");
    detail::require_blocklength(n);
    detail::require_rate(r);
    if (r == 0.0) return 0.0;
    return detail::fbl_error_at(gamma, n, r);
}

/// Achievable rate log2(1+gamma) - sqrt(V(gamma)/n) Q^{-1}(eps) at a perfectly known SNR.
inline double rate_fbl(double gamma, int n, double eps)
{
    detail::require_nonnegative(gamma, "SNR");
    detail::require_blocklength(n);
    if (!(eps > 0.0 && eps < 1.0))
        throw precondition_error(detail::concat("rate_fbl: error probability must lie in (0,1), got ", eps));
    const double r = std::log1p(gamma) * specfun::log2e -
                     std::sqrt(specfun::dispersion(gamma) / n) * specfun::inverse_q(eps);
    if (!(r > 0.0))
        throw precondition_error(detail::concat("rate_fbl: no positive rate at gamma=", gamma, " n=", n,
                                                " eps=", eps));
    return r;
}

/// Value of a quadrature-backed probability with its absolute error budget
/// (integration error plus truncated tail mass).
struct ProbabilityEstimate {
    double value = 0.0;
    double abs_error = 0.0;
    int evaluations = 0;
};

namespace detail {

// Integration window [lo, hi] for the conditional SNR law and the bound on the
// mass left outside, from Q1(a,b) <= exp(-(b-a)^2/2) for b > a and the mirrored bound.
struct Window {
    double lo, hi, truncated;
};

inline Window conditional_window(double gamma_hat, double c)
{
    const double mean = gamma_hat + c;
    const double sd = std::sqrt(c * c + 2.0 * c * gamma_hat);
    const double lo = std::max(0.0, mean - 12.0 * sd);
    const double hi = mean + 12.0 * sd + 40.0 * c;
    const double a = std::sqrt(2.0 * gamma_hat / c);
    const double b_hi = std::sqrt(2.0 * hi / c);
    double truncated = std::exp(-0.5 * (b_hi - a) * (b_hi - a));
    if (lo > 0.0) {
        const double b_lo = std::sqrt(2.0 * lo / c);
        truncated += std::exp(-0.5 * (a - b_lo) * (a - b_lo));
    }
    return {lo, hi, truncated};
}

// Above this SNR the normal-approximation error is below Q(9) ~ 1e-19 for every x,
// since V(x) <= log2(e)^2.
inline double fbl_negligible_above(double r, int n)
{
    return std::expm1((r + 9.0 * specfun::log2e / std::sqrt(static_cast<double>(n))) * specfun::ln2);
}

} // namespace detail

inline constexpr quad::Tolerance eps_quadrature_tolerance{1e-11, 1e-9, 400};

/// Conditional normal-approximation error probability
/// E[Q((log2(1+Gamma) - r)/sqrt(V(Gamma)/n)) | gamma_hat], by adaptive Gauss-Kronrod
/// quadrature against the conditional SNR density. The integration range is split
/// at the SNR threshold 2^r - 1 and around the bulk of the density.
///
/// Transmitting at r = 0 carries no data and is defined to have zero error.
inline ProbabilityEstimate eps_normal_approx_detailed(const EstimationModel& model, double gamma_hat, int n, double r,
                                                      const quad::Tolerance& tol = eps_quadrature_tolerance)
{
    detail::require_nonnegative(gamma_hat, "estimated SNR");
    detail::require_blocklength(n);
    detail::require_rate(r);
    if (r == 0.0) return {0.0, 0.0, 0};
    if (std::isinf(r)) return {1.0, 0.0, 0};
    if (model.perfect_csi()) return {detail::fbl_error_at(gamma_hat, n, r), 1e-16, 1};

    const double c = model.conditional_scale();
    const auto win = detail::conditional_window(gamma_hat, c);
    const double hi = std::min(win.hi, std::max(win.lo, detail::fbl_negligible_above(r, n)));
    if (!(hi > win.lo)) return {0.0, win.truncated + 1e-19, 0};

    const double sqrt_gh = std::sqrt(gamma_hat);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    auto integrand = [&](double x) {
        if (x <= 0.0) return 0.0;
        const double sx = std::sqrt(x);
        const double d = sx - sqrt_gh;
        const double pdf = std::exp(-d * d / c) * specfun::bessel_i0e(2.0 * sx * sqrt_gh / c) / c;
        if (pdf == 0.0) return 0.0;
        const double cap = std::log1p(x) * specfun::log2e;
        const double sd = specfun::log2e * std::sqrt(x * (2.0 + x)) / (1.0 + x) * inv_sqrt_n;
        return pdf * 0.5 * std::erfc((cap - r) / sd * (std::numbers::sqrt2 / 2.0));
    };

    const double threshold = detail::snr_threshold(r);
    const double mean = gamma_hat + c;
    const double sd = std::sqrt(c * c + 2.0 * c * gamma_hat);
    const double width = sigma_fbl(threshold, n);
    const auto breaks =
        quad::make_breaks(win.lo, hi,
                          {mean - 3.0 * sd, mean, mean + 3.0 * sd, threshold - 4.0 * width, threshold,
                           threshold + 4.0 * width});
    const auto res = quad::integrate(integrand, std::span<const double>(breaks), tol);
    if (!res.converged)
        throw numeric_error(detail::concat("eps_normal_approx: quadrature did not converge (gamma_hat=", gamma_hat,
                                           ", n=", n, ", r=", r, ", value=", res.value, ", err=", res.abs_error,
                                           ", intervals=", res.intervals, ")"));
    // Mass truncated below lo enters with a Q-factor of at most 1; above hi it is negligible.
    return {std::clamp(res.value, 0.0, 1.0), res.abs_error + win.truncated + 1e-19, res.evaluations};
}

inline double eps_normal_approx(const EstimationModel& model, double gamma_hat, int n, double r)
{
    return eps_normal_approx_detailed(model, gamma_hat, n, r).value;
}

/// Closed-form bound eps' = Q((gamma_hat - (2^r - 1)) / sigma_IC,F(gamma_hat)).
inline double eps_bound_combined(const EstimationModel& model, double gamma_hat, int n, double r)
{
    detail::require_rate(r);
    const auto v = variance_terms(model, gamma_hat, n);
    return detail::gaussian_snr_bound(gamma_hat, r, std::sqrt(v.sigma_icf_sq));
}

/// Rate whose combined bound equals eps_target; requires Q(gamma_hat/sigma_IC,F) < eps_target < 1/2.
inline double rate_combined(const EstimationModel& model, double gamma_hat, int n, double eps_target)
{
    const auto v = variance_terms(model, gamma_hat, n);
    return detail::gaussian_snr_rate(gamma_hat, std::sqrt(v.sigma_icf_sq), eps_target, "rate_combined");
}

/// Combined bound when the data-phase power is scaled by phi (training power unchanged):
/// Q((phi gamma_hat - (2^r - 1)) / sigma_PA), sigma_PA^2 = phi^2 sigma_ICSI^2 + sigma_FBL(phi gamma_hat)^2.
inline double eps_bound_power(const EstimationModel& model, double gamma_hat, int n, double r, double phi)
{
    detail::require_rate(r);
    if (!(phi > 0.0)) throw domain_error(detail::concat("power scale must be > 0, got ", phi));
    const auto v = variance_terms(model, gamma_hat, n);
    const double fbl = sigma_fbl(phi * gamma_hat, n);
    const double sigma = std::sqrt(phi * phi * v.sigma_icsi_sq + fbl * fbl);
    return detail::gaussian_snr_bound(phi * gamma_hat, r, sigma);
}

struct PowerSearchResult {
    bool feasible = false;
    double phi = 0.0; ///< smallest power scale meeting the target (valid if feasible)
};

/// Smallest phi in (0, phi_max] with eps_bound_power <= eps_target, by bisection in
/// phi to an absolute tolerance of 1e-4. Infeasibility at phi_max is a result, not an error.
inline PowerSearchResult min_power(const EstimationModel& model, double gamma_hat, int n, double r,
                                   double eps_target, double phi_max = 1e3)
{
    detail::require_probability(eps_target, "target error probability");
    if (!(phi_max > 0.0)) throw domain_error("phi_max must be > 0");
    auto ok = [&](double phi) { return eps_bound_power(model, gamma_hat, n, r, phi) <= eps_target; };
    if (!ok(phi_max)) return {false, phi_max};
    double lo = 0.0;
    double hi = phi_max;
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        if (ok(mid)) hi = mid;
        else lo = mid;
    }
    return {true, hi};
}

/// Error probability of fixed-rate transmission without training (m = 0) over the
/// whole slot of n_slot symbols: E[Q((log2(1+Gamma) - r)/sqrt(V(Gamma)/n_slot))],
/// Gamma exponential with mean avg_snr.
inline ProbabilityEstimate eps_fixed_rate_nocsi_detailed(double avg_snr, int n_slot, double r)
{
    if (!(avg_snr > 0.0)) throw domain_error(detail::concat("avg_snr must be positive, got ", avg_snr));
    detail::require_blocklength(n_slot);
    detail::require_rate(r);
    if (r == 0.0) return {0.0, 0.0, 0};
    const double cutoff = 45.0 * avg_snr; // exp(-45) ~ 2.9e-20
    const double hi = std::min(cutoff, detail::fbl_negligible_above(r, n_slot));
    auto integrand = [&](double x) {
        return detail::fbl_error_at(x, n_slot, r) * std::exp(-x / avg_snr) / avg_snr;
    };
    const double threshold = detail::snr_threshold(r);
    const double width = sigma_fbl(threshold, n_slot);
    const auto breaks = quad::make_breaks(
        0.0, hi, {threshold - 4.0 * width, threshold, threshold + 4.0 * width, avg_snr, 5.0 * avg_snr});
    const auto res = quad::integrate(integrand, std::span<const double>(breaks), eps_quadrature_tolerance);
    if (!res.converged)
        throw numeric_error(detail::concat("eps_fixed_rate_nocsi: quadrature did not converge (r=", r,
                                           ", err=", res.abs_error, ")"));
    return {std::clamp(res.value, 0.0, 1.0), res.abs_error + 3e-20, res.evaluations};
}

inline double eps_fixed_rate_nocsi(double avg_snr, int n_slot, double r)
{
    return eps_fixed_rate_nocsi_detailed(avg_snr, n_slot, r).value;
}

} // namespace fbldelay
