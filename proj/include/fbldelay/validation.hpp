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
 * @file validation.hpp
 * @brief Self-checks of the error model and rate inversions that can be run on
 * any installation (`fbldelay validate`): bound dominance, inversion roundtrips
 * and convexity of the per-point Mellin objective.
 */

#pragma once

#include "fbldelay/channel.hpp"
#include "fbldelay/errmodel.hpp"
#include "fbldelay/ratepolicy.hpp"
#include "fbldelay/rng.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fbldelay::validation {

struct Check {
    std::string name;
    bool passed = false;
    long long cases = 0;
    long long violations = 0;
    std::string detail;
};

struct DominanceGrid {
    std::vector<double> avg_snr{10.0, 31.6228, 100.0};
    std::vector<int> m{5, 10, 25, 50};
    std::vector<int> n{100, 200, 245};
    std::vector<double> kappa{0.75, 0.9, 0.95};
    int gamma_hat_points = 40;
    double gamma_hat_db_lo = -10.0;
    double gamma_hat_db_hi = 25.0;

    double gamma_hat(int k) const
    {
        return db_to_linear(gamma_hat_db_lo + (gamma_hat_db_hi - gamma_hat_db_lo) * k / (gamma_hat_points - 1));
    }
};

/// eps_bound_combined >= eps_normal_approx and outage_bound_icsi >= outage_exact
/// at r = kappa log2(1 + gamma_hat) over the grid.
inline std::vector<Check> dominance(const DominanceGrid& g = {})
{
    Check comb;
    comb.name = "combined bound >= normal approximation";
    Check outage;
    outage.name = "outage bound >= exact outage";
    for (double snr : g.avg_snr)
        for (int m : g.m)
            for (int n : g.n) {
                const auto model = build_estimation_model({snr, n + m, m});
                for (int k = 0; k < g.gamma_hat_points; ++k) {
                    const double gh = g.gamma_hat(k);
                    for (double kappa : g.kappa) {
                        const double r = kappa * capacity(gh);
                        const double e = eps_normal_approx(model, gh, n, r);
                        const double b = eps_bound_combined(model, gh, n, r);
                        ++comb.cases;
                        if (b < e) {
                            if (comb.violations++ == 0)
                                comb.detail = detail::concat("first at avg_snr=", snr, " m=", m, " n=", n, " gamma_hat=", gh,
                                                             " kappa=", kappa, ": bound=", b, " eps=", e);
                        }
                        const double o = outage_exact(model, gh, r);
                        const double ob = outage_bound_icsi(model, gh, r);
                        ++outage.cases;
                        if (ob < o) {
                            if (outage.violations++ == 0)
                                outage.detail = detail::concat("first at avg_snr=", snr, " m=", m, " gamma_hat=", gh,
                                                               " kappa=", kappa, ": bound=", ob, " exact=", o);
                        }
                    }
                }
            }
    comb.passed = comb.violations == 0;
    outage.passed = outage.violations == 0;
    return {comb, outage};
}

/// Rate inversions reproduce their target probabilities to 1e-9.
inline Check roundtrips(std::uint64_t seed = 7, int samples = 2000)
{
    Check c;
    c.name = "rate inversion roundtrips";
    Xoshiro256pp rng(seed);
    for (int i = 0; i < samples; ++i) {
        const double snr = db_to_linear(5.0 + 20.0 * rng.uniform_open());
        const int m = 1 + static_cast<int>(rng.uniform_open() * 60);
        const int n = 50 + static_cast<int>(rng.uniform_open() * 400);
        const auto model = build_estimation_model({snr, n + m, m});
        const double gh = model.estimated_snr_mean() * -std::log(rng.uniform_open());
        const double eps = std::exp(std::log(1e-6) + (std::log(0.49) - std::log(1e-6)) * rng.uniform_open());
        auto test = [&](double target, double got, const char* what) {
            ++c.cases;
            if (!(std::abs(got - target) <= 1e-9)) {
                if (c.violations++ == 0)
                    c.detail = detail::concat(what, ": target=", target, " got=", got, " gamma_hat=", gh, " n=", n);
            }
        };
        if (eps > admissible_eps_floor(model, gh, n))
            test(eps, eps_bound_combined(model, gh, n, rate_combined(model, gh, n, eps)), "combined");
        const auto v = variance_terms(model, gh, n);
        if (gh > 0.0 && eps > specfun::gaussian_q(gh / std::sqrt(v.sigma_icsi_sq)))
            test(eps, outage_bound_icsi(model, gh, rate_icsi(model, gh, eps)), "icsi");
        if (capacity(gh) > std::sqrt(specfun::dispersion(gh) / n) * specfun::inverse_q(eps))
            test(eps, eps_fbl_perfect_csi(gh, n, rate_fbl(gh, n, eps)), "fbl");
    }
    c.passed = c.violations == 0;
    return c;
}

/// Second central differences of g(gamma_hat, eps') in eps' at random admissible
/// (gamma_hat, eps', s) triples; every difference must be positive. The linear eps'
/// term has zero second difference, so the curved part f = (1 - eps') exp(n r (s - 1))
/// is differenced relative to f(eps') in log form, which keeps tiny f resolvable.
inline Check convexity(std::uint64_t seed = 11, int samples = 10000)
{
    Check c;
    c.name = "convexity of the per-point Mellin objective";
    Xoshiro256pp rng(seed);
    const auto model = build_estimation_model({db_to_linear(15.0), 225, 25});
    const int n = 200;
    while (c.cases < samples) {
        const double gh = db_to_linear(-5.0 + 30.0 * rng.uniform_open());
        const double s = 1.0 - 0.2 * rng.uniform_open();
        const double lo = admissible_eps_floor(model, gh, n);
        if (!(lo < 0.45)) continue;
        const double e = lo + (0.5 - lo) * rng.uniform_open();
        const double h = 1e-3 * std::min(e - lo, 0.5 - e);
        if (!(h > 1e-9)) continue;
        auto log_f = [&](double x) { return std::log1p(-x) + n * rate_combined(model, gh, n, x) * (s - 1.0); };
        const double l0 = log_f(e);
        const double rel = std::expm1(log_f(e + h) - l0) + std::expm1(log_f(e - h) - l0);
        ++c.cases;
        if (!(rel > 0.0)) {
            if (c.violations++ == 0)
                c.detail = detail::concat("first at gamma_hat=", gh, " eps'=", e, " s=", s, " relative diff=", rel);
        }
    }
    c.passed = c.violations == 0;
    return c;
}

inline std::vector<Check> run_all()
{
    auto out = dominance();
    out.push_back(roundtrips());
    out.push_back(convexity());
    return out;
}

} // namespace fbldelay::validation
