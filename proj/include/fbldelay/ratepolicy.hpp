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
 * @file ratepolicy.hpp
 * @brief Rate adaptation policies over a discretized estimated-SNR axis.
 *
 * A policy assigns each gridpoint gamma_hat a rate r, a target error
 * probability eps' and the resulting error probability eps (normal
 * approximation). The delay-oriented schemes minimize the per-point Mellin term
 *
 *     g = (1 - eps) exp(n r (s - 1)) + eps
 *
 * at Mellin argument s < 1 (the delay analysis at parameter theta uses
 * s = 1 - theta). Rates are in bits per channel use; the exponent n r (s - 1)
 * is the natural-log form (n / ln 2)(s - 1) ln(1 + gamma_hat - sigma Q^-1(eps')).
 *
 * Grid convention: interval [p_i, p_{i+1}) uses the values of its lower
 * endpoint p_i. The head [0, p_0) transmits nothing and the tail [p_last, inf)
 * reuses the last point. With rates nondecreasing in gamma_hat this upper-bounds
 * the service Mellin transform for s <= 1.
 */

#pragma once

#include "fbldelay/channel.hpp"
#include "fbldelay/csv.hpp"
#include "fbldelay/errmodel.hpp"
#include "fbldelay/errors.hpp"
#include "fbldelay/optimize.hpp"
#include "fbldelay/parallel.hpp"
#include "fbldelay/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fbldelay {

enum class Scheme { approxRA, perfectRA, fixedEps, maxGoodput, fractionCapacity, fixedRateNoCSI };

inline constexpr Scheme all_schemes[] = {Scheme::approxRA,   Scheme::perfectRA,        Scheme::fixedEps,
                                         Scheme::maxGoodput, Scheme::fractionCapacity, Scheme::fixedRateNoCSI};

inline std::string_view to_string(Scheme s)
{
    switch (s) {
    case Scheme::approxRA: return "approxRA";
    case Scheme::perfectRA: return "perfectRA";
    case Scheme::fixedEps: return "fixedEps";
    case Scheme::maxGoodput: return "maxGoodput";
    case Scheme::fractionCapacity: return "fractionCapacity";
    case Scheme::fixedRateNoCSI: return "fixedRateNoCSI";
    }
    return "unknown";
}

inline std::optional<Scheme> parse_scheme(std::string_view name)
{
    for (Scheme s : all_schemes)
        if (to_string(s) == name) return s;
    return std::nullopt;
}

/// True for schemes whose rates depend on the Mellin argument.
inline bool depends_on_theta(Scheme s) { return s == Scheme::approxRA || s == Scheme::perfectRA; }

struct SnrGrid {
    std::vector<double> points;        ///< ascending estimated SNRs
    std::vector<double> probabilities; ///< mass of [points[i], points[i+1]), size points.size()-1
    double head_mass = 0.0;            ///< mass below points.front()
    double tail_mass = 0.0;            ///< mass at or above points.back()

    std::size_t size() const { return points.size(); }

    /// Mass carried by gridpoint i (its interval, or the tail for the last point).
    double mass(std::size_t i) const { return i + 1 < points.size() ? probabilities[i] : tail_mass; }

    /// Index of the greatest gridpoint <= gamma_hat, or nullopt in the head.
    std::optional<std::size_t> locate(double gamma_hat) const
    {
        auto it = std::upper_bound(points.begin(), points.end(), gamma_hat);
        if (it == points.begin()) return std::nullopt;
        return static_cast<std::size_t>(it - points.begin() - 1);
    }
};

/// Grid from explicit points, with masses taken from the exponential law of the
/// given mean. A mean of 0 puts all mass on the first point (no CSI: gamma_hat = 0).
inline SnrGrid grid_from_points(std::vector<double> points, double mean)
{
    if (points.empty()) throw domain_error("SNR grid needs at least one point");
    for (std::size_t i = 0; i < points.size(); ++i) {
        detail::require_nonnegative(points[i], "grid point");
        if (i && !(points[i] > points[i - 1])) throw domain_error("SNR grid points must be strictly increasing");
    }
    SnrGrid g;
    g.points = std::move(points);
    g.probabilities.resize(g.points.size() - 1);
    if (!(mean > 0.0)) {
        g.head_mass = 0.0;
        g.tail_mass = 1.0;
        if (g.points.front() > 0.0) throw domain_error("degenerate SNR law needs a gridpoint at 0");
        return g;
    }
    // Survival function exp(-x/mean); interval masses as differences of survivals.
    auto surv = [&](double x) { return std::exp(-x / mean); };
    g.head_mass = -std::expm1(-g.points.front() / mean);
    for (std::size_t i = 0; i + 1 < g.points.size(); ++i)
        g.probabilities[i] = surv(g.points[i]) * -std::expm1(-(g.points[i + 1] - g.points[i]) / mean);
    g.tail_mass = surv(g.points.back());
    return g;
}

/// `count` log-spaced points between the q_lo and q_hi quantiles of the
/// exponential law of the estimated SNR.
inline SnrGrid make_exponential_grid(double mean, int count = 2000, double q_lo = 1e-12, double q_hi = 1.0 - 1e-12)
{
    if (!(mean > 0.0)) throw domain_error(detail::concat("grid mean must be > 0, got ", mean));
    if (count < 2) throw domain_error(detail::concat("grid needs >= 2 points, got ", count));
    if (!(q_lo > 0.0 && q_lo < q_hi && q_hi < 1.0)) throw domain_error("grid quantiles must satisfy 0 < q_lo < q_hi < 1");
    const double lo = -mean * std::log1p(-q_lo);
    const double hi = -mean * std::log1p(-q_hi);
    std::vector<double> pts(static_cast<std::size_t>(count));
    const double step = std::log(hi / lo) / (count - 1);
    for (int i = 0; i < count; ++i) pts[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
    pts.back() = hi;
    return grid_from_points(std::move(pts), mean);
}

/// Single point at gamma_hat = 0 carrying all mass: the transmitter has no CSI.
inline SnrGrid no_csi_grid() { return grid_from_points({0.0}, 0.0); }

struct RatePolicy {
    SnrGrid grid;
    std::vector<double> rate;       ///< bits per channel use
    std::vector<double> eps_target; ///< eps' the scheme aimed at (equals eps_true for schemes working on eps directly)
    std::vector<double> eps_true;   ///< normal-approximation error probability at the chosen rate
    Scheme scheme = Scheme::approxRA;
    int blocklength = 1;            ///< data symbols per codeword
    double mellin_arg = std::numeric_limits<double>::quiet_NaN(); ///< s the policy was optimized for, if any
    std::vector<std::string> notes;

    std::size_t size() const { return grid.size(); }
};

/// Capacity log2(1 + gamma) in bits.
inline double capacity(double gamma) { return std::log1p(gamma) * specfun::log2e; }

/// exp(n r (s - 1)), the Mellin factor of a successful slot.
inline double service_factor(int n, double r, double s) { return std::exp(static_cast<double>(n) * r * (s - 1.0)); }

/// g(gamma_hat, eps') = (1 - eps') exp(n r_IC,F(gamma_hat, n, eps') (s - 1)) + eps'.
/// Requires Q(gamma_hat / sigma_IC,F) < eps' < 1/2 (precondition_error otherwise).
inline double g_objective(const EstimationModel& model, double gamma_hat, int n, double s, double eps)
{
    const double r = rate_combined(model, gamma_hat, n, eps);
    return (1.0 - eps) * service_factor(n, r, s) + eps;
}

/// Lower end Q(gamma_hat / sigma_IC,F) of the admissible eps' interval.
inline double admissible_eps_floor(const EstimationModel& model, double gamma_hat, int n)
{
    if (!(gamma_hat > 0.0)) return 0.5;
    const auto v = variance_terms(model, gamma_hat, n);
    return specfun::gaussian_q(gamma_hat / std::sqrt(v.sigma_icf_sq));
}

struct GridpointChoice {
    bool feasible = false;
    double eps_target = 0.0;
    double rate = 0.0;
    double objective = 1.0; ///< g at the choice (1 when infeasible: no service)
};

inline constexpr double eps_search_width = 1e-10;

/// Minimizes g over eps' in [max(Q(gamma_hat/sigma_IC,F), eps_min), 1/2) by
/// golden-section search. An empty interval means the point transmits nothing.
/// At s = 1 every admissible eps' gives g = 1 and the interval midpoint is returned.
inline GridpointChoice optimize_gridpoint(const EstimationModel& model, double gamma_hat, int n, double s,
                                          double eps_min)
{
    detail::require_nonnegative(gamma_hat, "estimated SNR");
    detail::require_blocklength(n);
    if (!(s <= 1.0)) throw precondition_error(detail::concat("Mellin argument must be <= 1, got ", s));
    if (!(eps_min >= 0.0 && eps_min < 0.5))
        throw precondition_error(detail::concat("eps_min must lie in [0, 1/2), got ", eps_min));
    const double lo = std::max(admissible_eps_floor(model, gamma_hat, n), eps_min);
    if (!(lo < 0.5)) return {};
    auto g = [&](double e) { return g_objective(model, gamma_hat, n, s, e); };

    double eps = 0.0;
    if (s == 1.0) {
        eps = 0.5 * (lo + 0.5);
    } else {
        // Golden search touches only interior points; the endpoints are compared below.
        eps = opt::golden_minimize(g, lo, 0.5, eps_search_width).x;
        if (lo == eps_min && eps_min > admissible_eps_floor(model, gamma_hat, n) && g(eps_min) <= g(eps)) eps = eps_min;
    }
    const double r = rate_combined(model, gamma_hat, n, eps);
    return {true, eps, r, (1.0 - eps) * service_factor(n, r, s) + eps};
}

namespace detail {

inline RatePolicy empty_policy(const SnrGrid& grid, Scheme scheme, int n)
{
    RatePolicy p;
    p.grid = grid;
    p.rate.assign(grid.size(), 0.0);
    p.eps_target.assign(grid.size(), 0.0);
    p.eps_true.assign(grid.size(), 0.0);
    p.scheme = scheme;
    p.blocklength = n;
    return p;
}

inline void require_mellin_arg(double s)
{
    if (!(s <= 1.0) || !std::isfinite(s))
        throw precondition_error(concat("Mellin argument must be finite and <= 1, got ", s));
}

} // namespace detail

/// approxRA: per gridpoint, the eps' minimizing g (with eps' >= eps_min); eps_true
/// from the normal approximation at the resulting rate.
inline RatePolicy build_policy_approx(const EstimationModel& model, int n, double s, const SnrGrid& grid,
                                      double eps_min = 1e-3, int threads = 1)
{
    detail::require_mellin_arg(s);
    auto p = detail::empty_policy(grid, Scheme::approxRA, n);
    p.mellin_arg = s;
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        const auto c = optimize_gridpoint(model, grid.points[i], n, s, eps_min);
        if (!c.feasible) return;
        p.rate[i] = c.rate;
        p.eps_target[i] = c.eps_target;
        p.eps_true[i] = eps_normal_approx(model, grid.points[i], n, c.rate);
    });
    if (s == 1.0) p.notes.push_back("Mellin argument 1: objective is flat, eps' set to interval midpoints");
    return p;
}

inline constexpr double rate_resolution = 1e-4;
inline constexpr int rate_scan_points = 24;

/// Smallest rate in [0, r_max] whose normal-approximation error reaches eps_floor
/// (0 when eps_floor is 0), by bisection; eps is increasing in r.
inline double rate_for_eps_floor(const EstimationModel& model, double gamma_hat, int n, double eps_floor, double r_max)
{
    if (!(eps_floor > 0.0)) return 0.0;
    if (eps_normal_approx(model, gamma_hat, n, r_max) < eps_floor) return r_max;
    double lo = 0.0, hi = r_max;
    while (hi - lo > 1e-9 * std::max(1.0, r_max)) {
        const double mid = 0.5 * (lo + hi);
        if (eps_normal_approx(model, gamma_hat, n, mid) < eps_floor) lo = mid;
        else hi = mid;
    }
    return hi;
}

/// perfectRA: per gridpoint, minimizes (1 - eps(r)) exp(n r (s - 1)) + eps(r)
/// with eps from the normal approximation, over r in [0, log2(1 + gamma_hat)] and
/// restricted to eps(r) >= eps_floor. Coarse scan, then golden refinement to
/// rate_resolution.
inline RatePolicy build_policy_perfect(const EstimationModel& model, int n, double s, const SnrGrid& grid,
                                       double eps_floor = 0.0, int threads = 1)
{
    detail::require_mellin_arg(s);
    if (!(eps_floor >= 0.0 && eps_floor < 1.0))
        throw precondition_error(detail::concat("eps_floor must lie in [0, 1), got ", eps_floor));
    auto p = detail::empty_policy(grid, Scheme::perfectRA, n);
    p.mellin_arg = s;
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        const double gh = grid.points[i];
        const double cap = capacity(gh);
        if (!(cap > 0.0)) return;
        const double r_lo = rate_for_eps_floor(model, gh, n, eps_floor, cap);
        auto h = [&](double r) {
            const double e = eps_normal_approx(model, gh, n, r);
            return (1.0 - e) * service_factor(n, r, s) + e;
        };
        double r = 0.0;
        if (s == 1.0) {
            r = 0.5 * (r_lo + cap);
        } else if (cap - r_lo > rate_resolution) {
            r = opt::scan_then_golden(h, r_lo, cap, rate_scan_points, rate_resolution).x;
        } else {
            r = r_lo;
        }
        if (r < r_lo) r = r_lo;
        p.rate[i] = r;
        p.eps_true[i] = eps_normal_approx(model, gh, n, r);
        p.eps_target[i] = p.eps_true[i];
    });
    if (s == 1.0) p.notes.push_back("Mellin argument 1: objective is flat, rates set to interval midpoints");
    return p;
}

/// Fixed-eps: per gridpoint, the rate with eps_normal_approx(r) = eps_fix, by
/// bisection to |eps - eps_fix| <= min(1e-6, 1e-4 eps_fix) on the side eps <= eps_fix.
/// Zero rate where even r -> 0 exceeds eps_fix; clamped to log2(1 + gamma_hat).
inline RatePolicy build_policy_fixed_eps(const EstimationModel& model, int n, const SnrGrid& grid, double eps_fix,
                                         int threads = 1)
{
    if (!(eps_fix > 0.0 && eps_fix < 0.5))
        throw precondition_error(detail::concat("eps_fix must lie in (0, 1/2), got ", eps_fix));
    auto p = detail::empty_policy(grid, Scheme::fixedEps, n);
    const double tol = std::min(1e-6, 1e-4 * eps_fix);
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        const double gh = grid.points[i];
        const double cap = capacity(gh);
        if (!(cap > 0.0)) return;
        auto eps = [&](double r) { return eps_normal_approx(model, gh, n, r); };
        const double r_min = 1e-12 * std::max(1.0, cap);
        if (eps(r_min) > eps_fix) return;
        double r = cap;
        if (eps(cap) > eps_fix) {
            double lo = r_min, hi = cap;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double e = eps(mid);
                if (e <= eps_fix) {
                    lo = mid;
                    if (eps_fix - e <= tol) break;
                } else {
                    hi = mid;
                }
                if (hi - lo <= 1e-13 * cap) break;
            }
            r = lo;
        }
        p.rate[i] = r;
        p.eps_target[i] = eps_fix;
        p.eps_true[i] = eps(r);
    });
    return p;
}

/// Max-goodput: per gridpoint, maximizes r (1 - eps(r)) over [0, log2(1 + gamma_hat)].
/// Independent of the Mellin argument.
inline RatePolicy build_policy_max_goodput(const EstimationModel& model, int n, const SnrGrid& grid, int threads = 1)
{
    auto p = detail::empty_policy(grid, Scheme::maxGoodput, n);
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        const double gh = grid.points[i];
        const double cap = capacity(gh);
        if (!(cap > 0.0)) return;
        auto neg_goodput = [&](double r) { return -r * (1.0 - eps_normal_approx(model, gh, n, r)); };
        const double r = opt::scan_then_golden(neg_goodput, 0.0, cap, rate_scan_points, rate_resolution).x;
        p.rate[i] = r;
        p.eps_true[i] = eps_normal_approx(model, gh, n, r);
        p.eps_target[i] = p.eps_true[i];
    });
    return p;
}

/// r(gamma_hat) = kappa log2(1 + gamma_hat); eps_target holds the combined closed-form bound.
inline RatePolicy build_policy_fraction(const EstimationModel& model, int n, const SnrGrid& grid, double kappa,
                                        int threads = 1)
{
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw precondition_error(detail::concat("kappa must lie in [0, 1], got ", kappa));
    auto p = detail::empty_policy(grid, Scheme::fractionCapacity, n);
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        const double gh = grid.points[i];
        const double r = kappa * capacity(gh);
        p.rate[i] = r;
        p.eps_true[i] = eps_normal_approx(model, gh, n, r);
        p.eps_target[i] = eps_bound_combined(model, gh, n, r);
    });
    return p;
}

/// Fixed rate r over the whole slot (n_slot symbols, no training, no CSI).
inline RatePolicy build_policy_fixed_rate_nocsi(double avg_snr, int n_slot, double r)
{
    detail::require_rate(r);
    auto p = detail::empty_policy(no_csi_grid(), Scheme::fixedRateNoCSI, n_slot);
    p.rate[0] = r;
    p.eps_true[0] = eps_fixed_rate_nocsi(avg_snr, n_slot, r);
    p.eps_target[0] = p.eps_true[0];
    return p;
}

enum class NoCsiObjective { goodput, mellin };

/// Fixed rate for transmission without CSI: maximizes goodput r (1 - eps), or
/// minimizes the Mellin term (1 - eps) exp(n_slot r (s - 1)) + eps.
inline double optimize_fixed_rate_nocsi(double avg_snr, int n_slot, NoCsiObjective objective, double s = 1.0)
{
    const double r_hi = capacity(10.0 * avg_snr);
    auto f = [&](double r) {
        const double e = eps_fixed_rate_nocsi(avg_snr, n_slot, r);
        if (objective == NoCsiObjective::goodput) return -r * (1.0 - e);
        return (1.0 - e) * service_factor(n_slot, r, s) + e;
    };
    if (objective == NoCsiObjective::mellin) detail::require_mellin_arg(s);
    return opt::scan_then_golden(f, 0.0, r_hi, 4 * rate_scan_points, rate_resolution).x;
}

/// (n / n_slot) * sum over the grid of r (1 - eps_true) * mass, lower-endpoint convention.
inline double expected_goodput(const RatePolicy& policy, int n_slot)
{
    if (n_slot < 1) throw domain_error("n_slot must be >= 1");
    double acc = 0.0;
    for (std::size_t i = 0; i < policy.size(); ++i)
        acc += policy.rate[i] * (1.0 - policy.eps_true[i]) * policy.grid.mass(i);
    return acc * policy.blocklength / n_slot;
}

inline constexpr double tail_monotonicity_tolerance = 5e-4;

/// Checks that rates are nondecreasing over the top 5% of the grid, which makes the
/// tail term (last point's values above the grid) an upper bound. Throws numeric_error.
inline void check_tail_monotone(const RatePolicy& policy)
{
    const std::size_t count = policy.size();
    if (count < 2) return;
    const std::size_t start = count - std::max<std::size_t>(2, count / 20);
    for (std::size_t i = start + 1; i < count; ++i) {
        if (policy.rate[i] + tail_monotonicity_tolerance < policy.rate[i - 1])
            throw numeric_error(detail::concat("policy rates decrease near the top of the grid (", to_string(policy.scheme),
                                               ": r[", i - 1, "]=", policy.rate[i - 1], " at gamma_hat=",
                                               policy.grid.points[i - 1], ", r[", i, "]=", policy.rate[i],
                                               " at gamma_hat=", policy.grid.points[i],
                                               "); the tail term would not be conservative"));
    }
}

/// Writes the policy as CSV with columns gamma_hat, rate, eps_target, eps_true.
inline void write_policy_csv(std::ostream& os, const RatePolicy& policy, const csv::Meta& extra = {})
{
    csv::Meta meta = extra;
    meta.emplace_back("scheme", std::string(to_string(policy.scheme)));
    meta.emplace_back("blocklength", csv::integer(policy.blocklength));
    if (!std::isnan(policy.mellin_arg)) meta.emplace_back("mellin_arg", csv::real(policy.mellin_arg));
    meta.emplace_back("head_mass", csv::probability(policy.grid.head_mass));
    meta.emplace_back("tail_mass", csv::probability(policy.grid.tail_mass));
    for (const auto& n : policy.notes) meta.emplace_back("note", n);
    csv::write_meta(os, meta);
    csv::write_row(os, {"gamma_hat", "rate", "eps_target", "eps_true"});
    for (std::size_t i = 0; i < policy.size(); ++i)
        csv::write_row(os, {csv::real(policy.grid.points[i]), csv::real(policy.rate[i]),
                            csv::probability(policy.eps_target[i]), csv::probability(policy.eps_true[i])});
}

/// Reads a policy written by write_policy_csv. Grid masses are recomputed from the
/// exponential law with the given mean (0 for a no-CSI policy).
inline RatePolicy read_policy_csv(std::istream& is, double estimated_snr_mean)
{
    const auto t = csv::read_table(is);
    const int cg = t.column("gamma_hat"), cr = t.column("rate"), ce = t.column("eps_target"), ct = t.column("eps_true");
    if (cg < 0 || cr < 0 || ce < 0 || ct < 0)
        throw domain_error("policy csv needs columns gamma_hat, rate, eps_target, eps_true");
    if (t.rows.empty()) throw domain_error("policy csv has no rows");
    std::vector<double> pts;
    for (const auto& row : t.rows) pts.push_back(row[static_cast<std::size_t>(cg)]);
    RatePolicy p;
    p.grid = grid_from_points(std::move(pts), estimated_snr_mean);
    for (const auto& row : t.rows) {
        const double r = row[static_cast<std::size_t>(cr)];
        detail::require_rate(r);
        detail::require_probability(row[static_cast<std::size_t>(ce)], "eps_target");
        detail::require_probability(row[static_cast<std::size_t>(ct)], "eps_true");
        p.rate.push_back(r);
        p.eps_target.push_back(row[static_cast<std::size_t>(ce)]);
        p.eps_true.push_back(row[static_cast<std::size_t>(ct)]);
    }
    if (const auto* s = t.find_meta("scheme")) {
        const auto sc = parse_scheme(*s);
        if (!sc) throw domain_error(detail::concat("policy csv: unknown scheme '", *s, "'"));
        p.scheme = *sc;
    }
    if (const auto* b = t.find_meta("blocklength")) p.blocklength = std::stoi(*b);
    else throw domain_error("policy csv: missing '# blocklength=' line");
    if (const auto* m = t.find_meta("mellin_arg")) p.mellin_arg = std::stod(*m);
    return p;
}

} // namespace fbldelay
