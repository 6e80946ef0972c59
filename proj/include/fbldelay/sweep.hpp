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
 * @file sweep.hpp
 * @brief Outer optimizations: training length, maximum arrival rate under a
 * delay target, and goodput comparisons across CSI assumptions.
 */

#pragma once

#include "fbldelay/channel.hpp"
#include "fbldelay/errmodel.hpp"
#include "fbldelay/parallel.hpp"
#include "fbldelay/quadrature.hpp"
#include "fbldelay/ratepolicy.hpp"
#include "fbldelay/snc.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace fbldelay {

struct QoSTarget {
    int w = 5;
    double p_target = 1e-8;

    void validate() const
    {
        if (w < 1) throw domain_error(detail::concat("target delay w must be >= 1, got ", w));
        if (!(p_target > 0.0 && p_target <= 1.0))
            throw domain_error(detail::concat("p_target must lie in (0, 1], got ", p_target));
    }
};

/// Everything needed to turn a link into a service transform.
struct SchemeOptions {
    Scheme scheme = Scheme::approxRA;
    double eps_min = 1e-3;   ///< approxRA lower limit on eps'
    double eps_floor = 0.0;  ///< perfectRA lower limit on eps
    double eps_fix = 0.003;  ///< fixedEps target
    double kappa = 0.9;      ///< fractionCapacity
    int grid_points = 2000;
    bool per_theta = true;   ///< rebuild theta-dependent policies at every probed theta
    double fixed_theta = 0.01; ///< theta used when a theta-dependent policy is built once
    NoCsiObjective nocsi_objective = NoCsiObjective::goodput;
};

/// Builds the policy of `opt.scheme` for one link at Mellin argument s.
/// fixedRateNoCSI ignores the training length and uses the whole slot.
inline RatePolicy build_policy(const LinkConfig& link, const SchemeOptions& opt, double s, int threads = 1)
{
    link.validate();
    if (opt.scheme == Scheme::fixedRateNoCSI) {
        const double r = optimize_fixed_rate_nocsi(link.avg_snr, link.n_slot, opt.nocsi_objective, s);
        return build_policy_fixed_rate_nocsi(link.avg_snr, link.n_slot, r);
    }
    const auto model = build_estimation_model(link);
    if (!(model.estimated_snr_mean() > 0.0))
        throw domain_error("adaptive schemes need m >= 1 training symbols (use fixedRateNoCSI for m = 0)");
    const int n = link.data_symbols();
    const auto grid = make_exponential_grid(model.estimated_snr_mean(), opt.grid_points);
    switch (opt.scheme) {
    case Scheme::approxRA: return build_policy_approx(model, n, s, grid, opt.eps_min, threads);
    case Scheme::perfectRA: return build_policy_perfect(model, n, s, grid, opt.eps_floor, threads);
    case Scheme::fixedEps: return build_policy_fixed_eps(model, n, grid, opt.eps_fix, threads);
    case Scheme::maxGoodput: return build_policy_max_goodput(model, n, grid, threads);
    case Scheme::fractionCapacity: return build_policy_fraction(model, n, grid, opt.kappa, threads);
    case Scheme::fixedRateNoCSI: break;
    }
    throw domain_error("unknown scheme");
}

inline bool scheme_depends_on_theta(const SchemeOptions& opt)
{
    return depends_on_theta(opt.scheme) ||
           (opt.scheme == Scheme::fixedRateNoCSI && opt.nocsi_objective == NoCsiObjective::mellin);
}

inline ServiceTransform make_service(const LinkConfig& link, const SchemeOptions& opt, int threads = 1)
{
    if (scheme_depends_on_theta(opt)) {
        if (opt.per_theta)
            return ServiceTransform::per_theta([link, opt, threads](double s) { return build_policy(link, opt, s, threads); });
        return ServiceTransform::fixed(build_policy(link, opt, 1.0 - opt.fixed_theta, threads));
    }
    return ServiceTransform::fixed(build_policy(link, opt, 1.0, threads));
}

struct TrainingRow {
    int m = 0;
    DelayBoundResult result;
};

struct TrainingSweep {
    int m_star = 0;
    double best_bound = 1.0;
    std::vector<TrainingRow> rows;
};

/// Default training lengths: every m up to 100, then every 5th, below n_slot.
inline std::vector<int> default_training_lengths(int n_slot, int m_lo = 1, int m_hi = -1, int dense_until = 100,
                                                 int coarse_stride = 5)
{
    if (m_hi < 0 || m_hi > n_slot - 1) m_hi = n_slot - 1;
    std::vector<int> ms;
    for (int m = std::max(1, m_lo); m <= m_hi; m += (m < dense_until ? 1 : coarse_stride)) ms.push_back(m);
    return ms;
}

/// Links with training lengths `ms` and a fixed slot length.
inline std::vector<LinkConfig> links_for_training(double avg_snr, int n_slot, const std::vector<int>& ms)
{
    std::vector<LinkConfig> links;
    for (int m : ms) links.push_back({avg_snr, n_slot, m});
    return links;
}

/// Evaluates the delay bound at w for each link (typically differing only in m) and
/// returns the argmin over m and the full table in input order. Cells run in parallel.
inline TrainingSweep optimize_training(const std::vector<LinkConfig>& links, double alpha_bar, int w,
                                       const SchemeOptions& opt, const ThetaSearch& search = {}, int threads = 1)
{
    if (links.empty()) throw domain_error("no training lengths to evaluate");
    for (const auto& l : links) l.validate();
    TrainingSweep out;
    out.rows.resize(links.size());
    parallel_for(links.size(), threads, [&](std::size_t i) {
        const ArrivalSpec spec{alpha_bar, links[i].n_slot};
        out.rows[i] = {links[i].m, delay_bound(spec, make_service(links[i], opt), w, search)};
    });
    out.best_bound = std::numeric_limits<double>::infinity();
    for (const auto& row : out.rows) {
        const double b = row.result.stable ? row.result.bound : std::numeric_limits<double>::infinity();
        if (b < out.best_bound) {
            out.best_bound = b;
            out.m_star = row.m;
        }
    }
    if (!std::isfinite(out.best_bound)) {
        out.best_bound = 1.0;
        out.m_star = out.rows.front().m;
    }
    return out;
}

inline TrainingSweep optimize_training(double avg_snr, int n_slot, double alpha_bar, int w, const SchemeOptions& opt,
                                       const std::vector<int>& ms, const ThetaSearch& search = {}, int threads = 1)
{
    if (n_slot < 2) throw domain_error("n_slot must be >= 2 to split training and data");
    return optimize_training(links_for_training(avg_snr, n_slot, ms), alpha_bar, w, opt, search, threads);
}

/// True if some stable theta gives min(K(theta, w), 1) <= p_target, i.e. the reported
/// bound meets the target; p_target = 1 reduces to stability. Same probes as
/// delay_bound, but stops as soon as a probe meets the target.
inline bool meets_target(const ArrivalSpec& spec, const ServiceTransform& service, const QoSTarget& target,
                         const ThetaSearch& search = {})
{
    const double log_lo = std::log(search.theta_min);
    const double log_step = (std::log(search.theta_max) - log_lo) / (search.coarse_points - 1);
    std::vector<double> grid;
    int best = -1;
    double best_k = std::numeric_limits<double>::infinity();
    auto k_at = [&](double theta) {
        return kernel_value(mellin_arrival(spec, 1.0 + theta), service.at(theta), target.w);
    };
    auto meets = [&](double k) { return std::isfinite(k) && std::min(k, 1.0) <= target.p_target; };
    for (int i = 0; i < search.coarse_points; ++i) {
        const double theta = i + 1 == search.coarse_points ? search.theta_max : std::exp(log_lo + log_step * i);
        const double k = k_at(theta);
        grid.push_back(theta);
        if (meets(k)) return true;
        if (!std::isfinite(k)) break;
        if (k < best_k) {
            best_k = k;
            best = i;
        }
    }
    if (best < 0) return false;
    const double a = std::log(grid[static_cast<std::size_t>(std::max(best - 1, 0))]);
    const double b = std::log(grid[std::min<std::size_t>(static_cast<std::size_t>(best + 1), grid.size() - 1)]);
    if (!(b > a)) return false;
    bool hit = false;
    auto f = [&](double lt) {
        if (hit) return -1.0;
        const double k = k_at(std::exp(lt));
        if (meets(k)) hit = true;
        return k;
    };
    opt::golden_minimize(f, a, b, std::log1p(search.rel_tol));
    return hit;
}

inline constexpr double alpha_tolerance = 1e-3;

/// Upper end of the arrival-rate bisection: (n / n_slot) log2(1 + 10 avg_snr).
inline double alpha_search_limit(const LinkConfig& link)
{
    return static_cast<double>(link.data_symbols()) / link.n_slot * capacity(10.0 * link.avg_snr);
}

/// Largest alpha_bar (bits per channel use of the whole slot) whose delay bound at
/// target.w stays <= target.p_target, by bisection to alpha_tolerance. The service
/// transform is built once and its per-theta values are reused across steps.
inline double max_arrival_rate(const LinkConfig& link, const QoSTarget& target, const ServiceTransform& service,
                               const ThetaSearch& search = {})
{
    target.validate();
    auto ok = [&](double alpha) { return meets_target({alpha, link.n_slot}, service, target, search); };
    double lo = 0.0;
    double hi = alpha_search_limit(link);
    if (!ok(alpha_tolerance * 1e-3)) return 0.0;
    if (ok(hi)) return hi;
    while (hi - lo > alpha_tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (ok(mid)) lo = mid;
        else hi = mid;
    }
    return lo;
}

inline double max_arrival_rate(const LinkConfig& link, const QoSTarget& target, const SchemeOptions& opt,
                               const ThetaSearch& search = {}, int threads = 1)
{
    return max_arrival_rate(link, target, make_service(link, opt, threads), search);
}

/**
 * Same quantity by the dual route: for fixed theta, K(theta, w) <= p solves in
 * closed form for the arrival Mellin value, a <= (1 - s^w/p)/s with s = M_S(1-theta),
 * hence alpha(theta) = ln(a) / (n_slot theta); at p = 1 only stability a < 1/s remains. The result is the maximum of
 * alpha(theta) over a log-spaced theta scan refined by golden-section search.
 * Used to cross-check the bisection.
 */
inline double max_arrival_rate_dual(const LinkConfig& link, const QoSTarget& target, const ServiceTransform& service,
                                    const ThetaSearch& search = {})
{
    target.validate();
    auto alpha_at = [&](double theta) {
        const double s = service.at(theta);
        const double sw = std::pow(s, target.w);
        if (target.p_target >= 1.0) return s > 0.0 ? -std::log(s) / (link.n_slot * theta) : 0.0;
        if (!(sw < target.p_target)) return 0.0;
        const double a = (1.0 - sw / target.p_target) / s;
        return a > 1.0 ? std::log(a) / (link.n_slot * theta) : 0.0;
    };
    auto neg = [&](double lt) { return -alpha_at(std::exp(lt)); };
    const double lo = std::log(search.theta_min), hi = std::log(search.theta_max);
    const auto m = opt::scan_then_golden(neg, lo, hi, search.coarse_points, std::log1p(search.rel_tol));
    return std::max(0.0, -m.fx);
}

struct ArrivalRow {
    int m = 0;
    double alpha_star = 0.0;
};

inline std::vector<ArrivalRow> max_arrival_vs_training(const std::vector<LinkConfig>& links, const QoSTarget& target,
                                                       const SchemeOptions& opt, const ThetaSearch& search = {},
                                                       int threads = 1)
{
    std::vector<ArrivalRow> rows(links.size());
    parallel_for(links.size(), threads, [&](std::size_t i) {
        rows[i] = {links[i].m, max_arrival_rate(links[i], target, opt, search)};
    });
    return rows;
}

struct TrainingVsDelayRow {
    double avg_snr = 0.0;
    int w = 0;
    int m_star = 0;
    double alpha_star = 0.0;
    std::vector<ArrivalRow> per_m; ///< alpha* for every evaluated m
};

/// For each (avg_snr, w): the training length maximizing the supported arrival rate.
/// `link_for(avg_snr, m)` gives the link of a cell (fixed slot or fixed data length).
template <class LinkFor>
std::vector<TrainingVsDelayRow> optimal_training_vs_delay(const std::vector<double>& avg_snrs, const LinkFor& link_for,
                                                          double p_target, const std::vector<int>& ws,
                                                          const SchemeOptions& opt, const std::vector<int>& ms,
                                                          const ThetaSearch& search = {}, int threads = 1)
{
    if (avg_snrs.empty() || ws.empty() || ms.empty()) throw domain_error("empty sweep axis");
    // One service transform per (snr, m) shared by all w.
    std::vector<LinkConfig> links;
    std::vector<ServiceTransform> services;
    for (double snr : avg_snrs)
        for (int m : ms) {
            links.push_back(link_for(snr, m));
            services.push_back(make_service(links.back(), opt));
        }
    const std::size_t cells = avg_snrs.size() * ws.size() * ms.size();
    std::vector<double> alpha(cells, 0.0);
    parallel_for(cells, threads, [&](std::size_t i) {
        const std::size_t c = i % ms.size();
        const std::size_t b = (i / ms.size()) % ws.size();
        const std::size_t a = i / (ms.size() * ws.size());
        const std::size_t k = a * ms.size() + c;
        alpha[i] = max_arrival_rate(links[k], QoSTarget{ws[b], p_target}, services[k], search);
    });
    std::vector<TrainingVsDelayRow> rows;
    for (std::size_t a = 0; a < avg_snrs.size(); ++a) {
        for (std::size_t b = 0; b < ws.size(); ++b) {
            TrainingVsDelayRow row{avg_snrs[a], ws[b], ms.front(), -1.0, {}};
            for (std::size_t c = 0; c < ms.size(); ++c) {
                const double v = alpha[(a * ws.size() + b) * ms.size() + c];
                row.per_m.push_back({ms[c], v});
                if (v > row.alpha_star) {
                    row.alpha_star = v;
                    row.m_star = ms[c];
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline std::vector<TrainingVsDelayRow> optimal_training_vs_delay(const std::vector<double>& avg_snrs, int n_slot,
                                                                 double p_target, const std::vector<int>& ws,
                                                                 const SchemeOptions& opt, const std::vector<int>& ms,
                                                                 const ThetaSearch& search = {}, int threads = 1)
{
    auto link_for = [n_slot](double snr, int m) { return LinkConfig{snr, n_slot, m}; };
    return optimal_training_vs_delay(avg_snrs, link_for, p_target, ws, opt, ms, search, threads);
}

/// E[log2(1 + Gamma)] for exponential Gamma of mean avg_snr: goodput with perfect
/// CSI and infinite blocklength.
inline double ergodic_capacity(double avg_snr)
{
    if (!(avg_snr > 0.0)) throw domain_error("avg_snr must be > 0");
    auto f = [&](double x) { return capacity(x) * std::exp(-x / avg_snr) / avg_snr; };
    const auto br = quad::make_breaks(0.0, 60.0 * avg_snr, {0.1 * avg_snr, avg_snr, 5.0 * avg_snr, 20.0 * avg_snr});
    const auto res = quad::integrate(f, std::span<const double>(br), {1e-13, 1e-11, 400});
    if (!res.converged) throw numeric_error("ergodic_capacity: quadrature did not converge");
    return res.value;
}

struct GoodputRow {
    std::string label;
    double goodput = 0.0; ///< bits per channel use of the whole slot
    int m = 0;
};

/// Expected goodput for: perfect CSI at infinite blocklength, perfect CSI at
/// blocklength n_slot, imperfect CSI with each training length in `ms`
/// (max-goodput policy, n = n_slot - m), and fixed-rate transmission without CSI.
inline std::vector<GoodputRow> goodput_comparison(double avg_snr, int n_slot, const std::vector<int>& ms,
                                                  int grid_points = 2000, int threads = 1)
{
    std::vector<GoodputRow> rows;
    rows.push_back({"PCSI-IBL", ergodic_capacity(avg_snr), 0});
    {
        const auto model = perfect_csi_model(avg_snr);
        const auto grid = make_exponential_grid(model.estimated_snr_mean(), grid_points);
        rows.push_back({"PCSI-FBL", expected_goodput(build_policy_max_goodput(model, n_slot, grid, threads), n_slot), 0});
    }
    for (int m : ms) {
        const LinkConfig link{avg_snr, n_slot, m};
        SchemeOptions opt;
        opt.scheme = Scheme::maxGoodput;
        opt.grid_points = grid_points;
        rows.push_back({"ICSI", expected_goodput(build_policy(link, opt, 1.0, threads), n_slot), m});
    }
    const double r = optimize_fixed_rate_nocsi(avg_snr, n_slot, NoCsiObjective::goodput);
    rows.push_back({"NoCSI", expected_goodput(build_policy_fixed_rate_nocsi(avg_snr, n_slot, r), n_slot), 0});
    return rows;
}

} // namespace fbldelay
