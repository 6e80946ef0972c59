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
 * @file snc.hpp
 * @brief Delay-violation bounds from Mellin transforms in the SNR domain.
 *
 * With constant arrivals of alpha_bar * n_slot bits per slot and i.i.d. service,
 * for every theta > 0 satisfying M_A(1+theta) M_S(1-theta) < 1,
 *
 *     p_v(w) <= K(theta, w) = M_S(1-theta)^w / (1 - M_A(1+theta) M_S(1-theta)).
 *
 * delay_bound searches the infimum over theta. The stable theta form an interval
 * starting at 0 (log M_A(1+theta) + log M_S(1-theta) is convex in theta and
 * vanishes at 0), so the coarse scan stops at the first unstable probe.
 */

#pragma once

#include "fbldelay/csv.hpp"
#include "fbldelay/errors.hpp"
#include "fbldelay/optimize.hpp"
#include "fbldelay/ratepolicy.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

namespace fbldelay {

struct ArrivalSpec {
    double alpha_bar = 0.0; ///< bits per channel use
    int n_slot = 1;

    double bits_per_slot() const { return alpha_bar * n_slot; }

    void validate() const
    {
        if (!(alpha_bar >= 0.0) || !std::isfinite(alpha_bar))
            throw domain_error(detail::concat("alpha_bar must be finite and >= 0, got ", alpha_bar));
        if (n_slot < 1) throw domain_error(detail::concat("n_slot must be >= 1, got ", n_slot));
    }
};

/// M_A(s) = exp(alpha_bar n_slot (s - 1)).
inline double mellin_arrival(const ArrivalSpec& spec, double s) { return std::exp(spec.bits_per_slot() * (s - 1.0)); }

/// M_S(s) = head + sum_i mass_i ((1 - eps_i) exp(n r_i (s - 1)) + eps_i), tail on the last point.
/// Requires s <= 1, where the lower-endpoint discretization is an upper bound.
inline double mellin_service(const RatePolicy& policy, double s)
{
    if (!(s <= 1.0)) throw precondition_error(detail::concat("service Mellin transform needs s <= 1, got ", s));
    check_tail_monotone(policy);
    double acc = policy.grid.head_mass;
    for (std::size_t i = 0; i < policy.size(); ++i) {
        const double e = policy.eps_true[i];
        acc += policy.grid.mass(i) * ((1.0 - e) * service_factor(policy.blocklength, policy.rate[i], s) + e);
    }
    return acc;
}

inline bool is_stable(double m_arrival, double m_service) { return m_arrival * m_service < 1.0; }

/// Kernel from the two transform values; +inf when unstable. Evaluated in log form.
inline double kernel_value(double m_arrival, double m_service, int w)
{
    if (w < 0) throw domain_error(detail::concat("delay target must be >= 0, got ", w));
    const double prod = m_arrival * m_service;
    if (!(prod < 1.0)) return std::numeric_limits<double>::infinity();
    if (m_service == 0.0) return w == 0 ? 1.0 / (1.0 - prod) : 0.0;
    return std::exp(w * std::log(m_service) - std::log1p(-prod));
}

inline bool stability(const ArrivalSpec& spec, const RatePolicy& policy, double theta)
{
    if (!(theta > 0.0)) throw domain_error(detail::concat("theta must be > 0, got ", theta));
    return is_stable(mellin_arrival(spec, 1.0 + theta), mellin_service(policy, 1.0 - theta));
}

inline double kernel(const ArrivalSpec& spec, const RatePolicy& policy, double theta, int w)
{
    if (!(theta > 0.0)) throw domain_error(detail::concat("theta must be > 0, got ", theta));
    const double ma = mellin_arrival(spec, 1.0 + theta);
    const double ms = mellin_service(policy, 1.0 - theta);
    if (!is_stable(ma, ms))
        throw unstable_error(detail::concat("kernel requested at unstable theta=", theta, " (M_A(1+theta) M_S(1-theta) = ",
                                            ma * ms, " >= 1); check stability() first"));
    return kernel_value(ma, ms, w);
}

/**
 * theta -> M_S(1 - theta), either from one fixed policy or from a policy rebuilt
 * for every theta (the delay-optimal coupling for approxRA / perfectRA).
 * Values are memoized per theta; copies share the memo. Thread-safe.
 */
class ServiceTransform {
public:
    using Builder = std::function<RatePolicy(double s)>;

    static ServiceTransform fixed(RatePolicy policy)
    {
        ServiceTransform t;
        t.state_->policy = std::make_shared<const RatePolicy>(std::move(policy));
        return t;
    }

    static ServiceTransform per_theta(Builder builder)
    {
        ServiceTransform t;
        t.state_->builder = std::move(builder);
        return t;
    }

    bool theta_dependent() const { return static_cast<bool>(state_->builder); }

    RatePolicy policy_at(double theta) const
    {
        if (state_->policy) return *state_->policy;
        return state_->builder(1.0 - theta);
    }

    double at(double theta) const
    {
        {
            std::lock_guard lock(state_->mutex);
            auto it = state_->memo.find(theta);
            if (it != state_->memo.end()) return it->second;
        }
        const double v = state_->policy ? mellin_service(*state_->policy, 1.0 - theta)
                                        : mellin_service(state_->builder(1.0 - theta), 1.0 - theta);
        std::lock_guard lock(state_->mutex);
        state_->memo.emplace(theta, v);
        return v;
    }

    std::size_t memo_size() const
    {
        std::lock_guard lock(state_->mutex);
        return state_->memo.size();
    }

private:
    struct State {
        std::shared_ptr<const RatePolicy> policy;
        Builder builder;
        std::map<double, double> memo;
        mutable std::mutex mutex;
    };
    ServiceTransform() : state_(std::make_shared<State>()) {}
    std::shared_ptr<State> state_;
};

struct ThetaSearch {
    double theta_min = 1e-4;
    double theta_max = 5.0;
    int coarse_points = 60;
    double rel_tol = 1e-4;
};

struct ThetaProbe {
    double theta = 0.0;
    double m_service = 0.0; ///< M_S(1 - theta)
    double m_arrival = 0.0; ///< M_A(1 + theta)
    double kernel = 0.0;    ///< +inf when unstable
};

struct DelayBoundResult {
    int w = 0;
    double theta_star = 0.0;
    double bound = 1.0;  ///< raw kernel at theta_star (may exceed 1), or 1 when unstable
    bool stable = false;
    double mellin_service_at_theta = 1.0;
    double mellin_arrival_at_theta = 1.0;
    bool per_theta_policy = false;
    std::vector<ThetaProbe> trace;

    bool vacuous() const { return !stable || bound >= 1.0; }
    double reported_bound() const { return std::min(bound, 1.0); }
};

/// inf over theta of K(theta, w): log-spaced coarse scan over [theta_min, theta_max]
/// stopping at the first unstable probe, then golden-section refinement in log theta
/// between the neighbours of the best probe.
inline DelayBoundResult delay_bound(const ArrivalSpec& spec, const ServiceTransform& service, int w,
                                    const ThetaSearch& search = {})
{
    spec.validate();
    if (w < 0) throw domain_error(detail::concat("delay target must be >= 0, got ", w));
    if (!(search.theta_min > 0.0 && search.theta_max > search.theta_min && search.coarse_points >= 2 &&
          search.rel_tol > 0.0))
        throw domain_error("invalid theta search settings");

    DelayBoundResult res;
    res.w = w;
    res.per_theta_policy = service.theta_dependent();
    auto probe = [&](double theta) {
        ThetaProbe p;
        p.theta = theta;
        p.m_arrival = mellin_arrival(spec, 1.0 + theta);
        p.m_service = service.at(theta);
        p.kernel = kernel_value(p.m_arrival, p.m_service, w);
        res.trace.push_back(p);
        return p;
    };

    const double log_lo = std::log(search.theta_min);
    const double log_step = (std::log(search.theta_max) - log_lo) / (search.coarse_points - 1);
    std::vector<double> grid;
    int best = -1;
    double best_k = std::numeric_limits<double>::infinity();
    for (int i = 0; i < search.coarse_points; ++i) {
        const double theta = i + 1 == search.coarse_points ? search.theta_max : std::exp(log_lo + log_step * i);
        const auto p = probe(theta);
        grid.push_back(theta);
        if (!std::isfinite(p.kernel)) break;
        if (p.kernel < best_k) {
            best_k = p.kernel;
            best = i;
        }
    }
    if (best < 0) return res; // no stable probe

    const double a = std::log(grid[static_cast<std::size_t>(std::max(best - 1, 0))]);
    const double b = std::log(grid[std::min<std::size_t>(static_cast<std::size_t>(best + 1), grid.size() - 1)]);
    double theta_star = grid[static_cast<std::size_t>(best)];
    if (b > a) {
        auto f = [&](double lt) { return probe(std::exp(lt)).kernel; };
        const auto m = opt::golden_minimize(f, a, b, std::log1p(search.rel_tol));
        if (m.fx < best_k) {
            best_k = m.fx;
            theta_star = std::exp(m.x);
        }
    }
    res.stable = true;
    res.theta_star = theta_star;
    res.bound = best_k;
    res.mellin_service_at_theta = service.at(theta_star);
    res.mellin_arrival_at_theta = mellin_arrival(spec, 1.0 + theta_star);
    return res;
}

/// Writes the theta trace (theta, M_S, M_A, kernel) in probe order.
inline void write_theta_trace_csv(std::ostream& os, const DelayBoundResult& r, const csv::Meta& meta = {})
{
    csv::write_meta(os, meta);
    csv::write_row(os, {"theta", "M_S", "M_A", "kernel"});
    for (const auto& p : r.trace)
        csv::write_row(os, {csv::real(p.theta), csv::real(p.m_service), csv::real(p.m_arrival), csv::probability(p.kernel)});
}

} // namespace fbldelay
