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
 * @file sim.hpp
 * @brief Monte Carlo simulation of the slotted queue.
 *
 * Slot i: draw the channel estimate, look up (r, eps) at the greatest gridpoint
 * <= gamma_hat, enqueue alpha_bar n_slot bits, and with probability 1 - eps
 * serve up to n r bits first-in first-out. Bits arriving in slot i may leave in
 * slot i. The batch of slot i that completes in slot j has delay j - i, which is
 * W(i+1) in the cumulative-process definition. Batches of the last w_max slots are
 * censored; batches still queued at the end count as violations for every w.
 */

#pragma once

#include "fbldelay/channel.hpp"
#include "fbldelay/csv.hpp"
#include "fbldelay/errors.hpp"
#include "fbldelay/parallel.hpp"
#include "fbldelay/ratepolicy.hpp"
#include "fbldelay/rng.hpp"
#include "fbldelay/snc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <ostream>
#include <vector>

namespace fbldelay {

struct SimConfig {
    std::int64_t slots = 1'000'000;
    std::uint64_t seed = 1;
    int w_max = 10;
    ArrivalSpec spec;
    RatePolicy policy;
    EstimationModel model;
    std::size_t max_queued_batches = std::size_t{1} << 24; ///< memory cap; exceeding it stops the run

    void validate() const
    {
        if (slots < 1) throw domain_error(detail::concat("slots must be >= 1, got ", slots));
        if (w_max < 1) throw domain_error(detail::concat("w_max must be >= 1, got ", w_max));
        spec.validate();
        if (policy.size() == 0 || policy.rate.size() != policy.size() || policy.eps_true.size() != policy.size())
            throw domain_error("simulation policy is empty or inconsistent");
    }
};

struct SimOutcome {
    std::vector<std::int64_t> violations; ///< index w = 0..w_max: batches with delay > w
    std::int64_t measured_slots = 0;
    std::vector<double> p_v_hat;
    double mean_queue_bits = 0.0; ///< time average of the backlog after service
    double max_queue_bits = 0.0;
    double arrived_bits = 0.0;
    double departed_bits = 0.0;
    double final_backlog_bits = 0.0;
    std::int64_t simulated_slots = 0;
    std::int64_t failed_slots = 0; ///< slots whose transmission was lost (eps draw)
    std::uint64_t seed = 0;
    int streams = 1;
    bool unstable_run = false;

    /// Binomial standard error of p_v_hat[w].
    double std_error(int w) const
    {
        if (measured_slots <= 0) return 0.0;
        const double p = p_v_hat[static_cast<std::size_t>(w)];
        return std::sqrt(p * (1.0 - p) / static_cast<double>(measured_slots));
    }
};

namespace detail {

struct Batch {
    double remaining;
    std::int64_t slot;
};

inline void finish_outcome(SimOutcome& out)
{
    out.p_v_hat.assign(out.violations.size(), 0.0);
    if (out.measured_slots > 0)
        for (std::size_t w = 0; w < out.violations.size(); ++w)
            out.p_v_hat[w] = static_cast<double>(out.violations[w]) / static_cast<double>(out.measured_slots);
}

// One independent queue of `slots` slots driven by `rng`; counts are not normalized.
inline SimOutcome simulate_stream(const SimConfig& cfg, std::int64_t slots, Xoshiro256pp rng)
{
    SimOutcome out;
    out.violations.assign(static_cast<std::size_t>(cfg.w_max) + 1, 0);
    out.seed = cfg.seed;
    const std::int64_t measured_end = std::max<std::int64_t>(0, slots - cfg.w_max); // batches with slot < this count
    out.measured_slots = measured_end;
    const double batch_bits = cfg.spec.bits_per_slot();
    const double n = cfg.policy.blocklength;
    const double eps_done = 1e-9 * std::max(1.0, batch_bits);

    std::vector<std::int64_t> delay_hist(static_cast<std::size_t>(cfg.w_max) + 1, 0);
    std::int64_t long_delays = 0; // delay > w_max
    auto record = [&](std::int64_t arrival, std::int64_t delay) {
        if (arrival >= measured_end) return;
        if (delay > cfg.w_max) ++long_delays;
        else ++delay_hist[static_cast<std::size_t>(delay)];
    };

    std::deque<Batch> queue;
    double backlog = 0.0;
    double backlog_sum = 0.0;
    std::int64_t i = 0;
    for (; i < slots; ++i) {
        const auto sample = sample_slot(cfg.model, rng);
        const auto idx = cfg.policy.grid.locate(sample.gamma_hat);
        const double r = idx ? cfg.policy.rate[*idx] : 0.0;
        const double eps = idx ? cfg.policy.eps_true[*idx] : 0.0;

        if (batch_bits > 0.0) {
            queue.push_back({batch_bits, i});
            backlog += batch_bits;
            out.arrived_bits += batch_bits;
        } else {
            record(i, 0);
        }

        const bool success = rng.uniform_open() >= eps;
        if (!success) ++out.failed_slots;
        double budget = success ? n * r : 0.0;
        while (budget > 0.0 && !queue.empty()) {
            Batch& head = queue.front();
            if (budget + eps_done >= head.remaining) {
                budget -= head.remaining;
                backlog -= head.remaining;
                out.departed_bits += head.remaining;
                record(head.slot, i - head.slot);
                queue.pop_front();
            } else {
                head.remaining -= budget;
                backlog -= budget;
                out.departed_bits += budget;
                budget = 0.0;
            }
        }
        if (queue.empty()) backlog = 0.0; // shed rounding drift
        backlog_sum += backlog;
        out.max_queue_bits = std::max(out.max_queue_bits, backlog);
        if (queue.size() > cfg.max_queued_batches) {
            out.unstable_run = true;
            ++i;
            break;
        }
    }
    out.simulated_slots = i;
    // Unfinished measured batches exceed every tracked delay.
    for (const auto& b : queue)
        if (b.slot < measured_end) ++long_delays;
    if (out.unstable_run) {
        // Slots never simulated are not measured.
        out.measured_slots = std::min(measured_end, i);
    }
    // violations[w] = #(delay > w)
    std::int64_t above = long_delays;
    for (int w = cfg.w_max; w >= 0; --w) {
        out.violations[static_cast<std::size_t>(w)] = above;
        above += delay_hist[static_cast<std::size_t>(w)];
    }
    out.mean_queue_bits = i > 0 ? backlog_sum / static_cast<double>(i) : 0.0;
    out.final_backlog_bits = std::max(0.0, backlog);
    return out;
}

} // namespace detail

/// Single-stream simulation; deterministic given cfg (including seed).
inline SimOutcome run(const SimConfig& cfg)
{
    cfg.validate();
    auto out = detail::simulate_stream(cfg, cfg.slots, Xoshiro256pp::for_stream(cfg.seed, 0));
    detail::finish_outcome(out);
    return out;
}

/// Splits the slots over `streams` independent queues. Stream k uses the generator
/// seeded with cfg.seed advanced by k jumps and the first slots % streams streams get
/// one extra slot. Counts are summed. streams = 1 reproduces run() exactly.
inline SimOutcome run_parallel(const SimConfig& cfg, int streams, int threads = 0)
{
    cfg.validate();
    if (streams < 1) throw domain_error(detail::concat("streams must be >= 1, got ", streams));
    if (streams == 1) return run(cfg);
    std::vector<SimOutcome> parts(static_cast<std::size_t>(streams));
    const std::int64_t base = cfg.slots / streams;
    const std::int64_t extra = cfg.slots % streams;
    parallel_for(parts.size(), threads, [&](std::size_t k) {
        const std::int64_t slots = base + (static_cast<std::int64_t>(k) < extra ? 1 : 0);
        if (slots == 0) {
            parts[k].violations.assign(static_cast<std::size_t>(cfg.w_max) + 1, 0);
            return;
        }
        parts[k] = detail::simulate_stream(cfg, slots, Xoshiro256pp::for_stream(cfg.seed, k));
    });
    SimOutcome out;
    out.violations.assign(static_cast<std::size_t>(cfg.w_max) + 1, 0);
    out.seed = cfg.seed;
    out.streams = streams;
    double weighted_queue = 0.0;
    for (const auto& p : parts) {
        for (std::size_t w = 0; w < out.violations.size(); ++w) out.violations[w] += p.violations[w];
        out.measured_slots += p.measured_slots;
        out.simulated_slots += p.simulated_slots;
        out.failed_slots += p.failed_slots;
        out.arrived_bits += p.arrived_bits;
        out.departed_bits += p.departed_bits;
        out.final_backlog_bits += p.final_backlog_bits;
        out.max_queue_bits = std::max(out.max_queue_bits, p.max_queue_bits);
        out.unstable_run = out.unstable_run || p.unstable_run;
        weighted_queue += p.mean_queue_bits * static_cast<double>(p.simulated_slots);
    }
    out.mean_queue_bits = out.simulated_slots > 0 ? weighted_queue / static_cast<double>(out.simulated_slots) : 0.0;
    detail::finish_outcome(out);
    return out;
}

/// CSV with columns w, violations, p_v_hat.
inline void write_sim_csv(std::ostream& os, const SimOutcome& out, const csv::Meta& meta = {})
{
    csv::write_meta(os, meta);
    csv::write_row(os, {"w", "violations", "p_v_hat"});
    for (std::size_t w = 0; w < out.violations.size(); ++w)
        csv::write_row(os, {csv::integer(static_cast<long long>(w)), csv::integer(out.violations[w]),
                            csv::probability(out.p_v_hat[w])});
}

} // namespace fbldelay
