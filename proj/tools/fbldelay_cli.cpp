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

// fbldelay command-line tool. Exit status: 0 ok, 2 configuration error, 3 numeric failure.

#include "run_config.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fbldelay;
using namespace fbldelay::cli;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numeric = 3;

// Flags shared by all subcommands; unset flags leave the file values alone.
struct Flags {
    std::string config;
    std::vector<std::string> set;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<double> snr_db;
    std::optional<int> n_slot;
    std::optional<int> n_data;
    std::optional<int> m;
    std::optional<double> alpha;
    std::optional<int> w;
    std::optional<std::string> scheme;
    std::optional<std::int64_t> slots;
    std::optional<int> streams;
    std::optional<double> p_target;
    std::optional<std::string> policy_csv;
    bool verbose = false;
    bool timestamp = false;
};

void add_flags(CLI::App* app, Flags& f)
{
    app->add_option("--config", f.config, "JSON configuration file");
    app->add_option("--set", f.set, "override a config key, key=value (repeatable)");
    app->add_option("--out", f.out, "output directory");
    app->add_option("--seed", f.seed, "64-bit seed");
    app->add_option("--threads", f.threads, "worker threads (0: all cores)");
    app->add_option("--snr-db", f.snr_db, "average SNR in dB");
    app->add_option("--n-slot", f.n_slot, "symbols per slot");
    app->add_option("--n-data", f.n_data, "data symbols per slot (slot length follows m)");
    app->add_option("--m", f.m, "training symbols");
    app->add_option("--alpha", f.alpha, "mean arrival rate in bits per channel use");
    app->add_option("--w", f.w, "single delay target in slots");
    app->add_option("--scheme", f.scheme, "rate-adaptation scheme");
    app->add_option("--slots", f.slots, "simulated slots");
    app->add_option("--streams", f.streams, "independent simulation streams");
    app->add_option("--p-target", f.p_target, "target violation probability");
    app->add_option("--policy-csv", f.policy_csv, "policy table to simulate instead of building one");
    app->add_flag("--verbose", f.verbose, "write per-theta traces");
    app->add_flag("--timestamp", f.timestamp, "add a timestamp line to outputs");
}

RunConfig resolve(const Flags& f, Command cmd)
{
    RunConfig c;
    if (!f.config.empty()) apply_json(c, load_json_file(f.config));
    if (f.out) c.out = *f.out;
    if (f.seed) c.seed = *f.seed;
    if (f.threads) c.threads = *f.threads;
    if (f.snr_db) c.snr_db = *f.snr_db;
    if (f.n_slot) c.n_slot = *f.n_slot;
    if (f.n_data) c.n_data = *f.n_data;
    if (f.m) c.m = *f.m;
    if (f.alpha) c.alpha_bar = *f.alpha;
    if (f.w) c.w_list = {*f.w};
    if (f.scheme) c.scheme = *f.scheme;
    if (f.slots) c.slots = *f.slots;
    if (f.streams) c.streams = *f.streams;
    if (f.p_target) c.p_target = *f.p_target;
    if (f.policy_csv) c.policy_csv = *f.policy_csv;
    if (f.verbose) c.verbose = true;
    if (f.timestamp) c.timestamp = true;
    for (const auto& kv : f.set) apply_json(c, parse_override(kv));
    validate(c, cmd);
    return c;
}

int thread_count(const RunConfig& c) { return c.threads > 0 ? c.threads : default_threads(); }

std::string now_utc()
{
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

csv::Meta header(const RunConfig& c, Command cmd)
{
    auto meta = config_meta(c, cmd);
    if (c.timestamp) meta.emplace_back("timestamp", now_utc());
    return meta;
}

std::ofstream open_out(const RunConfig& c, const std::string& name)
{
    fs::create_directories(c.out);
    const auto path = fs::path(c.out) / name;
    std::ofstream os(path);
    if (!os) throw config_error("cannot write '" + path.string() + "'");
    return os;
}

json header_json(const RunConfig& c, Command cmd)
{
    json j;
    j["command"] = std::string(command_name(cmd));
    j["config"] = to_json(c);
    if (c.timestamp) j["timestamp"] = now_utc();
    return j;
}

void write_json(const RunConfig& c, const std::string& name, const json& j)
{
    auto os = open_out(c, name);
    os << j.dump(2) << '\n';
}

// Marks policies that rely on the normal approximation far in the tail.
void flag_small_eps(RatePolicy& p)
{
    const auto n = std::count_if(p.eps_true.begin(), p.eps_true.end(), [](double e) { return e > 0.0 && e < 1e-4; });
    if (n > 0)
        p.notes.push_back(fbldelay::detail::concat("eps_true below 1e-4 at ", n,
                                                   " gridpoints; the normal approximation is less accurate there"));
}

RatePolicy load_policy(const RunConfig& c)
{
    std::ifstream in(c.policy_csv);
    if (!in) throw config_error("cannot open policy csv '" + c.policy_csv + "'");
    const int m = c.m.value_or(0);
    const double mean = m > 0 ? build_estimation_model(c.link()).estimated_snr_mean() : 0.0;
    return read_policy_csv(in, mean);
}

int cmd_bound(const RunConfig& c)
{
    const auto link = c.link();
    const ArrivalSpec spec{*c.alpha_bar, link.n_slot};
    const auto service = make_service(link, c.scheme_options(), thread_count(c));
    auto os = open_out(c, "bound.csv");
    auto meta = header(c, Command::bound);
    csv::write_meta(os, meta);
    csv::write_row(os, {"w", "theta_star", "bound", "stable", "vacuous", "M_S", "M_A", "per_theta_policy"});
    json results = json::array();
    for (int w : c.w_list) {
        const auto r = delay_bound(spec, service, w, c.theta_search());
        csv::write_row(os, {csv::integer(w), csv::real(r.theta_star), csv::probability(r.reported_bound()),
                            csv::integer(r.stable), csv::integer(r.vacuous()), csv::real(r.mellin_service_at_theta),
                            csv::real(r.mellin_arrival_at_theta), csv::integer(r.per_theta_policy)});
        results.push_back({{"w", w},
                           {"theta_star", r.theta_star},
                           {"bound", r.reported_bound()},
                           {"raw_kernel", r.bound},
                           {"stable", r.stable},
                           {"vacuous", r.vacuous()}});
        if (!r.stable) std::cerr << "w=" << w << ": no stable theta, bound set to 1\n";
        if (c.verbose) {
            auto tr = open_out(c, "theta_trace_w" + std::to_string(w) + ".csv");
            write_theta_trace_csv(tr, r, meta);
        }
    }
    auto j = header_json(c, Command::bound);
    j["results"] = results;
    write_json(c, "bound.json", j);
    return 0;
}

int cmd_policy(const RunConfig& c)
{
    const auto opt = c.scheme_options();
    const double s = scheme_depends_on_theta(opt) ? 1.0 - c.fixed_theta : 1.0;
    auto p = build_policy(c.link(), opt, s, thread_count(c));
    flag_small_eps(p);
    auto os = open_out(c, "policy.csv");
    write_policy_csv(os, p, header(c, Command::policy));
    return 0;
}

int cmd_simulate(const RunConfig& c)
{
    const auto link = c.link();
    const ArrivalSpec spec{*c.alpha_bar, link.n_slot};
    const auto opt = c.scheme_options();
    const int threads = thread_count(c);
    RatePolicy policy;
    double theta_policy = std::numeric_limits<double>::quiet_NaN();
    if (!c.policy_csv.empty()) {
        policy = load_policy(c);
    } else if (scheme_depends_on_theta(opt)) {
        // The simulated policy is the one optimal at the bound's theta for the first w.
        theta_policy = c.fixed_theta;
        if (opt.per_theta) {
            const auto r = delay_bound(spec, make_service(link, opt, threads), c.w_list.front(), c.theta_search());
            if (r.stable) theta_policy = r.theta_star;
        }
        policy = build_policy(link, opt, 1.0 - theta_policy, threads);
    } else {
        policy = build_policy(link, opt, 1.0, threads);
    }
    flag_small_eps(policy);

    SimConfig sc;
    sc.slots = c.slots;
    sc.seed = c.seed;
    sc.w_max = c.w_max;
    sc.spec = spec;
    sc.policy = policy;
    sc.model = build_estimation_model(link);
    const auto out = run_parallel(sc, c.streams, threads);

    // Bound of the simulated (fixed) policy for comparison.
    const auto fixed = ServiceTransform::fixed(policy);
    auto meta = header(c, Command::simulate);
    {
        auto os = open_out(c, "sim.csv");
        write_sim_csv(os, out, meta);
    }
    {
        auto os = open_out(c, "policy.csv");
        write_policy_csv(os, policy, meta);
    }
    auto j = header_json(c, Command::simulate);
    j["seed"] = out.seed;
    j["streams"] = out.streams;
    j["simulated_slots"] = out.simulated_slots;
    j["measured_slots"] = out.measured_slots;
    j["failed_slots"] = out.failed_slots;
    j["unstable_run"] = out.unstable_run;
    j["mean_queue_bits"] = out.mean_queue_bits;
    j["max_queue_bits"] = out.max_queue_bits;
    j["arrived_bits"] = out.arrived_bits;
    j["departed_bits"] = out.departed_bits;
    j["final_backlog_bits"] = out.final_backlog_bits;
    j["policy_theta"] = std::isnan(theta_policy) ? json(nullptr) : json(theta_policy);
    json rows = json::array();
    for (int w = 0; w <= c.w_max; ++w) {
        const auto b = delay_bound(spec, fixed, w, c.theta_search());
        rows.push_back({{"w", w},
                        {"violations", out.violations[static_cast<std::size_t>(w)]},
                        {"p_v_hat", out.p_v_hat[static_cast<std::size_t>(w)]},
                        {"std_error", out.std_error(w)},
                        {"bound", b.reported_bound()}});
    }
    j["per_w"] = rows;
    write_json(c, "sim_summary.json", j);
    if (out.unstable_run) std::cerr << "queue exceeded its memory cap; run stopped early\n";
    return 0;
}

int cmd_sweep_training(const RunConfig& c)
{
    const auto ms = c.training_lengths();
    std::vector<LinkConfig> links;
    for (int m : ms) links.push_back(c.link_at(c.avg_snr(), m));
    auto os = open_out(c, "training.csv");
    auto meta = header(c, Command::sweep_training);
    std::vector<std::pair<int, TrainingSweep>> sweeps;
    for (int w : c.w_list)
        sweeps.emplace_back(w, optimize_training(links, *c.alpha_bar, w, c.scheme_options(), c.theta_search(),
                                                 thread_count(c)));
    for (const auto& [w, sw] : sweeps)
        meta.emplace_back("m_star_w" + std::to_string(w), csv::integer(sw.m_star));
    csv::write_meta(os, meta);
    csv::write_row(os, {"w", "m", "n_slot", "theta_star", "bound", "stable"});
    for (const auto& [w, sw] : sweeps)
        for (std::size_t i = 0; i < sw.rows.size(); ++i) {
            const auto& r = sw.rows[i].result;
            csv::write_row(os, {csv::integer(w), csv::integer(sw.rows[i].m), csv::integer(links[i].n_slot),
                                csv::real(r.theta_star), csv::probability(r.reported_bound()), csv::integer(r.stable)});
        }
    for (const auto& [w, sw] : sweeps)
        std::cout << "w=" << w << " m*=" << sw.m_star << " bound=" << csv::probability(sw.best_bound) << '\n';
    return 0;
}

std::vector<double> snr_axis_db(const RunConfig& c)
{
    std::vector<double> v{*c.snr_db};
    for (double s : c.snr_db_list)
        if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    return v;
}

int cmd_max_arrival(const RunConfig& c)
{
    std::vector<int> ms = c.m_list;
    if (ms.empty()) ms = c.m ? std::vector<int>{*c.m} : c.training_lengths();
    const auto snrs_db = snr_axis_db(c);
    std::vector<double> snrs;
    for (double d : snrs_db) snrs.push_back(db_to_linear(d));
    auto link_for = [&c](double snr, int m) { return c.link_at(snr, m); };
    const auto rows = optimal_training_vs_delay(snrs, link_for, c.p_target, c.w_list, c.scheme_options(), ms,
                                                c.theta_search(), thread_count(c));
    const auto meta = header(c, Command::max_arrival);
    {
        auto os = open_out(c, "max_arrival.csv");
        csv::write_meta(os, meta);
        csv::write_row(os, {"snr_db", "w", "m", "n_slot", "alpha_star", "bits_per_slot"});
        for (std::size_t k = 0; k < rows.size(); ++k)
            for (const auto& a : rows[k].per_m) {
                const int n_slot = c.slot_length(a.m);
                csv::write_row(os, {csv::real(snrs_db[k / c.w_list.size()]), csv::integer(rows[k].w), csv::integer(a.m),
                                    csv::integer(n_slot), csv::real(a.alpha_star), csv::real(a.alpha_star * n_slot)});
            }
    }
    {
        auto os = open_out(c, "optimal_training.csv");
        csv::write_meta(os, meta);
        csv::write_row(os, {"snr_db", "w", "m_star", "alpha_star"});
        for (std::size_t k = 0; k < rows.size(); ++k)
            csv::write_row(os, {csv::real(snrs_db[k / c.w_list.size()]), csv::integer(rows[k].w),
                                csv::integer(rows[k].m_star), csv::real(rows[k].alpha_star)});
    }
    return 0;
}

int cmd_goodput(const RunConfig& c)
{
    std::vector<int> ms = c.m_list;
    if (ms.empty()) ms = c.m ? std::vector<int>{*c.m} : std::vector<int>{5, 50};
    std::erase_if(ms, [&](int m) { return m >= *c.n_slot; });
    auto os = open_out(c, "goodput.csv");
    csv::write_meta(os, header(c, Command::goodput));
    csv::write_row(os, {"snr_db", "scheme", "m", "goodput"});
    for (double d : snr_axis_db(c))
        for (const auto& r : goodput_comparison(db_to_linear(d), *c.n_slot, ms, c.grid_points, thread_count(c)))
            csv::write_row(os, {csv::real(d), r.label, csv::integer(r.m), csv::real(r.goodput)});
    return 0;
}

int cmd_validate(const RunConfig& c)
{
    const auto checks = validation::run_all();
    auto os = open_out(c, "validate.csv");
    csv::write_meta(os, header(c, Command::validate));
    csv::write_row(os, {"check", "passed", "cases", "violations", "detail"});
    bool ok = true;
    for (const auto& ch : checks) {
        ok = ok && ch.passed;
        std::cout << (ch.passed ? "PASS " : "FAIL ") << ch.name << " (" << ch.cases << " cases, " << ch.violations
                  << " violations)" << (ch.detail.empty() ? "" : ": " + ch.detail) << '\n';
        csv::write_row(os, {ch.name, csv::integer(ch.passed), csv::integer(ch.cases), csv::integer(ch.violations),
                            ch.detail});
    }
    return ok ? 0 : exit_numeric;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Delay-violation bounds for rate-adaptive links with imperfect CSI"};
    app.require_subcommand(1);
    Flags flags;
    struct Sub {
        Command cmd;
        const char* help;
        int (*run)(const RunConfig&);
        CLI::App* app = nullptr;
    };
    std::vector<Sub> subs = {
        {Command::bound, "delay-violation bound per delay target", cmd_bound},
        {Command::simulate, "Monte Carlo simulation of the queue", cmd_simulate},
        {Command::policy, "build and export a rate policy", cmd_policy},
        {Command::sweep_training, "delay bound over training lengths", cmd_sweep_training},
        {Command::max_arrival, "largest arrival rate meeting the QoS target", cmd_max_arrival},
        {Command::goodput, "expected goodput of the CSI regimes", cmd_goodput},
        {Command::validate, "self-checks of the error model", cmd_validate},
    };
    for (auto& s : subs) {
        s.app = app.add_subcommand(std::string(command_name(s.cmd)), s.help);
        add_flags(s.app, flags);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }
    for (const auto& s : subs) {
        if (!s.app->parsed()) continue;
        RunConfig cfg;
        try {
            cfg = resolve(flags, s.cmd);
        } catch (const config_error& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return exit_config;
        }
        try {
            return s.run(cfg);
        } catch (const config_error& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return exit_config;
        } catch (const fbldelay::domain_error& e) {
            std::cerr << "invalid input: " << e.what() << '\n';
            return exit_config;
        } catch (const fbldelay::precondition_error& e) {
            std::cerr << "invalid input: " << e.what() << '\n';
            return exit_config;
        } catch (const std::exception& e) {
            std::cerr << "numeric failure: " << e.what() << '\n';
            return exit_numeric;
        }
    }
    return exit_config;
}
