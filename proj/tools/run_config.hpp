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

// Run configuration of the command-line tool: a flat JSON object whose keys are
// the fields below. SNRs are given in dB and converted once here.

#pragma once

#include "fbldelay/fbldelay.hpp"

#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbldelay::cli {

/// Bad or missing configuration; maps to exit status 2.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using json = nlohmann::ordered_json;

struct RunConfig {
    std::string scenario = "default";
    std::optional<double> snr_db;
    std::optional<int> n_slot;
    std::optional<int> n_data; ///< hold the data blocklength fixed: n_slot = n_data + m
    std::optional<int> m;
    std::optional<double> alpha_bar;
    std::vector<int> w_list{1, 2, 3, 4, 5, 6, 7, 8};
    double p_target = 1e-8;

    std::string scheme = "approxRA";
    double eps_min = 1e-3;
    double eps_floor = 0.0;
    double eps_fix = 0.003;
    double kappa = 0.9;
    std::string nocsi_objective = "goodput";
    int grid_points = 2000;
    bool per_theta = true;
    double fixed_theta = 0.01;

    double theta_min = 1e-4;
    double theta_max = 5.0;
    int theta_points = 60;
    double theta_rel_tol = 1e-4;

    // training sweeps
    int m_min = 1;
    int m_max = -1; ///< -1: n_slot - 1
    int m_dense_until = 100;
    int m_stride = 5;
    std::vector<int> m_list;          ///< explicit training lengths (max-arrival, goodput)
    std::vector<double> snr_db_list;  ///< extra SNR points (max-arrival, goodput)

    // simulation
    std::int64_t slots = 1'000'000;
    int w_max = 10;
    int streams = 1;
    std::string policy_csv;           ///< import a policy instead of building one

    std::uint64_t seed = 1;
    int threads = 0;                  ///< 0: all cores
    std::string out = ".";
    bool timestamp = false;
    bool verbose = false;

    double avg_snr() const { return db_to_linear(*snr_db); }

    SchemeOptions scheme_options() const
    {
        SchemeOptions o;
        o.scheme = *parse_scheme(scheme);
        o.eps_min = eps_min;
        o.eps_floor = eps_floor;
        o.eps_fix = eps_fix;
        o.kappa = kappa;
        o.grid_points = grid_points;
        o.per_theta = per_theta;
        o.fixed_theta = fixed_theta;
        o.nocsi_objective = nocsi_objective == "mellin" ? NoCsiObjective::mellin : NoCsiObjective::goodput;
        return o;
    }

    ThetaSearch theta_search() const { return {theta_min, theta_max, theta_points, theta_rel_tol}; }

    int slot_length(int training) const { return n_data ? *n_data + training : *n_slot; }

    LinkConfig link_at(double snr_linear, int training) const { return {snr_linear, slot_length(training), training}; }

    LinkConfig link() const { return link_at(avg_snr(), m.value_or(0)); }

    std::vector<int> training_lengths() const
    {
        if (!m_list.empty()) return m_list;
        if (n_data) return default_training_lengths(std::max(m_max, m_min) + 1, m_min, m_max, m_dense_until, m_stride);
        return default_training_lengths(*n_slot, m_min, m_max, m_dense_until, m_stride);
    }
};

namespace detail {

template <class T>
void read(const json& j, const char* key, T& dst)
{
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config key '") + key + "': " + e.what());
    }
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& dst)
{
    if (!j.contains(key) || j.at(key).is_null()) return;
    T v{};
    read(j, key, v);
    dst = v;
}

inline const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys = {
        "scenario", "snr_db", "n_slot", "n_data", "m", "alpha_bar", "w", "w_list", "p_target", "scheme", "eps_min",
        "eps_floor", "eps_fix", "kappa", "nocsi_objective", "grid_points", "per_theta", "fixed_theta",
        "theta_min", "theta_max", "theta_points", "theta_rel_tol", "m_min", "m_max", "m_dense_until", "m_stride",
        "m_list", "snr_db_list", "slots", "w_max", "streams", "policy_csv", "seed", "threads", "out", "timestamp",
        "verbose"};
    return keys;
}

} // namespace detail

/// Overlays the keys of `j` onto `cfg`. Unknown keys are errors (they are usually typos).
inline void apply_json(RunConfig& cfg, const json& j)
{
    if (!j.is_object()) throw config_error("config must be a JSON object");
    for (const auto& item : j.items())
        if (!detail::known_keys().count(item.key())) throw config_error("unknown config key '" + item.key() + "'");
    using detail::read;
    read(j, "scenario", cfg.scenario);
    read(j, "snr_db", cfg.snr_db);
    read(j, "n_slot", cfg.n_slot);
    read(j, "n_data", cfg.n_data);
    read(j, "m", cfg.m);
    read(j, "alpha_bar", cfg.alpha_bar);
    if (j.contains("w")) {
        int w = 0;
        read(j, "w", w);
        cfg.w_list = {w};
    }
    read(j, "w_list", cfg.w_list);
    read(j, "p_target", cfg.p_target);
    read(j, "scheme", cfg.scheme);
    read(j, "eps_min", cfg.eps_min);
    read(j, "eps_floor", cfg.eps_floor);
    read(j, "eps_fix", cfg.eps_fix);
    read(j, "kappa", cfg.kappa);
    read(j, "nocsi_objective", cfg.nocsi_objective);
    read(j, "grid_points", cfg.grid_points);
    read(j, "per_theta", cfg.per_theta);
    read(j, "fixed_theta", cfg.fixed_theta);
    read(j, "theta_min", cfg.theta_min);
    read(j, "theta_max", cfg.theta_max);
    read(j, "theta_points", cfg.theta_points);
    read(j, "theta_rel_tol", cfg.theta_rel_tol);
    read(j, "m_min", cfg.m_min);
    read(j, "m_max", cfg.m_max);
    read(j, "m_dense_until", cfg.m_dense_until);
    read(j, "m_stride", cfg.m_stride);
    read(j, "m_list", cfg.m_list);
    read(j, "snr_db_list", cfg.snr_db_list);
    read(j, "slots", cfg.slots);
    read(j, "w_max", cfg.w_max);
    read(j, "streams", cfg.streams);
    read(j, "policy_csv", cfg.policy_csv);
    read(j, "seed", cfg.seed);
    read(j, "threads", cfg.threads);
    read(j, "out", cfg.out);
    read(j, "timestamp", cfg.timestamp);
    read(j, "verbose", cfg.verbose);
}

inline json load_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

/// Parses a `key=value` override; the value is read as JSON, falling back to a string.
inline json parse_override(const std::string& kv)
{
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw config_error("override must look like key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    json j = json::object();
    try {
        j[key] = json::parse(value);
    } catch (const nlohmann::json::exception&) {
        j[key] = value;
    }
    return j;
}

enum class Command { bound, simulate, policy, sweep_training, max_arrival, goodput, validate };

inline std::string_view command_name(Command c)
{
    switch (c) {
    case Command::bound: return "bound";
    case Command::simulate: return "simulate";
    case Command::policy: return "policy";
    case Command::sweep_training: return "sweep-training";
    case Command::max_arrival: return "max-arrival";
    case Command::goodput: return "goodput";
    case Command::validate: return "validate";
    }
    return "?";
}

/// Checks presence of the keys a command needs and the ranges of all values.
inline void validate(const RunConfig& c, Command cmd)
{
    auto need = [&](bool present, const char* key) {
        if (!present)
            throw config_error(std::string("missing required config key '") + key + "' for command '" +
                               std::string(command_name(cmd)) + "'");
    };
    auto check = [](bool ok, const std::string& msg) {
        if (!ok) throw config_error(msg);
    };
    if (cmd != Command::validate) {
        need(c.snr_db.has_value(), "snr_db");
        need(c.n_slot.has_value() || c.n_data.has_value(), "n_slot");
    }
    if (cmd == Command::goodput && c.n_data) throw config_error("goodput needs a fixed n_slot, not n_data");
    if (c.n_data && c.n_slot) throw config_error("give either n_slot or n_data, not both");
    if (c.n_data) {
        check(*c.n_data >= 1, "n_data must be >= 1");
        check(!c.m_list.empty() || c.m_max >= 1 || c.m.has_value(),
              "with n_data, give m, m_list or m_max to bound the training lengths");
    }
    const bool needs_m = cmd == Command::bound || cmd == Command::simulate || cmd == Command::policy;
    const bool needs_alpha = cmd == Command::bound || cmd == Command::simulate || cmd == Command::sweep_training;
    if (needs_m && c.scheme != "fixedRateNoCSI" && c.policy_csv.empty()) need(c.m.has_value(), "m");
    if (needs_alpha) need(c.alpha_bar.has_value(), "alpha_bar");
    if (cmd == Command::max_arrival) need(c.m.has_value() || !c.m_list.empty() || c.n_slot.has_value() || c.n_data.has_value(), "m_list");

    const auto scheme = parse_scheme(c.scheme);
    check(scheme.has_value(), "unknown scheme '" + c.scheme + "'");
    check(c.nocsi_objective == "goodput" || c.nocsi_objective == "mellin",
          "nocsi_objective must be 'goodput' or 'mellin'");
    if (c.snr_db) check(std::isfinite(*c.snr_db), "snr_db must be finite");
    if (c.n_slot) check(*c.n_slot >= 2, "n_slot must be >= 2");
    if (c.m && c.n_slot) {
        const bool nocsi = scheme == Scheme::fixedRateNoCSI;
        check(*c.m >= (nocsi ? 0 : 1) && *c.m < *c.n_slot, "m must satisfy 1 <= m < n_slot");
    }
    if (c.m && c.n_data) check(*c.m >= 0, "m must be >= 0");
    if (c.alpha_bar) check(*c.alpha_bar >= 0.0 && std::isfinite(*c.alpha_bar), "alpha_bar must be >= 0");
    check(!c.w_list.empty(), "w_list must not be empty");
    for (int w : c.w_list) check(w >= 0, "delay targets must be >= 0");
    check(c.p_target > 0.0 && c.p_target <= 1.0, "p_target must lie in (0, 1]");
    check(c.eps_min >= 0.0 && c.eps_min < 0.5, "eps_min must lie in [0, 0.5)");
    check(c.eps_floor >= 0.0 && c.eps_floor < 1.0, "eps_floor must lie in [0, 1)");
    check(c.eps_fix > 0.0 && c.eps_fix < 0.5, "eps_fix must lie in (0, 0.5)");
    check(c.kappa >= 0.0 && c.kappa <= 1.0, "kappa must lie in [0, 1]");
    check(c.grid_points >= 2, "grid_points must be >= 2");
    check(c.fixed_theta > 0.0 && c.fixed_theta < 1.0, "fixed_theta must lie in (0, 1)");
    check(c.theta_min > 0.0 && c.theta_max > c.theta_min, "theta range must satisfy 0 < theta_min < theta_max");
    check(c.theta_points >= 2, "theta_points must be >= 2");
    check(c.theta_rel_tol > 0.0, "theta_rel_tol must be > 0");
    check(c.m_min >= 1 && c.m_dense_until >= 1 && c.m_stride >= 1, "training sweep bounds must be positive");
    for (int m : c.m_list) check(m >= 1 && (!c.n_slot || m < *c.n_slot), "m_list entries must satisfy 1 <= m < n_slot");
    for (double s : c.snr_db_list) check(std::isfinite(s), "snr_db_list entries must be finite");
    check(c.slots >= 1, "slots must be >= 1");
    check(c.w_max >= 1, "w_max must be >= 1");
    check(c.streams >= 1, "streams must be >= 1");
    check(c.threads >= 0, "threads must be >= 0");
}

/// Fully resolved configuration as JSON (defaults filled in), for output headers.
inline json to_json(const RunConfig& c)
{
    json j;
    j["scenario"] = c.scenario;
    j["snr_db"] = c.snr_db ? json(*c.snr_db) : json(nullptr);
    j["n_slot"] = c.n_slot ? json(*c.n_slot) : json(nullptr);
    j["n_data"] = c.n_data ? json(*c.n_data) : json(nullptr);
    j["m"] = c.m ? json(*c.m) : json(nullptr);
    j["alpha_bar"] = c.alpha_bar ? json(*c.alpha_bar) : json(nullptr);
    j["w_list"] = c.w_list;
    j["p_target"] = c.p_target;
    j["scheme"] = c.scheme;
    j["eps_min"] = c.eps_min;
    j["eps_floor"] = c.eps_floor;
    j["eps_fix"] = c.eps_fix;
    j["kappa"] = c.kappa;
    j["nocsi_objective"] = c.nocsi_objective;
    j["grid_points"] = c.grid_points;
    j["per_theta"] = c.per_theta;
    j["fixed_theta"] = c.fixed_theta;
    j["theta_min"] = c.theta_min;
    j["theta_max"] = c.theta_max;
    j["theta_points"] = c.theta_points;
    j["theta_rel_tol"] = c.theta_rel_tol;
    j["m_min"] = c.m_min;
    j["m_max"] = c.m_max;
    j["m_dense_until"] = c.m_dense_until;
    j["m_stride"] = c.m_stride;
    j["m_list"] = c.m_list;
    j["snr_db_list"] = c.snr_db_list;
    j["slots"] = c.slots;
    j["w_max"] = c.w_max;
    j["streams"] = c.streams;
    j["policy_csv"] = c.policy_csv;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["out"] = c.out;
    j["timestamp"] = c.timestamp;
    j["verbose"] = c.verbose;
    return j;
}

inline csv::Meta config_meta(const RunConfig& c, Command cmd)
{
    csv::Meta meta;
    meta.emplace_back("command", std::string(command_name(cmd)));
    const json j = to_json(c);
    for (const auto& item : j.items())
        meta.emplace_back(item.key(), item.value().is_string() ? item.value().get<std::string>() : item.value().dump());
    return meta;
}

} // namespace fbldelay::cli
