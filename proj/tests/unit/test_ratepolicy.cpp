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

#include "catch_amalgamated.hpp"

#include "fbldelay/ratepolicy.hpp"
#include "fbldelay/rng.hpp"

#include <cmath>
#include <sstream>
#include <vector>

using namespace fbldelay;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double snr15 = 31.6228;
constexpr int n200 = 200;
const EstimationModel ref_model = build_estimation_model({snr15, 225, 25});

SnrGrid db_grid(double lo_db, double hi_db, int count)
{
    std::vector<double> pts;
    for (int k = 0; k < count; ++k) pts.push_back(db_to_linear(lo_db + (hi_db - lo_db) * k / (count - 1)));
    return grid_from_points(pts, ref_model.estimated_snr_mean());
}

double true_objective(double gh, double r, double s)
{
    const double e = eps_normal_approx(ref_model, gh, n200, r);
    return (1.0 - e) * service_factor(n200, r, s) + e;
}

} // namespace

TEST_CASE("SNR grid", "[ratepolicy]")
{
    const auto g = make_exponential_grid(ref_model.estimated_snr_mean(), 2000);
    REQUIRE(g.size() == 2000);
    double total = g.head_mass;
    for (std::size_t i = 0; i < g.size(); ++i) total += g.mass(i);
    CHECK_THAT(total, WithinAbs(1.0, 1e-12));
    CHECK_THAT(g.head_mass, WithinAbs(1e-12, 1e-15));
    CHECK_THAT(g.tail_mass, WithinAbs(1e-12, 1e-15));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g.points[i] > g.points[i - 1]);
    CHECK_FALSE(g.locate(0.5 * g.points[0]).has_value());
    CHECK(*g.locate(g.points[10]) == 10);
    CHECK(*g.locate(0.5 * (g.points[10] + g.points[11])) == 10);
    CHECK(*g.locate(1e9) == g.size() - 1);
}

TEST_CASE("per-point objective g", "[ratepolicy]")
{
    for (double e : {0.01, 0.1, 0.3}) CHECK(g_objective(ref_model, snr15, n200, 1.0, e) == 1.0);
    const double c = std::log2(1.0 + snr15);
    const double near_half = 0.5 - 1e-12;
    CHECK_THAT(g_objective(ref_model, snr15, n200, 0.99, near_half),
               WithinAbs(0.5 * std::exp(n200 * c * (0.99 - 1.0)) + 0.5, 1e-9));

    // Second central differences at random admissible points.
    Xoshiro256pp rng(2024);
    int tested = 0;
    while (tested < 100) {
        const double gh = db_to_linear(-5.0 + 30.0 * rng.uniform_open());
        const double s = 1.0 - 0.01 * rng.uniform_open();
        const double lo = admissible_eps_floor(ref_model, gh, n200);
        if (!(lo < 0.4)) continue;
        const double e = lo + (0.5 - lo) * (0.05 + 0.9 * rng.uniform_open());
        const double h = 1e-2 * std::min(e - lo, 0.5 - e);
        const double d2 = g_objective(ref_model, gh, n200, s, e + h) - 2.0 * g_objective(ref_model, gh, n200, s, e) +
                          g_objective(ref_model, gh, n200, s, e - h);
        INFO("gh=" << gh << " e=" << e << " s=" << s);
        CHECK(d2 > 0.0);
        ++tested;
    }
}

TEST_CASE("optimize_gridpoint", "[ratepolicy]")
{
    const auto none = optimize_gridpoint(ref_model, 0.0, n200, 0.99, 1e-3);
    CHECK_FALSE(none.feasible);
    CHECK(none.rate == 0.0);

    for (double db : {-5.0, 0.0, 5.0, 12.0, 20.0}) {
        const double gh = db_to_linear(db);
        const auto c = optimize_gridpoint(ref_model, gh, n200, 0.99, 0.0);
        REQUIRE(c.feasible);
        const double lo = admissible_eps_floor(ref_model, gh, n200);
        auto g = [&](double e) { return g_objective(ref_model, gh, n200, 0.99, e); };
        const double slack = 1e-14 * c.objective;
        INFO("dB=" << db << " eps'=" << c.eps_target);
        CHECK(c.objective <= g(lo + 1e-9 * (0.5 - lo)) + slack);
        CHECK(c.objective <= g(0.5 - 1e-12) + slack);
        for (double d : {1e-9, 1e-6, 1e-4}) {
            if (c.eps_target - d > lo) CHECK(c.objective <= g(c.eps_target - d) + slack);
            if (c.eps_target + d < 0.5) CHECK(c.objective <= g(c.eps_target + d) + slack);
        }
    }
}

TEST_CASE("approxRA policy", "[ratepolicy]")
{
    SECTION("rates follow the delay-optimal shape at theta = 0.99")
    {
        const auto grid = db_grid(0.0, 25.0, 101);
        const auto p = build_policy_approx(ref_model, n200, 0.99, grid, 1e-3);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gh = grid.points[i];
            if (i > 0) CHECK(p.rate[i] > p.rate[i - 1]);
            if (gh >= db_to_linear(10.0)) {
                const double frac = p.rate[i] / capacity(gh);
                INFO("gamma_hat=" << gh << " fraction=" << frac);
                CHECK(frac >= 0.80);
                CHECK(frac <= 0.97);
            }
        }
    }
    SECTION("eps_true never exceeds eps_target")
    {
        const auto grid = make_exponential_grid(ref_model.estimated_snr_mean(), 2000);
        const auto p = build_policy_approx(ref_model, n200, 0.99, grid, 1e-3);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(p.eps_true[i] <= p.eps_target[i] + 1e-12);
            CHECK(p.rate[i] <= capacity(grid.points[i]));
            CHECK(p.rate[i] >= 0.0);
        }
        CHECK_NOTHROW(check_tail_monotone(p));
    }
    SECTION("Mellin argument 1 picks interval midpoints")
    {
        const auto grid = db_grid(0.0, 20.0, 5);
        const auto p = build_policy_approx(ref_model, n200, 1.0, grid, 1e-3);
        REQUIRE_FALSE(p.notes.empty());
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double lo = std::max(admissible_eps_floor(ref_model, grid.points[i], n200), 1e-3);
            CHECK_THAT(p.eps_target[i], WithinAbs(0.5 * (lo + 0.5), 1e-15));
        }
    }
    SECTION("long training and long codewords approach capacity")
    {
        const auto model = build_estimation_model({snr15, 10'100'000, 100'000});
        for (double gh : {10.0, 100.0, 1000.0}) {
            const auto c = optimize_gridpoint(model, gh, 10'000'000, 0.99, 1e-3);
            CHECK_THAT(c.rate, WithinRel(capacity(gh), 0.01));
        }
    }
}

TEST_CASE("perfectRA policy", "[ratepolicy]")
{
    const auto grid = db_grid(0.0, 25.0, 26);
    const auto perfect = build_policy_perfect(ref_model, n200, 0.99, grid);
    const auto approx = build_policy_approx(ref_model, n200, 0.99, grid, 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double gh = grid.points[i];
        const double r = perfect.rate[i];
        INFO("gamma_hat=" << gh);
        CHECK(r >= approx.rate[i]);
        CHECK(r <= capacity(gh));
        const double f = true_objective(gh, r, 0.99);
        CHECK(f <= true_objective(gh, r + 1e-3, 0.99) + 1e-15);
        if (r > 1e-3) CHECK(f <= true_objective(gh, r - 1e-3, 0.99) + 1e-15);
    }
    const auto flat = build_policy_perfect(ref_model, n200, 1.0, db_grid(0.0, 20.0, 3));
    CHECK_FALSE(flat.notes.empty());
    CHECK(std::isfinite(flat.rate[1]));
}

TEST_CASE("fixed-eps policy", "[ratepolicy]")
{
    const auto grid = db_grid(-5.0, 25.0, 31);
    const auto p = build_policy_fixed_eps(ref_model, n200, grid, 0.003);
    const auto approx = build_policy_approx(ref_model, n200, 0.99, grid, 1e-3);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double gh = grid.points[i];
        INFO("gamma_hat=" << gh);
        CHECK(p.rate[i] <= capacity(gh));
        if (p.rate[i] > 0.0 && p.rate[i] < capacity(gh)) CHECK_THAT(p.eps_true[i], WithinAbs(0.003, 1e-6));
        CHECK(p.eps_true[i] <= 0.003 + 1e-12);
        if (gh <= db_to_linear(5.0)) CHECK(p.rate[i] < approx.rate[i]);
    }

    // Just below eps = 1/2 the rate sits near the capacity of the conditional median SNR.
    const double gh = 10.0;
    double lo = 0.0, hi = 100.0;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (conditional_snr_cdf(ref_model, gh, mid) < 0.5 ? lo : hi) = mid;
    }
    const auto half = build_policy_fixed_eps(ref_model, n200, grid_from_points({gh}, ref_model.estimated_snr_mean()), 0.5 - 1e-9);
    CHECK_THAT(half.rate[0], WithinRel(capacity(lo), 0.02));
    CHECK(half.eps_true[0] <= 0.5);
}

TEST_CASE("max-goodput policy", "[ratepolicy]")
{
    const auto grid = db_grid(-5.0, 25.0, 16);
    const auto p = build_policy_max_goodput(ref_model, n200, grid);
    const auto approx = build_policy_approx(ref_model, n200, 0.99, grid, 1e-3);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double gh = grid.points[i];
        auto goodput = [&](double r) { return r * (1.0 - eps_normal_approx(ref_model, gh, n200, r)); };
        const double r = p.rate[i];
        INFO("gamma_hat=" << gh);
        CHECK(r <= capacity(gh));
        CHECK(goodput(r) >= goodput(r + 1e-3) - 1e-12);
        CHECK(goodput(r) >= goodput(r - 1e-3) - 1e-12);
        CHECK(r > approx.rate[i]);
    }

    // Long codewords: maximizer of r (1 - outage).
    const int n_long = 10'000'000;
    const double gh = 10.0;
    const auto q = build_policy_max_goodput(ref_model, n_long, grid_from_points({gh}, ref_model.estimated_snr_mean()));
    double best = 0.0, r_best = 0.0;
    for (int k = 1; k <= 20000; ++k) {
        const double r = capacity(gh) * k / 20000.0;
        const double v = r * (1.0 - outage_exact(ref_model, gh, r));
        if (v > best) {
            best = v;
            r_best = r;
        }
    }
    CHECK_THAT(q.rate[0], WithinAbs(r_best, 2e-3));
}

TEST_CASE("fraction-of-capacity policy", "[ratepolicy]")
{
    const auto grid = db_grid(0.0, 25.0, 11);
    const auto zero = build_policy_fraction(ref_model, n200, grid, 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(zero.rate[i] == 0.0);
        CHECK(zero.eps_true[i] == 0.0);
    }
    const auto full = build_policy_fraction(ref_model, n200, grid, 1.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(full.rate[i] == capacity(grid.points[i]));
        CHECK(full.eps_true[i] == eps_normal_approx(ref_model, grid.points[i], n200, full.rate[i]));
    }
    for (double kappa : {0.75, 0.9, 0.95})
        for (int m : {10, 25}) {
            const auto model = build_estimation_model({snr15, 200 + m, m});
            const auto p = build_policy_fraction(model, n200, grid, kappa);
            for (std::size_t i = 0; i < grid.size(); ++i) CHECK(p.eps_target[i] >= p.eps_true[i]);
        }
    CHECK_THROWS_AS(build_policy_fraction(ref_model, n200, grid, 1.5), precondition_error);
}

TEST_CASE("fixed rate without CSI", "[ratepolicy]")
{
    const double r = optimize_fixed_rate_nocsi(snr15, 250, NoCsiObjective::goodput);
    auto goodput = [&](double x) { return x * (1.0 - eps_fixed_rate_nocsi(snr15, 250, x)); };
    CHECK(goodput(r) >= goodput(r + 1e-3) - 1e-12);
    CHECK(goodput(r) >= goodput(r - 1e-3) - 1e-12);
    const auto p = build_policy_fixed_rate_nocsi(snr15, 250, r);
    REQUIRE(p.size() == 1);
    CHECK(p.grid.mass(0) == 1.0);
    CHECK_THAT(expected_goodput(p, 250), WithinRel(goodput(r), 1e-12));
}

TEST_CASE("expected goodput", "[ratepolicy]")
{
    const auto grid = make_exponential_grid(ref_model.estimated_snr_mean(), 500);
    auto p = build_policy_fraction(ref_model, n200, grid, 0.0);
    CHECK(expected_goodput(p, 225) == 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p.rate[i] = 2.5;
        p.eps_true[i] = 0.0;
    }
    CHECK_THAT(expected_goodput(p, 225), WithinRel(200.0 / 225.0 * 2.5, 1e-10));
}

TEST_CASE("tail monotonicity check", "[ratepolicy]")
{
    const auto grid = db_grid(0.0, 25.0, 40);
    auto p = build_policy_fraction(ref_model, n200, grid, 0.9);
    CHECK_NOTHROW(check_tail_monotone(p));
    p.rate.back() = 0.5 * p.rate[p.size() - 2];
    CHECK_THROWS_AS(check_tail_monotone(p), numeric_error);
}

TEST_CASE("policy CSV roundtrip", "[ratepolicy]")
{
    const auto grid = make_exponential_grid(ref_model.estimated_snr_mean(), 300);
    const auto p = build_policy_approx(ref_model, n200, 0.99, grid, 1e-3);
    std::stringstream ss;
    write_policy_csv(ss, p, {{"origin", "unit test"}});
    const std::string text = ss.str();
    CHECK(text.find("gamma_hat,rate,eps_target,eps_true") != std::string::npos);
    const auto q = read_policy_csv(ss, ref_model.estimated_snr_mean());
    REQUIRE(q.size() == p.size());
    CHECK(q.scheme == p.scheme);
    CHECK(q.blocklength == p.blocklength);
    CHECK_THAT(q.mellin_arg, WithinAbs(0.99, 1e-12));
    CHECK_THAT(q.grid.head_mass, WithinRel(p.grid.head_mass, 1e-8));
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK_THAT(q.grid.points[i], WithinRel(p.grid.points[i], 1e-9));
        CHECK_THAT(q.rate[i], WithinRel(p.rate[i], 1e-9));
        CHECK_THAT(q.eps_true[i], WithinRel(p.eps_true[i], 1e-8));
        CHECK_THAT(q.eps_target[i], WithinRel(p.eps_target[i], 1e-8));
        CHECK_THAT(q.grid.mass(i), WithinRel(p.grid.mass(i), 1e-7));
    }

    std::stringstream bad("gamma_hat,rate\n1,2\n");
    CHECK_THROWS_AS(read_policy_csv(bad, 1.0), domain_error);
    std::stringstream neg("# blocklength=200\ngamma_hat,rate,eps_target,eps_true\n1,-2,0.1,0.1\n");
    CHECK_THROWS(read_policy_csv(neg, 1.0));
}
