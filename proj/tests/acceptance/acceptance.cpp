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

// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset. Exit status 1 if any selected criterion fails.

#include "fbldelay/fbldelay.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace fbldelay;

namespace {

constexpr double snr15 = 31.6228;

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Detail {
public:
    template <class T>
    Detail& operator<<(const T& v)
    {
        os_ << v;
        return *this;
    }
    std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
};

SchemeOptions scheme(Scheme s)
{
    SchemeOptions o;
    o.scheme = s;
    return o;
}

bool within_rel(double x, double ref, double tol) { return std::abs(x - ref) <= tol * std::abs(ref); }

// 1. Service Mellin values at s = 0.99 for four schemes.
Outcome mellin_values()
{
    const LinkConfig link{snr15, 225, 25};
    struct Case {
        const char* name;
        Scheme s;
        double ref;
    };
    const Case cases[] = {{"perfectRA", Scheme::perfectRA, 0.0291},
                          {"approxRA", Scheme::approxRA, 0.0294},
                          {"fixedEps", Scheme::fixedEps, 0.0394},
                          {"maxGoodput", Scheme::maxGoodput, 0.0438}};
    Outcome o{true, {}};
    Detail d;
    for (const auto& c : cases) {
        const double v = mellin_service(build_policy(link, scheme(c.s), 0.99), 0.99);
        const bool ok = within_rel(v, c.ref, 0.02);
        o.pass = o.pass && ok;
        d << c.name << "=" << v << " (ref " << c.ref << (ok ? ") " : ", off) ");
    }
    o.detail = d.str();
    return o;
}

// 2. Minimizing theta of the delay-optimal kernel.
Outcome optimal_theta()
{
    const LinkConfig link{snr15, 225, 25};
    const auto r = delay_bound({1.4, link.n_slot}, make_service(link, scheme(Scheme::approxRA)), 5);
    Outcome o;
    o.pass = r.stable && r.theta_star >= 0.005 && r.theta_star <= 0.020;
    o.detail = (Detail() << "theta*=" << r.theta_star << " bound=" << r.bound << " (need theta* in [0.005, 0.020])").str();
    return o;
}

// 3. Suboptimal schemes are much worse; perfectRA and approxRA agree.
Outcome scheme_ordering()
{
    const LinkConfig link{snr15, 225, 25};
    const ArrivalSpec spec{1.4, link.n_slot};
    auto bound = [&](Scheme s) { return delay_bound(spec, make_service(link, scheme(s)), 4).bound; };
    const double approx = bound(Scheme::approxRA);
    const double perfect = bound(Scheme::perfectRA);
    const double fixed = bound(Scheme::fixedEps);
    const double goodput = bound(Scheme::maxGoodput);
    const double gap = std::abs(perfect - approx) / approx;
    Outcome o;
    o.pass = fixed >= 5.0 * approx && goodput >= 5.0 * approx && gap <= 0.05;
    o.detail = (Detail() << "approxRA=" << approx << " perfectRA=" << perfect << " fixedEps=" << fixed
                         << " maxGoodput=" << goodput << "; ratios fixedEps/approx=" << fixed / approx
                         << " maxGoodput/approx=" << goodput / approx << " (need >= 5); |perfect-approx|/approx=" << gap
                         << " (need <= 0.05)")
                   .str();
    return o;
}

// 4. Closed-form bounds dominate the exact quantities on the full grid.
Outcome dominance()
{
    const auto checks = validation::dominance();
    Outcome o{true, {}};
    Detail d;
    for (const auto& c : checks) {
        o.pass = o.pass && c.passed;
        d << c.name << ": " << c.violations << "/" << c.cases << " violations" << (c.detail.empty() ? "" : " ") << c.detail
          << "; ";
    }
    o.detail = d.str();
    return o;
}

// 5. Delay-optimal training length for a 250-symbol slot.
Outcome training_length()
{
    const auto sweep = optimize_training(snr15, 250, 1.0, 5, scheme(Scheme::approxRA), default_training_lengths(250));
    double worst = 0.0;
    for (const auto& row : sweep.rows)
        if (row.m >= 20 && row.m <= 50) worst = std::max(worst, row.result.stable ? row.result.bound : 1.0);
    Outcome o;
    o.pass = sweep.m_star >= 30 && sweep.m_star <= 36 && worst <= 2.0 * sweep.best_bound;
    o.detail = (Detail() << "m*=" << sweep.m_star << " min bound=" << sweep.best_bound << " worst on [20, 50]=" << worst
                         << " (ratio " << worst / sweep.best_bound << ", need m* in [30, 36] and ratio <= 2)")
                   .str();
    return o;
}

// 6. Supported arrivals per slot with 200 data symbols.
Outcome max_arrivals()
{
    const QoSTarget target{5, 1e-8};
    Outcome o{true, {}};
    Detail d;
    d << "bits per slot:";
    for (int m = 10; m <= 100; m += 10) {
        const LinkConfig link{snr15, 200 + m, m};
        const double alpha = max_arrival_rate(link, target, scheme(Scheme::approxRA));
        const double bits = alpha * link.n_slot;
        o.pass = o.pass && bits >= 180.0 && bits <= 330.0;
        d << " m=" << m << ":" << bits;
    }
    d << " (need all in [180, 330])";
    o.detail = d.str();
    return o;
}

// 7. Simulated violation frequencies stay below the analytic bound.
Outcome simulation_validity()
{
    const LinkConfig link{snr15, 225, 25};
    const auto opt = scheme(Scheme::approxRA);
    const auto per_theta = make_service(link, opt);
    double alpha = 1.4;
    RatePolicy policy;
    double theta = 0.0, b3 = 1.0;
    for (; alpha <= 2.5; alpha += 0.05) {
        theta = delay_bound({alpha, link.n_slot}, per_theta, 3).theta_star;
        policy = build_policy(link, opt, 1.0 - theta);
        b3 = delay_bound({alpha, link.n_slot}, ServiceTransform::fixed(policy), 3).reported_bound();
        if (b3 >= 1e-4) break;
    }
    Outcome o;
    if (!(b3 >= 1e-4 && b3 <= 1e-2)) {
        o.detail = (Detail() << "no arrival rate with bound(w=3) in [1e-4, 1e-2]; last alpha=" << alpha << " bound=" << b3).str();
        return o;
    }
    SimConfig cfg;
    cfg.slots = 10'000'000;
    cfg.seed = 20240607;
    cfg.w_max = 10;
    cfg.spec = {alpha, link.n_slot};
    cfg.policy = policy;
    cfg.model = build_estimation_model(link);
    const auto sim = run_parallel(cfg, 4);
    const auto fixed = ServiceTransform::fixed(policy);
    o.pass = !sim.unstable_run;
    Detail d;
    d << "alpha=" << alpha << " policy theta=" << theta << ";";
    for (int w = 0; w <= 6; ++w) {
        const double b = delay_bound(cfg.spec, fixed, w).reported_bound();
        const double p = sim.p_v_hat[static_cast<std::size_t>(w)];
        const bool ok = p <= b + 3.0 * sim.std_error(w);
        o.pass = o.pass && ok;
        d << " w=" << w << ": p=" << p << " bound=" << b << (ok ? "" : " VIOLATED");
    }
    o.detail = d.str();
    return o;
}

// 8. Special functions against series, quadrature and bisection oracles.
Outcome special_functions()
{
    long long checks = 0, failed = 0;
    Detail d;
    auto expect = [&](bool ok, const char* what, double got, double ref) {
        ++checks;
        if (!ok) {
            ++failed;
            d << what << ": got " << got << " ref " << ref << "; ";
        }
    };
    for (double x : {0.0, 0.5, 1.2815515655, 2.0, 4.0, 6.0}) {
        const double ref = oracle::q_simpson(x);
        expect(std::abs(specfun::gaussian_q(x) - ref) <= 1e-10, "Q", specfun::gaussian_q(x), ref);
    }
    for (double p : {1e-9, 1e-6, 1e-3, 0.1, 0.5, 0.9}) {
        const double ref = oracle::q_inverse_bisect(p);
        const double got = specfun::inverse_q(p);
        expect(std::abs(got - ref) <= 1e-4, "Qinv", got, ref);
        expect(std::abs(specfun::gaussian_q(got) - p) <= 1e-10 * p, "Q(Qinv)", specfun::gaussian_q(got), p);
    }
    for (double x : {0.0, 0.5, 1.0, 5.0, 20.0, 50.0}) {
        const double ref = oracle::i0_series(x);
        expect(std::abs(specfun::bessel_i0(x) - ref) <= 1e-12 * ref, "I0", specfun::bessel_i0(x), ref);
    }
    const double asym = 1.0 / std::sqrt(2.0 * std::numbers::pi * 700.0);
    expect(std::isfinite(specfun::bessel_i0e(700.0)) && std::abs(specfun::bessel_i0e(700.0) - asym) <= 1e-3 * asym,
           "I0e(700)", specfun::bessel_i0e(700.0), asym);
    for (double a : {0.0, 0.5, 1.0, 2.0, 5.0})
        for (double b : {0.0, 0.5, 1.0, 2.0, 5.0}) {
            const double ref = oracle::marcum_simpson(a, b);
            expect(std::abs(specfun::marcum_q1(a, b) - ref) <= 1e-8, "Q1", specfun::marcum_q1(a, b), ref);
        }
    Outcome o;
    o.pass = failed == 0;
    o.detail = (Detail() << checks - failed << "/" << checks << " oracle comparisons within tolerance; " << d.str()).str();
    return o;
}

// 9. Convexity of the per-point objective.
Outcome convexity()
{
    const auto c = validation::convexity();
    return {c.passed, (Detail() << c.violations << " non-positive second differences in " << c.cases << " triples "
                                << c.detail)
                          .str()};
}

// 10. Expected goodput ordering.
Outcome goodput_ordering()
{
    const auto rows = goodput_comparison(snr15, 250, {5, 50});
    Outcome o{true, {}};
    Detail d;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d << rows[i].label << (rows[i].m ? "(m=" + std::to_string(rows[i].m) + ")" : "") << "=" << rows[i].goodput << " ";
        if (i > 0) o.pass = o.pass && rows[i - 1].goodput > rows[i].goodput;
    }
    o.detail = d.str() + "(need strictly decreasing)";
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"service Mellin values", mellin_values},
        {"optimal theta", optimal_theta},
        {"scheme ordering", scheme_ordering},
        {"bound dominance", dominance},
        {"optimal training length", training_length},
        {"maximum arrivals", max_arrivals},
        {"bound validity by simulation", simulation_validity},
        {"special-function oracles", special_functions},
        {"convexity", convexity},
        {"goodput ordering", goodput_ordering},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failures;
        std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
