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

// Reference computations for the tests. Written without the library's own
// numerics: composite Simpson rules, power series, bisection and plain sampling.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace oracle {

/// Composite Simpson rule with `panels` (even) subintervals.
template <class F>
double simpson(const F& f, double a, double b, int panels = 20000)
{
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return acc * h / 3.0;
}

/// Q(x) by Simpson integration of the standard normal density over [x, x + 40].
inline double q_simpson(double x)
{
    auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
    return simpson(phi, x, x + 40.0, 200000);
}

/// Q^{-1}(p) by bisection on the complementary error function.
inline double q_inverse_bisect(double p)
{
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(mid / std::numbers::sqrt2) > p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// I0(x) by its power series sum (x/2)^{2k} / (k!)^2.
inline double i0_series(double x)
{
    double term = 1.0, sum = 1.0;
    const double q = 0.25 * x * x;
    for (int k = 1; k < 2000; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

/// e^{-x} I0(x) from the power series evaluated in log space for large x.
inline double i0e_series(double x)
{
    if (x < 600.0) return std::exp(-x) * i0_series(x);
    double lsum = -x; // log of e^{-x} * term_0
    double acc = 0.0;
    double lt = 0.0;
    const double lq = 2.0 * std::log(0.5 * x);
    double lmax = -1e300;
    const int kmax = static_cast<int>(x) + 400;
    for (int k = 0; k <= kmax; ++k) {
        if (k > 0) lt += lq - 2.0 * std::log(static_cast<double>(k));
        lmax = std::max(lmax, lt);
    }
    lt = 0.0;
    for (int k = 0; k <= kmax; ++k) {
        if (k > 0) lt += lq - 2.0 * std::log(static_cast<double>(k));
        acc += std::exp(lt - lmax);
    }
    return std::exp(lsum + lmax + std::log(acc));
}

/// Rician density t exp(-(t^2 + a^2)/2) I0(a t).
inline double rician_pdf(double a, double t)
{
    const double z = a * t;
    return t * std::exp(-0.5 * (t - a) * (t - a)) * i0e_series(z);
}

/// Q1(a, b) by Simpson integration of the Rician density over [b, max(a, b) + 40].
inline double marcum_simpson(double a, double b)
{
    return simpson([a](double t) { return rician_pdf(a, t); }, b, std::max(a, b) + 40.0, 40000);
}

/// Density of the true SNR given the estimate: noncentral chi-square with two
/// degrees of freedom, scale c = avg_snr * sigma_N^2, noncentrality from gamma_hat.
inline double ncx2_pdf(double gamma_hat, double c, double x)
{
    const double d = std::sqrt(x) - std::sqrt(gamma_hat);
    return std::exp(-d * d / c) * i0e_series(2.0 * std::sqrt(x * gamma_hat) / c) / c;
}

/// Draws the true SNR given the estimate: avg_snr |h_hat + z|^2, |h_hat|^2 = gamma_hat / avg_snr,
/// z ~ CN(0, sigma_n_sq).
class ConditionalSampler {
public:
    ConditionalSampler(double avg_snr, double sigma_n_sq, double gamma_hat, std::uint64_t seed)
        : avg_snr_(avg_snr), h_(std::sqrt(gamma_hat / avg_snr)), sd_(std::sqrt(0.5 * sigma_n_sq)), gen_(seed)
    {
    }

    double operator()()
    {
        const double re = h_ + sd_ * normal_(gen_);
        const double im = sd_ * normal_(gen_);
        return avg_snr_ * (re * re + im * im);
    }

private:
    double avg_snr_, h_, sd_;
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_;
};

/// Normal-approximation error at a known SNR x, coded from the textbook formula.
inline double fbl_q(double x, int n, double r)
{
    const double c = std::log2(1.0 + x);
    const double v = (1.0 - 1.0 / ((1.0 + x) * (1.0 + x))) * std::pow(std::numbers::log2e, 2);
    return 0.5 * std::erfc((c - r) / std::sqrt(v / n) / std::numbers::sqrt2);
}

} // namespace oracle
