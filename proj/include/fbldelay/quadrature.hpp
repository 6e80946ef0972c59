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

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

namespace fbldelay::quad {

struct Result {
    double value = 0.0;
    double abs_error = 0.0;
    int evaluations = 0;
    int intervals = 0;
    bool converged = false;
};

struct Tolerance {
    double abs = 1e-12;
    double rel = 1e-10;
    int max_intervals = 400;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15 constants).
inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(const F& f, double a, double b)
{
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double kronrod = fc * kronrod_weights[7];
    double gauss = fc * gauss_weights[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kronrod_nodes[j];
        const double pair = f(centre - dx) + f(centre + dx);
        kronrod += kronrod_weights[j] * pair;
        if (j % 2 == 1) gauss += gauss_weights[j / 2] * pair;
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

} // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over the piecewise
/// interval given by `breaks` (ascending, at least two entries). The segment with
/// the largest error estimate is bisected until the summed estimate meets
/// max(tol.abs, tol.rel*|I|) or the interval budget is exhausted.
template <class F>
Result integrate(const F& f, std::span<const double> breaks, const Tolerance& tol = {})
{
    std::priority_queue<detail::Segment> heap;
    Result res;
    double total = 0.0;
    double error = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (!(breaks[i + 1] > breaks[i])) continue;
        auto s = detail::gk15(f, breaks[i], breaks[i + 1]);
        res.evaluations += 15;
        total += s.value;
        error += s.error;
        heap.push(s);
    }
    while (!heap.empty() && error > std::max(tol.abs, tol.rel * std::abs(total))) {
        if (static_cast<int>(heap.size()) >= tol.max_intervals) break;
        const auto worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break; // interval at machine resolution
        heap.pop();
        auto left = detail::gk15(f, worst.a, mid);
        auto right = detail::gk15(f, mid, worst.b);
        res.evaluations += 30;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    total = 0.0;
    error = 0.0;
    res.intervals = static_cast<int>(heap.size());
    while (!heap.empty()) {
        total += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    res.value = total;
    res.abs_error = error;
    res.converged = error <= std::max(tol.abs, tol.rel * std::abs(total));
    return res;
}

template <class F>
Result integrate(const F& f, double a, double b, const Tolerance& tol = {})
{
    const std::array<double, 2> br{a, b};
    return integrate(f, std::span<const double>(br), tol);
}

/// Sorts, clips to [lo, hi] and deduplicates candidate breakpoints.
inline std::vector<double> make_breaks(double lo, double hi, std::vector<double> interior)
{
    std::vector<double> out;
    out.reserve(interior.size() + 2);
    out.push_back(lo);
    std::sort(interior.begin(), interior.end());
    for (double x : interior)
        if (x > out.back() && x < hi) out.push_back(x);
    out.push_back(hi);
    return out;
}

} // namespace fbldelay::quad
