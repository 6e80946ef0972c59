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

#include <cmath>
#include <cstddef>
#include <vector>

namespace fbldelay::opt {

struct Minimum {
    double x = 0.0;
    double fx = 0.0;
};

/// Golden-section search for a minimum of a unimodal f on the open interval (a, b),
/// run until the bracket is narrower than `width`. f is only evaluated at interior points.
template <class F>
Minimum golden_minimize(const F& f, double a, double b, double width)
{
    constexpr double inv_phi = 0.6180339887498948482;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > width) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            if (!(c > a && c < d)) break;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            if (!(d > c && d < b)) break;
            fd = f(d);
        }
    }
    return fc <= fd ? Minimum{c, fc} : Minimum{d, fd};
}

/// Evaluates f on `points` uniformly spaced nodes of [a, b], then refines the best
/// node by golden-section search between its neighbours. The scan guards against
/// local minima of objectives that are not provably unimodal.
template <class F>
Minimum scan_then_golden(const F& f, double a, double b, int points, double width)
{
    if (points < 3) points = 3;
    std::vector<double> xs(static_cast<std::size_t>(points));
    Minimum best{a, f(a)};
    std::size_t best_i = 0;
    for (int i = 0; i < points; ++i) {
        const double x = i + 1 == points ? b : a + (b - a) * i / (points - 1);
        xs[static_cast<std::size_t>(i)] = x;
        if (i == 0) continue;
        const double fx = f(x);
        if (fx < best.fx) {
            best = {x, fx};
            best_i = static_cast<std::size_t>(i);
        }
    }
    const double lo = xs[best_i == 0 ? 0 : best_i - 1];
    const double hi = xs[best_i + 1 == xs.size() ? best_i : best_i + 1];
    if (hi - lo <= width) return best;
    const auto refined = golden_minimize(f, lo, hi, width);
    return refined.fx < best.fx ? refined : best;
}

} // namespace fbldelay::opt
