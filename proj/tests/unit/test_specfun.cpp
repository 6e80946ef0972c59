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

#include "fbldelay/specfun.hpp"

#include "oracles.hpp"

#include <cmath>
#include <numbers>

using namespace fbldelay;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("gaussian_q", "[specfun]")
{
    CHECK(specfun::gaussian_q(0.0) == 0.5);
    const double far = specfun::gaussian_q(38.0);
    CHECK(far >= 0.0);
    CHECK(far < 1e-300);
    CHECK_THAT(specfun::gaussian_q(1.2815515655), WithinAbs(oracle::q_simpson(1.2815515655), 1e-10));
    CHECK_THAT(specfun::gaussian_q(1.2815515655), WithinAbs(0.1, 1e-10));
    for (double x : {-3.0, -0.7, 0.3, 2.0, 4.5, 8.0})
        CHECK_THAT(specfun::gaussian_q(x), WithinRel(oracle::q_simpson(x), 1e-9));
    // Symmetry Q(-x) = 1 - Q(x).
    for (double x : {0.1, 1.0, 3.0}) CHECK_THAT(specfun::gaussian_q(-x), WithinAbs(1.0 - specfun::gaussian_q(x), 1e-15));
}

TEST_CASE("inverse_q", "[specfun]")
{
    CHECK_THAT(specfun::inverse_q(0.5), WithinAbs(0.0, 1e-15));
    CHECK_THAT(specfun::inverse_q(specfun::gaussian_q(2.0)), WithinAbs(2.0, 1e-10));
    CHECK_THAT(specfun::inverse_q(1e-3), WithinAbs(oracle::q_inverse_bisect(1e-3), 1e-10));
    CHECK_THAT(specfun::inverse_q(1e-3), WithinAbs(3.0902, 1e-4));
    for (double p : {1e-300, 1e-100, 1e-12, 1e-6, 0.01, 0.2, 0.7, 0.99, 0.999999})
        CHECK_THAT(specfun::inverse_q(p), WithinAbs(oracle::q_inverse_bisect(p), 1e-9 * std::max(1.0, std::abs(oracle::q_inverse_bisect(p)))));
}

TEST_CASE("bessel_i0", "[specfun]")
{
    CHECK(specfun::bessel_i0(0.0) == 1.0);
    CHECK_THAT(specfun::bessel_i0(1.0), WithinAbs(oracle::i0_series(1.0), 1e-12));
    CHECK_THAT(specfun::bessel_i0(1.0), WithinAbs(1.26607, 1e-5));
    for (double x : {0.01, 0.5, 3.0, 7.9, 8.1, 15.0, 40.0, 120.0})
        CHECK_THAT(specfun::bessel_i0(x), WithinRel(oracle::i0_series(x), 1e-12));
    // Scaled form at 700 against the leading asymptotic term 1/sqrt(2 pi x).
    const double s700 = specfun::bessel_i0e(700.0);
    CHECK(std::isfinite(s700));
    CHECK_THAT(s700, WithinRel(1.0 / std::sqrt(2.0 * std::numbers::pi * 700.0), 1e-3));
    CHECK_THAT(s700, WithinRel(oracle::i0e_series(700.0), 1e-10));
}

TEST_CASE("marcum_q1 limits", "[specfun]")
{
    for (double a : {0.0, 0.5, 3.0, 30.0}) CHECK(specfun::marcum_q1(a, 0.0) == 1.0);
    for (double b : {0.1, 1.0, 4.0}) CHECK_THAT(specfun::marcum_q1(0.0, b), WithinRel(std::exp(-0.5 * b * b), 1e-14));
    CHECK_THAT(specfun::marcum_q1(1.0, 1.0), WithinAbs(oracle::marcum_simpson(1.0, 1.0), 1e-8));
}

TEST_CASE("marcum_q1 against Rician density integration", "[specfun]")
{
    const double vals[] = {0.0, 0.5, 1.0, 2.0, 5.0};
    for (double a : vals)
        for (double b : vals) {
            if (b == 0.0) continue;
            INFO("a=" << a << " b=" << b);
            CHECK_THAT(specfun::marcum_q1(a, b), WithinAbs(oracle::marcum_simpson(a, b), 1e-8));
        }
}

TEST_CASE("marcum_q1 in the quadrature branch and tails", "[specfun]")
{
    // a*b > 150 exercises the direct-quadrature path.
    for (auto [a, b] : {std::pair{15.0, 12.0}, {20.0, 21.0}, {40.0, 39.0}})
        CHECK_THAT(specfun::marcum_q1(a, b), WithinAbs(oracle::marcum_simpson(a, b), 1e-8));
    CHECK(specfun::marcum_q1(1.0, 60.0) == 0.0);
    CHECK(specfun::marcum_q1(60.0, 1.0) == 1.0);
    CHECK_THROWS(specfun::marcum_q1(-1.0, 1.0));
}

TEST_CASE("dispersion", "[specfun]")
{
    const double l2 = std::numbers::log2e * std::numbers::log2e;
    CHECK(specfun::dispersion(0.0) == 0.0);
    CHECK_THAT(specfun::dispersion(1e12), WithinRel(l2, 1e-12));
    CHECK_THAT(specfun::dispersion(1e12), WithinAbs(2.08137, 1e-5));
    CHECK_THAT(specfun::dispersion(1.0), WithinRel(0.75 * l2, 1e-14));
    CHECK_THAT(specfun::dispersion(1.0), WithinAbs(1.56103, 1e-5));
}
