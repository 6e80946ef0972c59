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

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace fbldelay {

/// SplitMix64, used only to expand a 64-bit seed into generator state.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/**
 * xoshiro256++ generator with the 2^128 jump polynomial.
 *
 * Parallel streams are obtained with for_stream(seed, k): the seeded generator
 * advanced by k jumps. Streams are therefore non-overlapping for any run
 * shorter than 2^128 draws, and stream 0 is the plain seeded generator.
 * Satisfies UniformRandomBitGenerator.
 */
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed = 0x853c49e6748fea9bULL)
    {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }

    static Xoshiro256pp for_stream(std::uint64_t seed, std::uint64_t stream)
    {
        Xoshiro256pp g(seed);
        for (std::uint64_t i = 0; i < stream; ++i) g.jump();
        return g;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()()
    {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Equivalent to 2^128 calls of operator().
    void jump()
    {
        static constexpr std::array<std::uint64_t, 4> poly = {
            0x180ec6d33cfd0abaULL, 0xd5a61266f0c9392cULL, 0xa9582618e03fc9aaULL, 0x39abdc4529b1661cULL};
        std::array<std::uint64_t, 4> acc{};
        for (std::uint64_t word : poly) {
            for (int b = 0; b < 64; ++b) {
                if (word & (std::uint64_t{1} << b))
                    for (int i = 0; i < 4; ++i) acc[i] ^= s_[i];
                (*this)();
            }
        }
        s_ = acc;
    }

    /// Uniform double in (0, 1), never exactly 0 or 1.
    double uniform_open()
    {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Circularly symmetric complex Gaussian CN(0, variance) by Box-Muller:
    /// |z|^2 is exponential with mean `variance`, the phase is uniform.
    std::complex<double> complex_normal(double variance)
    {
        const double radius = std::sqrt(-variance * std::log(uniform_open()));
        const double phase = 2.0 * std::numbers::pi * uniform_open();
        return {radius * std::cos(phase), radius * std::sin(phase)};
    }

    bool operator==(const Xoshiro256pp&) const = default;

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> s_{};
};

} // namespace fbldelay
