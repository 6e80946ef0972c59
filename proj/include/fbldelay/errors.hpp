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
#include <sstream>
#include <stdexcept>
#include <string>

namespace fbldelay {

/// Argument outside the mathematical domain of a function (negative SNR, p >= 1, ...).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Argument inside the domain but violating an operation's stated precondition,
/// e.g. a target error probability outside the admissible interval of a rate inversion.
class precondition_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed to reach its accuracy contract.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Kernel requested at a parameter where the queue is not stable.
class unstable_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

template <class... Args>
std::string concat(const Args&... args)
{
    std::ostringstream os;
    os.precision(17);
    (os << ... << args);
    return os.str();
}

inline void require_finite(double x, const char* what)
{
    if (!std::isfinite(x)) throw domain_error(concat(what, " must be finite, got ", x));
}

inline void require_nonnegative(double x, const char* what)
{
    if (!(x >= 0.0)) throw domain_error(concat(what, " must be >= 0, got ", x));
}

inline void require_probability(double p, const char* what)
{
    if (!(p >= 0.0 && p <= 1.0)) throw domain_error(concat(what, " must lie in [0,1], got ", p));
}

} // namespace detail
} // namespace fbldelay
