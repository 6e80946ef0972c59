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

// Umbrella header.

#pragma once

#include "fbldelay/channel.hpp"
#include "fbldelay/csv.hpp"
#include "fbldelay/errmodel.hpp"
#include "fbldelay/errors.hpp"
#include "fbldelay/optimize.hpp"
#include "fbldelay/parallel.hpp"
#include "fbldelay/quadrature.hpp"
#include "fbldelay/ratepolicy.hpp"
#include "fbldelay/rng.hpp"
#include "fbldelay/sim.hpp"
#include "fbldelay/snc.hpp"
#include "fbldelay/specfun.hpp"
#include "fbldelay/sweep.hpp"
#include "fbldelay/validation.hpp"
