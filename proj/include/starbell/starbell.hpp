// Copyright 2026 The starbell Authors
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

#include "starbell/bell.hpp"
#include "starbell/config_json.hpp"
#include "starbell/error.hpp"
#include "starbell/matrix.hpp"
#include "starbell/measurement.hpp"
#include "starbell/network.hpp"
#include "starbell/optimize.hpp"
#include "starbell/rng.hpp"
#include "starbell/sampler.hpp"
#include "starbell/sequence.hpp"

//! starbell: exact and finite-statistics simulation of recycled Bell
//! nonlocality in star networks of sequential unsharp measurements.
namespace starbell {}
