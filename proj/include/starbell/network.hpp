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

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "starbell/error.hpp"

namespace starbell {

/// Sharpness of one sequential party's two observables. eta = 1 is a
/// projective measurement, eta = 0 a trivial one.
struct PartySetting {
  double eta_z = 1.0;
  double eta_x = 1.0;
};

/// Ordered measurement chain of one branch, outermost party first.
struct BranchConfig {
  std::vector<PartySetting> parties;

  std::size_t length() const { return parties.size(); }
};

/// Isotropic-noise model of one source: emits
/// v |phi+><phi+| + (1 - v) I/4.
struct SourceSpec {
  double visibility = 1.0;
};

/// Full star network: m branches, one source per branch, and the central
/// party's measurement angle theta (radians, shared across branches).
struct NetworkConfig {
  std::vector<BranchConfig> branches;
  std::vector<SourceSpec> sources;
  double theta = std::numbers::pi / 4;

  std::size_t branch_count() const { return branches.size(); }
};

/// One party per branch: depths[k] = j selects party B_{k,j}, 1-based.
struct PartySelection {
  std::vector<std::size_t> depths;

  bool operator==(const PartySelection&) const = default;
};

inline std::string selection_label(const PartySelection& sel) {
  std::string out;
  for (std::size_t k = 0; k < sel.depths.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(sel.depths[k]);
  }
  return out;
}

/// Collects every invariant violation as a human-readable description.
/// An empty result means the config is usable.
inline std::vector<std::string> validate(const NetworkConfig& config) {
  std::vector<std::string> violations;
  if (config.branches.empty())
    violations.push_back("branches: must contain at least one branch");
  if (config.branches.size() != config.sources.size())
    violations.push_back(
        "sources: length " + std::to_string(config.sources.size()) +
        " does not match branch count " +
        std::to_string(config.branches.size()));
  for (std::size_t k = 0; k < config.branches.size(); ++k) {
    const auto& branch = config.branches[k];
    if (branch.parties.empty())
      violations.push_back("branches[" + std::to_string(k) +
                           "]: must contain at least one party");
    for (std::size_t j = 0; j < branch.parties.size(); ++j) {
      const auto& p = branch.parties[j];
      const std::string where =
          "branches[" + std::to_string(k) + "][" + std::to_string(j) + "]";
      if (!(p.eta_z >= 0.0 && p.eta_z <= 1.0))
        violations.push_back(where + ".eta_z = " + std::to_string(p.eta_z) +
                             " outside [0, 1]");
      if (!(p.eta_x >= 0.0 && p.eta_x <= 1.0))
        violations.push_back(where + ".eta_x = " + std::to_string(p.eta_x) +
                             " outside [0, 1]");
    }
  }
  for (std::size_t k = 0; k < config.sources.size(); ++k) {
    const double v = config.sources[k].visibility;
    if (!(v >= 0.0 && v <= 1.0))
      violations.push_back("sources[" + std::to_string(k) +
                           "].visibility = " + std::to_string(v) +
                           " outside [0, 1]");
  }
  if (!(config.theta >= 0.0 && config.theta <= std::numbers::pi / 2 + 1e-12))
    violations.push_back("theta = " + std::to_string(config.theta) +
                         " outside [0, pi/2]");
  return violations;
}

inline void require_valid(const NetworkConfig& config) {
  auto violations = validate(config);
  if (!violations.empty()) {
    std::string msg = "invalid network config:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ValidationError(msg);
  }
}

/// The full Cartesian product {1..n_1} x ... x {1..n_m}, lexicographically
/// ordered with the first branch most significant.
inline std::vector<PartySelection> enumerate_selections(
    const NetworkConfig& config) {
  require_valid(config);
  const std::size_t m = config.branch_count();
  std::vector<PartySelection> out;
  PartySelection current;
  current.depths.assign(m, 1);
  while (true) {
    out.push_back(current);
    std::size_t k = m;
    while (k > 0) {
      --k;
      if (current.depths[k] < config.branches[k].length()) {
        ++current.depths[k];
        for (std::size_t l = k + 1; l < m; ++l) current.depths[l] = 1;
        break;
      }
      if (k == 0) return out;
    }
  }
}

/// Restriction of the network to the given branches (0-based indices),
/// preserving their order and the central angle.
inline NetworkConfig subnetwork(const NetworkConfig& config,
                                const std::vector<std::size_t>& branch_subset) {
  require_valid(config);
  if (branch_subset.empty())
    throw ValidationError("subnetwork: branch subset must be non-empty");
  NetworkConfig out;
  out.theta = config.theta;
  for (std::size_t k : branch_subset) {
    if (k >= config.branch_count())
      throw ValidationError("subnetwork: branch index " + std::to_string(k) +
                            " out of range (have " +
                            std::to_string(config.branch_count()) +
                            " branches)");
    out.branches.push_back(config.branches[k]);
    out.sources.push_back(config.sources[k]);
  }
  return out;
}

}  // namespace starbell
