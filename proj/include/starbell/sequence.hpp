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

#include <cstddef>
#include <optional>
#include <utility>

#include "starbell/matrix.hpp"
#include "starbell/measurement.hpp"
#include "starbell/network.hpp"

namespace starbell {

// Qubit ordering inside a branch pair is fixed once, here: every 4x4 state
// is (branch-party qubit) tensor (Alice qubit). Branch measurements act as
// (B x I), Alice's projectors as (I x Pi).

/// State of one source's qubit pair after `depth` branch measurements.
struct BranchState {
  DensityOperator rho;
  std::size_t depth = 0;
};

/// The four two-qubit Pauli correlators Tr[rho (sigma_u x sigma_v)] for
/// u, v in {Z, X}; first index is the branch-party side.
struct CorrelatorVector {
  double t_zz = 0.0;
  double t_zx = 0.0;
  double t_xz = 0.0;
  double t_xx = 0.0;
};

/// v |phi+><phi+| + (1 - v) I/4 in the (branch x Alice) ordering.
inline DensityOperator initial_pair_state(const SourceSpec& source) {
  const double v = source.visibility;
  if (!(v >= 0.0 && v <= 1.0))
    throw ValidationError("source visibility outside [0, 1]");
  ComplexMatrix rho(4);
  // |phi+> = (|00> + |11>)/sqrt(2), amplitudes at indices 0 and 3.
  rho(0, 0) = rho(3, 3) = 0.5 * v;
  rho(0, 3) = rho(3, 0) = 0.5 * v;
  const double iso = (1.0 - v) / 4.0;
  for (std::size_t i = 0; i < 4; ++i) rho(i, i) += iso;
  return DensityOperator(std::move(rho));
}

namespace detail {

inline ComplexMatrix branch_operator(const ComplexMatrix& op2x2) {
  return kron(op2x2, ComplexMatrix::identity(2));
}

}  // namespace detail

/// Unconditional Luders update: average the square-root sandwiches over both
/// inputs (weight 1/2 each) and both outcomes of the party's measurement.
inline BranchState luders_average(const BranchState& state,
                                  const PartySetting& setting) {
  ComplexMatrix next(4);
  for (Axis axis : {Axis::Z, Axis::X}) {
    const double eta = axis == Axis::Z ? setting.eta_z : setting.eta_x;
    const KrausPair kraus = kraus_from_povm(unsharp_pauli(eta, axis));
    for (int b = 0; b < 2; ++b) {
      const ComplexMatrix k = detail::branch_operator(kraus.op(b));
      next += 0.5 * matmul(k, matmul(state.rho.matrix(), k));
    }
  }
  return {DensityOperator(std::move(next)), state.depth + 1};
}

struct ConditionalOutcome {
  double probability = 0.0;
  /// Absent when the branch has (numerically) zero probability; such a
  /// branch must never be normalized or drawn.
  std::optional<BranchState> state;
};

inline constexpr double kZeroProbability = 1e-15;

/// Conditional Luders update for input y (0 = Z, 1 = X) and outcome b.
inline ConditionalOutcome luders_conditional(const BranchState& state,
                                             const PartySetting& setting,
                                             int y, int b) {
  const double eta = y == 0 ? setting.eta_z : setting.eta_x;
  const BinaryPovm povm = unsharp_pauli(eta, axis_from_input(y));
  const ComplexMatrix effect = detail::branch_operator(povm.effect(b));
  const double p = trace_of_product(effect, state.rho.matrix()).real();
  if (p < kZeroProbability) return {p, std::nullopt};
  const ComplexMatrix k =
      detail::branch_operator(psd_sqrt_2x2(povm.effect(b)));
  ComplexMatrix post = matmul(k, matmul(state.rho.matrix(), k));
  post *= 1.0 / p;
  return {p, BranchState{DensityOperator(std::move(post)), state.depth + 1}};
}

/// One step of the correlator recursion: a party's unsharp X measurement
/// shrinks the Z-side correlators by (1 + sqrt(1 - eta_x^2))/2 and vice
/// versa. Pure arithmetic; the fast path cross-checking the matrix path.
inline CorrelatorVector correlator_recursion(const CorrelatorVector& c,
                                             const PartySetting& setting) {
  const double shrink_from_x = 0.5 * (1.0 + std::sqrt(1.0 - setting.eta_x * setting.eta_x));
  const double shrink_from_z = 0.5 * (1.0 + std::sqrt(1.0 - setting.eta_z * setting.eta_z));
  return {shrink_from_x * c.t_zz, shrink_from_x * c.t_zx,
          shrink_from_z * c.t_xz, shrink_from_z * c.t_xx};
}

/// Matrix-path correlators of a branch state.
inline CorrelatorVector correlators_of(const BranchState& state) {
  const ComplexMatrix z = pauli_z();
  const ComplexMatrix x = pauli_x();
  auto corr = [&](const ComplexMatrix& u, const ComplexMatrix& v) {
    return trace_of_product(kron(u, v), state.rho.matrix()).real();
  };
  return {corr(z, z), corr(z, x), corr(x, z), corr(x, x)};
}

/// Initial noisy pair advanced through the first `depth` parties of the
/// branch by unconditional Luders updates.
inline BranchState evolve_source(const SourceSpec& source,
                                 const BranchConfig& branch,
                                 std::size_t depth) {
  if (depth > branch.length())
    throw ValidationError("evolve_source: depth " + std::to_string(depth) +
                          " exceeds chain length " +
                          std::to_string(branch.length()));
  BranchState state{initial_pair_state(source), 0};
  for (std::size_t j = 0; j < depth; ++j)
    state = luders_average(state, branch.parties[j]);
  return state;
}

/// Alice-side reduced state (partial trace over the branch-party qubit).
inline ComplexMatrix alice_marginal(const BranchState& state) {
  ComplexMatrix out(2);
  const auto& rho = state.rho.matrix();
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      out(i, j) = rho(i, j) + rho(2 + i, 2 + j);
  return out;
}

}  // namespace starbell
