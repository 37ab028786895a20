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
#include "starbell/matrix.hpp"
#include "starbell/network.hpp"

namespace starbell {

/// Measurement axis selected by a branch party's input bit: y = 0 is Z,
/// y = 1 is X.
enum class Axis { Z, X };

inline Axis axis_from_input(int y) { return y == 0 ? Axis::Z : Axis::X; }

/// Two-outcome qubit POVM. effect0 + effect1 = identity.
struct BinaryPovm {
  ComplexMatrix effect0;
  ComplexMatrix effect1;

  const ComplexMatrix& effect(int b) const { return b == 0 ? effect0 : effect1; }
};

/// Square-root (Luders) decomposition of a BinaryPovm:
/// m0^dag m0 + m1^dag m1 = identity.
struct KrausPair {
  ComplexMatrix m0;
  ComplexMatrix m1;

  const ComplexMatrix& op(int b) const { return b == 0 ? m0 : m1; }
};

/// Unsharp Pauli measurement with effects (I +- eta sigma_axis)/2.
inline BinaryPovm unsharp_pauli(double eta, Axis axis) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw ValidationError("unsharp_pauli: eta = " + std::to_string(eta) +
                          " outside [0, 1]");
  const ComplexMatrix sigma = axis == Axis::Z ? pauli_z() : pauli_x();
  ComplexMatrix e0 = ComplexMatrix::identity(2);
  ComplexMatrix e1 = ComplexMatrix::identity(2);
  e0 += eta * sigma;
  e1 -= eta * sigma;
  e0 *= 0.5;
  e1 *= 0.5;
  return {std::move(e0), std::move(e1)};
}

/// Unsharp measurement along an arbitrary Bloch direction. Not part of the
/// protocol path (branch inputs only select Z or X); used to express the
/// rotated-basis constructions of the circuit model.
inline BinaryPovm unsharp_bloch(double eta, double rx, double ry, double rz) {
  const double norm = std::sqrt(rx * rx + ry * ry + rz * rz);
  if (norm < 1e-12)
    throw ValidationError("unsharp_bloch: direction must be non-zero");
  if (!(eta >= 0.0 && eta <= 1.0))
    throw ValidationError("unsharp_bloch: eta = " + std::to_string(eta) +
                          " outside [0, 1]");
  ComplexMatrix sigma(2);
  sigma += (rx / norm) * pauli_x();
  sigma += (ry / norm) * pauli_y();
  sigma += (rz / norm) * pauli_z();
  ComplexMatrix e0 = ComplexMatrix::identity(2);
  ComplexMatrix e1 = ComplexMatrix::identity(2);
  e0 += eta * sigma;
  e1 -= eta * sigma;
  e0 *= 0.5;
  e1 *= 0.5;
  return {std::move(e0), std::move(e1)};
}

/// Luders Kraus operators: the PSD square root of each effect.
inline KrausPair kraus_from_povm(const BinaryPovm& p) {
  return {psd_sqrt_2x2(p.effect0), psd_sqrt_2x2(p.effect1)};
}

/// Half-wave-plate angle to sharpness conversion for the interferometric
/// implementation: eta = cos(2 theta_hwp).
inline double hwp_angle_to_sharpness(double theta_hwp) {
  return std::cos(2.0 * theta_hwp);
}

/// Kraus operators read off the Sagnac-interferometer unitary:
///   M0 = cos(t)|0><0| + sin(t)|1><1|   (meter stays in |0>)
///   M1 = sin(t)|0><0| + cos(t)|1><1|   (meter flips to |1>)
/// Together they realize the unsharp Z POVM with eta = cos(2t).
inline KrausPair sagnac_kraus(double theta_hwp) {
  if (!(theta_hwp >= 0.0 && theta_hwp <= std::numbers::pi / 4 + 1e-12))
    throw ValidationError("sagnac_kraus: theta_hwp = " +
                          std::to_string(theta_hwp) + " outside [0, pi/4]");
  const double c = std::cos(theta_hwp);
  const double s = std::sin(theta_hwp);
  ComplexMatrix m0(2), m1(2);
  m0(0, 0) = c;
  m0(1, 1) = s;
  m1(0, 0) = s;
  m1(1, 1) = c;
  return {std::move(m0), std::move(m1)};
}

/// POVM induced by a Kraus pair: effect_b = m_b^dag m_b.
inline BinaryPovm povm_from_kraus(const KrausPair& k) {
  return {matmul(dagger(k.m0), k.m0), matmul(dagger(k.m1), k.m1)};
}

/// Central party's per-branch rank-1 projector:
///   (I + (-1)^a (cos(theta) sigma_Z + (-1)^x sin(theta) sigma_X)) / 2.
inline ComplexMatrix alice_projector(double theta, int x, int a) {
  const double sign_a = (a == 0) ? 1.0 : -1.0;
  const double sign_x = (x == 0) ? 1.0 : -1.0;
  ComplexMatrix out = ComplexMatrix::identity(2);
  out += (sign_a * std::cos(theta)) * pauli_z();
  out += (sign_a * sign_x * std::sin(theta)) * pauli_x();
  out *= 0.5;
  return out;
}

/// The central measurement in factorized form: one sharp projector pair per
/// branch plus the parity wiring a = a_1 xor ... xor a_m. The monolithic
/// 2^m-dimensional effect is assembled on demand.
struct CentralMeasurement {
  double theta = 0.0;
  std::size_t branches = 0;

  ComplexMatrix projector(int x, int a_k) const {
    return alice_projector(theta, x, a_k);
  }

  /// A_{a|x} = sum over parity-a outcome words of the projector product.
  ComplexMatrix effect(int x, int a) const {
    const std::size_t dim = std::size_t{1} << branches;
    ComplexMatrix out(dim);
    for (std::size_t word = 0; word < (std::size_t{1} << branches); ++word) {
      int parity = 0;
      for (std::size_t k = 0; k < branches; ++k)
        parity ^= static_cast<int>((word >> k) & 1);
      if (parity != a) continue;
      ComplexMatrix term =
          projector(x, static_cast<int>((word >> (branches - 1)) & 1));
      for (std::size_t k = 1; k < branches; ++k)
        term = kron(term,
                    projector(x, static_cast<int>((word >> (branches - 1 - k)) & 1)));
      out += term;
    }
    return out;
  }
};

inline CentralMeasurement central_measurement(const NetworkConfig& config) {
  require_valid(config);
  return {config.theta, config.branch_count()};
}

/// Monolithic central effect A_{a|x} for the given network.
inline ComplexMatrix central_effect(const NetworkConfig& config, int x, int a) {
  return central_measurement(config).effect(x, a);
}

}  // namespace starbell
