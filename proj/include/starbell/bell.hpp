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

#include <bit>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "starbell/matrix.hpp"
#include "starbell/measurement.hpp"
#include "starbell/network.hpp"
#include "starbell/sequence.hpp"

namespace starbell {

inline constexpr std::size_t kMaxBranchesExact = 4;

inline void require_selection(const NetworkConfig& config,
                              const PartySelection& sel) {
  if (sel.depths.size() != config.branch_count())
    throw ValidationError("selection length " +
                          std::to_string(sel.depths.size()) +
                          " does not match branch count " +
                          std::to_string(config.branch_count()));
  for (std::size_t k = 0; k < sel.depths.size(); ++k) {
    if (sel.depths[k] < 1 || sel.depths[k] > config.branches[k].length())
      throw ValidationError("selection[" + std::to_string(k) + "] = " +
                            std::to_string(sel.depths[k]) + " outside [1, " +
                            std::to_string(config.branches[k].length()) + "]");
  }
}

/// Exact conditional distribution p(a, b_s | x, y_s) for one selection of
/// parties. Outcome and input words pack branch 0 into the most significant
/// bit, matching the Kronecker ordering.
class JointDistribution {
 public:
  JointDistribution(std::size_t branches, std::vector<double> table)
      : branches_(branches), table_(std::move(table)) {
    const std::size_t words = std::size_t{1} << branches_;
    if (table_.size() != 4 * words * words)
      throw NumericalError("joint distribution table has wrong size");
    for (int x = 0; x < 2; ++x)
      for (std::size_t y = 0; y < words; ++y) {
        double sum = 0.0;
        for (int a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < words; ++b) {
            const double p = at(a, b, x, y);
            if (p < -1e-10 || p > 1.0 + 1e-10)
              throw NumericalError("probability outside [0, 1]");
            sum += p;
          }
        if (std::abs(sum - 1.0) > 1e-10)
          throw NumericalError("conditional slice (x=" + std::to_string(x) +
                               ", y=" + std::to_string(y) +
                               ") does not sum to 1");
      }
  }

  std::size_t branches() const { return branches_; }

  double at(int a, std::size_t b_word, int x, std::size_t y_word) const {
    return table_[index(branches_, a, b_word, x, y_word)];
  }

  static std::size_t table_size(std::size_t branches) {
    const std::size_t words = std::size_t{1} << branches;
    return 4 * words * words;
  }

  static std::size_t index(std::size_t branches, int a, std::size_t b_word,
                           int x, std::size_t y_word) {
    const std::size_t words = std::size_t{1} << branches;
    return ((static_cast<std::size_t>(a) * words + b_word) * 2 +
            static_cast<std::size_t>(x)) *
               words +
           y_word;
  }

 private:
  std::size_t branches_;
  std::vector<double> table_;
};

namespace detail {

/// Permutation from the (b_1..b_m A_1..A_m) block qubit layout to the
/// interleaved (b_1 A_1 b_2 A_2 ...) layout the per-pair states live in.
inline std::vector<std::size_t> block_to_interleaved(std::size_t m) {
  const std::size_t nq = 2 * m;
  const std::size_t dim = std::size_t{1} << nq;
  std::vector<std::size_t> perm(dim);
  for (std::size_t idx = 0; idx < dim; ++idx) {
    std::size_t src = 0;
    for (std::size_t t = 0; t < nq; ++t) {
      const std::size_t bit = (idx >> (nq - 1 - t)) & 1;
      const std::size_t src_pos = t < m ? 2 * t : 2 * (t - m) + 1;
      src |= bit << (nq - 1 - src_pos);
    }
    perm[idx] = src;
  }
  return perm;
}

inline int word_bit(std::size_t word, std::size_t branches, std::size_t k) {
  return static_cast<int>((word >> (branches - 1 - k)) & 1);
}

}  // namespace detail

/// Born-rule evaluation on the recycled total state: each source is evolved
/// to depth s_k - 1, chi_s is the tensor product over branches, and every
/// probability is Tr[(B_{b|y} x A_{a|x}) chi_s].
inline JointDistribution joint_distribution(const NetworkConfig& config,
                                            const PartySelection& sel) {
  require_valid(config);
  require_selection(config, sel);
  const std::size_t m = config.branch_count();
  if (m > kMaxBranchesExact)
    throw ValidationError("exact evaluation supports at most " +
                          std::to_string(kMaxBranchesExact) + " branches");
  const std::size_t words = std::size_t{1} << m;

  ComplexMatrix chi =
      evolve_source(config.sources[0], config.branches[0], sel.depths[0] - 1)
          .rho.matrix();
  for (std::size_t k = 1; k < m; ++k)
    chi = kron(chi, evolve_source(config.sources[k], config.branches[k],
                                  sel.depths[k] - 1)
                        .rho.matrix());
  const auto perm = detail::block_to_interleaved(m);
  const std::size_t dim = std::size_t{1} << (2 * m);
  ComplexMatrix chi_block(dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      chi_block(i, j) = chi(perm[i], perm[j]);

  const CentralMeasurement central = central_measurement(config);
  std::vector<double> table(JointDistribution::table_size(m), 0.0);
  for (int x = 0; x < 2; ++x) {
    const ComplexMatrix central_effects[2] = {central.effect(x, 0),
                                              central.effect(x, 1)};
    for (std::size_t y_word = 0; y_word < words; ++y_word) {
      for (std::size_t b_word = 0; b_word < words; ++b_word) {
        ComplexMatrix branch_effect(1);
        branch_effect(0, 0) = 1.0;
        for (std::size_t k = 0; k < m; ++k) {
          const int y = detail::word_bit(y_word, m, k);
          const int b = detail::word_bit(b_word, m, k);
          const PartySetting& party =
              config.branches[k].parties[sel.depths[k] - 1];
          const double eta = y == 0 ? party.eta_z : party.eta_x;
          branch_effect = kron(
              branch_effect, unsharp_pauli(eta, axis_from_input(y)).effect(b));
        }
        for (int a = 0; a < 2; ++a) {
          const ComplexMatrix total = kron(branch_effect, central_effects[a]);
          const double p = trace_of_product(total, chi_block).real();
          table[JointDistribution::index(m, a, b_word, x, y_word)] = p;
        }
      }
    }
  }
  return JointDistribution(m, std::move(table));
}

enum class BellMethod { exact, closed_form, sampled };

inline std::string to_string(BellMethod m) {
  switch (m) {
    case BellMethod::exact: return "exact";
    case BellMethod::closed_form: return "closed_form";
    case BellMethod::sampled: return "sampled";
  }
  return "unknown";
}

/// The star-network Bell quantities for one selection of parties.
struct BellReport {
  double i_s = 0.0;
  double j_s = 0.0;
  double s_value = 0.0;
  PartySelection selection;
  BellMethod method = BellMethod::exact;
  std::optional<double> std_error;
  /// Set when the bootstrap was too small to estimate an error.
  bool degenerate_error = false;
};

/// I_s, J_s and S_s = |I_s|^(1/m) + |J_s|^(1/m) from a distribution.
inline BellReport bell_value(const JointDistribution& dist,
                             PartySelection selection = {},
                             BellMethod method = BellMethod::exact) {
  const std::size_t m = dist.branches();
  const std::size_t words = std::size_t{1} << m;
  double i_sum = 0.0;
  double j_sum = 0.0;
  for (std::size_t y_word = 0; y_word < words; ++y_word) {
    const int y_parity = std::popcount(y_word) & 1;
    for (int a = 0; a < 2; ++a)
      for (std::size_t b_word = 0; b_word < words; ++b_word) {
        const int b_parity = std::popcount(b_word) & 1;
        const double i_sign = ((a + b_parity) & 1) ? -1.0 : 1.0;
        const double j_sign = ((a + b_parity + y_parity) & 1) ? -1.0 : 1.0;
        i_sum += i_sign * dist.at(a, b_word, 0, y_word);
        j_sum += j_sign * dist.at(a, b_word, 1, y_word);
      }
  }
  const double scale = 1.0 / static_cast<double>(words);
  BellReport report;
  report.i_s = i_sum * scale;
  report.j_s = j_sum * scale;
  const double inv_m = 1.0 / static_cast<double>(m);
  report.s_value =
      std::pow(std::abs(report.i_s), inv_m) + std::pow(std::abs(report.j_s), inv_m);
  report.selection = std::move(selection);
  report.method = method;
  return report;
}

/// Closed-form S_s: per branch 2^((1-s_k)/m) times the m-th root of
/// (eta_Z cos(theta) * prod f_X + eta_X sin(theta) * prod f_Z), with
/// f_u = 1 + sqrt(1 - eta_u^2) over the parties before the selected one.
/// Sub-unit source visibilities enter as an extra factor prod_k v_k^(1/m);
/// that extension beyond the ideal-state derivation is exact because every
/// branch correlator is linear in its source's visibility.
inline double closed_form_s(const NetworkConfig& config,
                            const PartySelection& sel) {
  require_valid(config);
  require_selection(config, sel);
  const std::size_t m = config.branch_count();
  const double inv_m = 1.0 / static_cast<double>(m);
  double s = 1.0;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t depth = sel.depths[k];
    const auto& chain = config.branches[k].parties;
    double f_x = 1.0;
    double f_z = 1.0;
    for (std::size_t j = 0; j + 1 < depth; ++j) {
      f_x *= 1.0 + std::sqrt(1.0 - chain[j].eta_x * chain[j].eta_x);
      f_z *= 1.0 + std::sqrt(1.0 - chain[j].eta_z * chain[j].eta_z);
    }
    const PartySetting& selected = chain[depth - 1];
    const double term =
        std::pow(2.0, 1.0 - static_cast<double>(depth)) *
        (selected.eta_z * std::cos(config.theta) * f_x +
         selected.eta_x * std::sin(config.theta) * f_z);
    s *= std::pow(config.sources[k].visibility * term, inv_m);
  }
  return s;
}

/// Sequential CHSH values of one branch: CHSH_j between the central party
/// and the branch's j-th party, evaluated on the recycled state.
struct ChshPair {
  std::size_t branch = 0;
  double chsh1 = 0.0;
  double chsh2 = 0.0;
};

namespace detail {

inline double chsh_on_state(const BranchState& state,
                            const PartySetting& party, double theta) {
  const CorrelatorVector c = correlators_of(state);
  double chsh = 0.0;
  for (int x = 0; x < 2; ++x) {
    const double sx = (x == 0) ? 1.0 : -1.0;
    // <A_x B_0> with B_0 = eta_z sigma_Z, <A_x B_1> with B_1 = eta_x sigma_X.
    const double corr_b0 =
        party.eta_z * (std::cos(theta) * c.t_zz + sx * std::sin(theta) * c.t_zx);
    const double corr_b1 =
        party.eta_x * (std::cos(theta) * c.t_xz + sx * std::sin(theta) * c.t_xx);
    chsh += corr_b0;                       // y = 0, sign (+1)^(x*0)
    chsh += (x == 1 ? -1.0 : 1.0) * corr_b1;  // y = 1, sign (-1)^x
  }
  return chsh;
}

}  // namespace detail

inline ChshPair chsh_pair(const NetworkConfig& config, std::size_t branch) {
  require_valid(config);
  if (branch >= config.branch_count())
    throw ValidationError("chsh_pair: branch index out of range");
  if (config.branches[branch].length() < 2)
    throw ValidationError("chsh_pair: branch " + std::to_string(branch) +
                          " has fewer than 2 parties");
  ChshPair pair;
  pair.branch = branch;
  const auto& chain = config.branches[branch];
  const auto& source = config.sources[branch];
  pair.chsh1 = detail::chsh_on_state(evolve_source(source, chain, 0),
                                     chain.parties[0], config.theta);
  pair.chsh2 = detail::chsh_on_state(evolve_source(source, chain, 1),
                                     chain.parties[1], config.theta);
  const double tsirelson = 2.0 * std::numbers::sqrt2 + 1e-9;
  if (std::abs(pair.chsh1) > tsirelson || std::abs(pair.chsh2) > tsirelson)
    throw NumericalError("CHSH value above the quantum maximum");
  return pair;
}

inline constexpr double kProjectiveBoundLow = 2.0;
inline const double kProjectiveBoundHigh = 2.0 * std::sqrt(10.0) - 4.0;

/// Best CHSH_2 reachable with projective measurements on a maximally
/// entangled pair plus shared randomness, given CHSH_1. Valid only on
/// [2, 2 sqrt(10) - 4].
inline double projective_bound(double chsh1) {
  if (!(chsh1 >= kProjectiveBoundLow && chsh1 <= kProjectiveBoundHigh))
    throw ValidationError(
        "projective_bound: chsh1 = " + std::to_string(chsh1) +
        " outside validity range [2, 2*sqrt(10)-4]");
  return std::sqrt(10.0) - 0.5 * chsh1;
}

/// Largest S attainable by deterministic classical strategies: every branch
/// party answers with one of the four functions b(y), the central party with
/// one of the four functions a(x). Exhaustive; the network-local bound says
/// the result is exactly 1 for any m.
inline double deterministic_max_s(std::size_t m) {
  if (m == 0 || m > 3)
    throw ValidationError(
        "deterministic_max_s: exhaustive search supports m in {1, 2, 3}");
  const std::size_t words = std::size_t{1} << m;
  const double inv_m = 1.0 / static_cast<double>(m);
  // Response function id f in [0,4): bit y of f is the answer to input y.
  auto answer = [](std::size_t f, int y) {
    return static_cast<int>((f >> y) & 1);
  };
  double best = 0.0;
  std::vector<std::size_t> branch_funcs(m, 0);
  const std::size_t total_branch_assignments = std::size_t{1} << (2 * m);
  for (std::size_t af = 0; af < 4; ++af) {
    for (std::size_t packed = 0; packed < total_branch_assignments; ++packed) {
      for (std::size_t k = 0; k < m; ++k)
        branch_funcs[k] = (packed >> (2 * k)) & 3;
      double i_sum = 0.0;
      double j_sum = 0.0;
      for (std::size_t y_word = 0; y_word < words; ++y_word) {
        int b_parity = 0;
        int y_parity = 0;
        for (std::size_t k = 0; k < m; ++k) {
          const int y = detail::word_bit(y_word, m, k);
          b_parity ^= answer(branch_funcs[k], y);
          y_parity ^= y;
        }
        const int a0 = answer(af, 0);
        const int a1 = answer(af, 1);
        i_sum += ((a0 ^ b_parity) & 1) ? -1.0 : 1.0;
        j_sum += ((a1 ^ b_parity ^ y_parity) & 1) ? -1.0 : 1.0;
      }
      const double i_val = std::abs(i_sum) / static_cast<double>(words);
      const double j_val = std::abs(j_sum) / static_cast<double>(words);
      const double s = std::pow(i_val, inv_m) + std::pow(j_val, inv_m);
      if (s > best) best = s;
    }
  }
  return best;
}

}  // namespace starbell
