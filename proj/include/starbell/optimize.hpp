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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "starbell/bell.hpp"
#include "starbell/network.hpp"
#include "starbell/rng.hpp"

namespace starbell {

/// Parameter tying for the measurement optimization.
///   none:      every eta_z/eta_x of every party is free.
///   per_depth: parties at the same depth share (eta_z_j, eta_x_j) across
///              branches; the two axes stay independent.
///   full:      one sharpness for every party and both axes.
/// theta is always free.
enum class Symmetry { none, per_depth, full };

enum class ObjectiveKind { worst_case, average };

struct OptimizationProblem {
  std::vector<std::size_t> chain_lengths;  // n_k per branch
  Symmetry symmetry = Symmetry::per_depth;
  ObjectiveKind objective = ObjectiveKind::worst_case;

  static OptimizationProblem homogeneous(std::size_t branches,
                                         std::size_t depth,
                                         Symmetry symmetry = Symmetry::per_depth,
                                         ObjectiveKind objective =
                                             ObjectiveKind::worst_case) {
    OptimizationProblem p;
    p.chain_lengths.assign(branches, depth);
    p.symmetry = symmetry;
    p.objective = objective;
    return p;
  }

  std::size_t branch_count() const { return chain_lengths.size(); }
  std::size_t max_depth() const {
    return *std::max_element(chain_lengths.begin(), chain_lengths.end());
  }
};

/// min_s S_s over every selection, from the closed form.
inline double worst_case_objective(const NetworkConfig& config) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& sel : enumerate_selections(config))
    worst = std::min(worst, closed_form_s(config, sel));
  return worst;
}

/// Mean of S_s over every selection.
inline double average_objective(const NetworkConfig& config) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& sel : enumerate_selections(config)) {
    sum += closed_form_s(config, sel);
    ++count;
  }
  return sum / static_cast<double>(count);
}

struct OptimizationResult {
  NetworkConfig best_config;
  double best_objective = 0.0;
  /// One entry per multistart instance: (start index, its final objective).
  std::vector<std::pair<std::size_t, double>> trace;
};

namespace detail {

// Parameter vector layout: params[0] = theta, the rest are sharpness values
// whose meaning depends on the symmetry mode.
inline std::size_t parameter_count(const OptimizationProblem& problem) {
  switch (problem.symmetry) {
    case Symmetry::full:
      return 2;
    case Symmetry::per_depth:
      return 1 + 2 * problem.max_depth();
    case Symmetry::none: {
      std::size_t etas = 0;
      for (std::size_t n : problem.chain_lengths) etas += 2 * n;
      return 1 + etas;
    }
  }
  return 0;
}

inline NetworkConfig config_from_params(const OptimizationProblem& problem,
                                        const std::vector<double>& params) {
  NetworkConfig config;
  config.theta = params[0];
  std::size_t cursor = 1;
  for (std::size_t k = 0; k < problem.branch_count(); ++k) {
    BranchConfig branch;
    for (std::size_t j = 0; j < problem.chain_lengths[k]; ++j) {
      PartySetting setting;
      switch (problem.symmetry) {
        case Symmetry::full:
          setting = {params[1], params[1]};
          break;
        case Symmetry::per_depth:
          setting = {params[1 + 2 * j], params[2 + 2 * j]};
          break;
        case Symmetry::none:
          setting = {params[cursor], params[cursor + 1]};
          cursor += 2;
          break;
      }
      branch.parties.push_back(setting);
    }
    config.branches.push_back(std::move(branch));
    config.sources.push_back({1.0});
  }
  return config;
}

/// Coarse scan followed by a golden-section refinement; robust on the
/// piecewise-smooth min-of-terms objectives this module maximizes.
template <typename F>
inline double maximize_1d(const F& f, double lo, double hi, double& best_x) {
  constexpr int kGridPoints = 33;
  double best_f = -std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i < kGridPoints; ++i) {
    const double x = lo + (hi - lo) * i / (kGridPoints - 1);
    const double v = f(x);
    if (v > best_f) {
      best_f = v;
      best_i = i;
    }
  }
  double a = lo + (hi - lo) * std::max(best_i - 1, 0) / (kGridPoints - 1);
  double b = lo + (hi - lo) * std::min(best_i + 1, kGridPoints - 1) /
                      (kGridPoints - 1);
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < 80 && (b - a) > 1e-13; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    }
  }
  const double mid = 0.5 * (a + b);
  const double fm = f(mid);
  if (fm >= best_f) {
    best_x = mid;
    return fm;
  }
  best_x = lo + (hi - lo) * best_i / (kGridPoints - 1);
  return best_f;
}

struct StartOutcome {
  std::vector<double> params;
  double objective = -std::numeric_limits<double>::infinity();
};

/// Image of a parameter vector under the objective's exact symmetry:
/// swapping every eta_z with its eta_x and reflecting theta about pi/4
/// leaves S_s unchanged.
inline std::vector<double> zx_mirror(const OptimizationProblem& problem,
                                     const std::vector<double>& params) {
  std::vector<double> out = params;
  out[0] = std::numbers::pi / 2 - params[0];
  if (problem.symmetry != Symmetry::full)
    for (std::size_t i = 1; i + 1 < out.size(); i += 2)
      std::swap(out[i], out[i + 1]);
  return out;
}

/// Allocation-free objective used inside the search loops. Selections pick
/// their depth independently per branch and every per-branch term is
/// non-negative, so the min (and mean) over selections factorizes into
/// per-branch quantities; optimize()'s final answer is re-evaluated through
/// worst_case_objective / average_objective on the emitted config.
///
/// A positive temperature replaces the per-branch min with the smooth
/// lower bound softmin_tau(T) = -tau log(sum_j exp(-T_j / tau)). The
/// worst-case objective is kinked along its equalization ridges, which
/// stalls line-search methods; the homotopy over decreasing tau removes
/// the kink and hands the exact problem an already-converged start.
class FastObjective {
 public:
  FastObjective(const OptimizationProblem& problem, double tau = 0.0)
      : problem_(&problem), tau_(tau) {}

  double operator()(const std::vector<double>& params) const {
    const double cos_t = std::cos(params[0]);
    const double sin_t = std::sin(params[0]);
    const std::size_t m = problem_->branch_count();
    const double inv_m = 1.0 / static_cast<double>(m);
    const bool worst = problem_->objective == ObjectiveKind::worst_case;
    double result = 1.0;
    std::size_t cursor = 1;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t n = problem_->chain_lengths[k];
      double f_x = 1.0, f_z = 1.0, scale = 1.0;
      double min_term = std::numeric_limits<double>::infinity();
      double soft_sum = 0.0;
      double sum_root = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double eta_z = 1.0, eta_x = 1.0;
        switch (problem_->symmetry) {
          case Symmetry::full:
            eta_z = eta_x = params[1];
            break;
          case Symmetry::per_depth:
            eta_z = params[1 + 2 * j];
            eta_x = params[2 + 2 * j];
            break;
          case Symmetry::none:
            eta_z = params[cursor];
            eta_x = params[cursor + 1];
            cursor += 2;
            break;
        }
        const double term =
            scale * (eta_z * cos_t * f_x + eta_x * sin_t * f_z);
        min_term = std::min(min_term, term);
        if (tau_ > 0.0) soft_sum += std::exp(-term / tau_);
        sum_root += std::pow(term, inv_m);
        f_x *= 1.0 + std::sqrt(std::max(0.0, 1.0 - eta_x * eta_x));
        f_z *= 1.0 + std::sqrt(std::max(0.0, 1.0 - eta_z * eta_z));
        scale *= 0.5;
      }
      double branch_value;
      if (!worst) {
        branch_value = sum_root / static_cast<double>(n);
        result *= branch_value;
        continue;
      }
      branch_value =
          tau_ > 0.0 ? std::max(0.0, -tau_ * std::log(soft_sum)) : min_term;
      result *= std::pow(branch_value, inv_m);
    }
    return result;
  }

 private:
  const OptimizationProblem* problem_;
  double tau_;
};

inline StartOutcome run_single_start(const OptimizationProblem& problem,
                                     std::vector<double> params,
                                     std::uint64_t seed, std::size_t start) {
  const std::size_t dim = params.size();
  auto upper = [&](std::size_t i) {
    return i == 0 ? std::numbers::pi / 2 : 1.0;
  };
  const FastObjective exact(problem);
  SplitStream dir_rng(seed, 0x706f6cULL, start, 0);

  auto line_max = [&](const FastObjective& obj,
                      const std::vector<double>& direction, double lo,
                      double hi, double& best) {
    auto slice = [&](double t) {
      std::vector<double> p = params;
      for (std::size_t i = 0; i < dim; ++i)
        p[i] = std::clamp(p[i] + t * direction[i], 0.0, upper(i));
      return obj(p);
    };
    double t = 0.0;
    const double v = maximize_1d(slice, lo, hi, t);
    if (v > best) {
      best = v;
      for (std::size_t i = 0; i < dim; ++i)
        params[i] = std::clamp(params[i] + t * direction[i], 0.0, upper(i));
      return true;
    }
    return false;
  };

  // Coordinate sweeps with a Powell-style search along each sweep's net
  // displacement. Sufficient on the smooth (softened) objectives.
  auto sweep_refine = [&](const FastObjective& obj, double& best) {
    for (int sweep = 0; sweep < 60; ++sweep) {
      const double before = best;
      const std::vector<double> at_sweep_start = params;
      for (std::size_t i = 0; i < dim; ++i) {
        auto slice = [&](double x) {
          std::vector<double> p = params;
          p[i] = x;
          return obj(p);
        };
        double x = params[i];
        const double v = maximize_1d(slice, 0.0, upper(i), x);
        if (v > best) {
          best = v;
          params[i] = x;
        }
      }
      std::vector<double> ridge(dim);
      double norm = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        ridge[i] = params[i] - at_sweep_start[i];
        norm += ridge[i] * ridge[i];
      }
      if (norm > 1e-24) line_max(obj, ridge, -1.0, 4.0, best);
      if (best - before < 1e-13) break;
    }
  };

  // Full arsenal for the exact kinked objective: sweeps, pairwise
  // diagonals, random directions over a ladder of radii, and a long-range
  // extrapolation along each phase's displacement.
  auto exact_refine = [&]() {
    double best = exact(params);
    for (int phase = 0; phase < 40; ++phase) {
      const double phase_start = best;
      const std::vector<double> at_phase_start = params;
      sweep_refine(exact, best);
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i + 1; j < dim; ++j)
          for (const double sj : {1.0, -1.0}) {
            std::vector<double> diag(dim, 0.0);
            diag[i] = 1.0;
            diag[j] = sj;
            line_max(exact, diag, -0.5, 0.5, best);
          }
      for (double radius : {0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3, 3e-4, 1e-4,
                            3e-5, 1e-5, 3e-6, 1e-6}) {
        for (int round = 0; round < 30; ++round) {
          std::vector<double> direction(dim);
          double norm = 0.0;
          for (auto& d : direction) {
            d = 2.0 * dir_rng.next_double() - 1.0;
            norm += d * d;
          }
          norm = std::sqrt(norm);
          if (norm < 1e-12) continue;
          for (auto& d : direction) d /= norm;
          line_max(exact, direction, -radius, radius, best);
        }
      }
      std::vector<double> phase_dir(dim);
      double norm = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        phase_dir[i] = params[i] - at_phase_start[i];
        norm += phase_dir[i] * phase_dir[i];
      }
      if (norm > 1e-24) line_max(exact, phase_dir, -2.0, 16.0, best);
      if (best - phase_start < 1e-13) break;
    }
    return best;
  };

  // Homotopy: relax the kinked worst-case objective through decreasing
  // softmin temperatures, then refine the exact objective. The softened
  // optima sit O(tau) away from the exact one, so an entry point that was
  // already better is restored and refined directly.
  auto full_refine = [&]() {
    const std::vector<double> entry = params;
    const double entry_value = exact(params);
    if (problem.objective == ObjectiveKind::worst_case)
      for (double tau : {0.1, 0.02, 4e-3, 8e-4, 1.6e-4, 3e-5, 6e-6}) {
        const FastObjective soft(problem, tau);
        double soft_best = soft(params);
        sweep_refine(soft, soft_best);
      }
    double best = exact_refine();
    if (best < entry_value) {
      params = entry;
      best = exact_refine();
    }
    return best;
  };

  double best = full_refine();
  // Basin hops: perturb the incumbent with shrinking amplitudes and
  // re-refine, keeping the better endpoint each time.
  SplitStream hop_rng(seed, 0x686f7073ULL, start, 0);
  for (const double amplitude : {0.4, 0.25, 0.15, 0.1, 0.06}) {
    const std::vector<double> incumbent = params;
    const double incumbent_best = best;
    for (std::size_t i = 0; i < dim; ++i) {
      const double span = amplitude * (i == 0 ? std::numbers::pi / 2 : 1.0);
      params[i] = std::clamp(
          params[i] + span * (2.0 * hop_rng.next_double() - 1.0), 0.0,
          upper(i));
    }
    const double hop_best = full_refine();
    if (hop_best <= best) {
      params = incumbent;
      best = incumbent_best;
    } else {
      best = hop_best;
    }
  }
  // Ridges that run across the Z/X symmetry have their crest on the
  // symmetric subspace: restart the exact refinement from the midpoint with
  // the mirrored point and keep the better endpoint. No homotopy here; the
  // softened stages would drag the midpoint off the symmetric subspace.
  {
    const std::vector<double> asym_params = params;
    const double asym_best = best;
    const std::vector<double> mirrored = zx_mirror(problem, params);
    for (std::size_t i = 0; i < dim; ++i)
      params[i] = 0.5 * (params[i] + mirrored[i]);
    const double sym_best = exact_refine();
    if (sym_best > asym_best) {
      best = sym_best;
    } else {
      params = asym_params;
      best = asym_best;
    }
  }
  // Ties at the sharp boundary resolve to exactly eta = 1.
  for (std::size_t i = 1; i < dim; ++i) {
    if (params[i] == 1.0) continue;
    std::vector<double> p = params;
    p[i] = 1.0;
    const double v = exact(p);
    if (v >= best - 1e-12) {
      params = std::move(p);
      best = v;
    }
  }
  const double final_objective = exact(params);
  return {std::move(params), final_objective};
}

}  // namespace detail

/// Derivative-free maximization of the worst-case (or average) closed-form
/// Bell value: multistart coordinate ascent with golden-section line
/// searches, plus random-direction polishing. `budget` counts the starts;
/// the first one begins at the all-sharp, theta = pi/4 point.
inline OptimizationResult optimize(const OptimizationProblem& problem,
                                   std::size_t budget, std::uint64_t seed,
                                   unsigned threads = 1) {
  if (problem.chain_lengths.empty())
    throw ValidationError("optimize: need at least one branch");
  for (std::size_t n : problem.chain_lengths)
    if (n == 0)
      throw ValidationError("optimize: chain lengths must be positive");
  if (budget == 0) throw ValidationError("optimize: budget must be >= 1");

  const std::size_t dim = detail::parameter_count(problem);
  auto initial_params = [&](std::size_t start) {
    std::vector<double> params(dim);
    if (start == 0) {
      params[0] = std::numbers::pi / 4;
      for (std::size_t i = 1; i < dim; ++i) params[i] = 1.0;
    } else {
      SplitStream rng(seed, 0x696e6974ULL, start, 0);
      params[0] = rng.next_double() * std::numbers::pi / 2;
      for (std::size_t i = 1; i < dim; ++i) params[i] = rng.next_double();
    }
    return params;
  };

  std::vector<detail::StartOutcome> outcomes(budget);
  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s)
      outcomes[s] =
          detail::run_single_start(problem, initial_params(s), seed, s);
  };
  const unsigned workers =
      std::min<unsigned>(std::max(1u, threads), static_cast<unsigned>(budget));
  if (workers == 1) {
    run_range(0, budget);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (budget + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(budget, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  // Pure max-reduction in start order: deterministic for any schedule.
  OptimizationResult result;
  std::size_t best_start = 0;
  for (std::size_t s = 0; s < budget; ++s) {
    result.trace.emplace_back(s, outcomes[s].objective);
    if (outcomes[s].objective > outcomes[best_start].objective) best_start = s;
  }
  result.best_config =
      detail::config_from_params(problem, outcomes[best_start].params);
  result.best_objective =
      problem.objective == ObjectiveKind::worst_case
          ? worst_case_objective(result.best_config)
          : average_objective(result.best_config);
  return result;
}

}  // namespace starbell
