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

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "starbell/bell.hpp"
#include "starbell/measurement.hpp"
#include "starbell/network.hpp"
#include "starbell/rng.hpp"
#include "starbell/sequence.hpp"

namespace starbell {

/// One simulated run of the whole network: all inputs and all outcomes,
/// including Alice's per-branch bits before the parity wiring.
struct ShotRecord {
  int x = 0;
  std::vector<std::vector<int>> y;  // [branch][round]
  std::vector<std::vector<int>> b;  // [branch][round]
  std::vector<int> alice;           // a_k per branch
  int a = 0;                        // parity of alice bits
};

/// `uniform` draws every input fresh per run; `stratified` cycles the
/// joint input word deterministically through all settings (variance
/// reduction option, off by default).
enum class InputMode { uniform, stratified };

namespace detail {

// RNG lane layout: lane0 = run index, lane1 = branch (or branch_count for
// Alice's input), lane2 = round (or chain length for the a_k draw).
inline constexpr std::uint64_t kBootstrapSalt = 0x626f6f74ULL;  // "boot"

struct StratifiedWord {
  std::uint64_t word;

  int next_bit() {
    const int bit = static_cast<int>(word & 1);
    word >>= 1;
    return bit;
  }
};

}  // namespace detail

/// Simulate one run. Branch outcomes are drawn round by round from the
/// conditional Luders states; Alice's bits from the per-branch conditional
/// states after each branch's chain. Zero-probability outcomes are never
/// drawn because the draw uses the exact outcome probability.
inline ShotRecord sample_run(const NetworkConfig& config, std::uint64_t seed,
                             std::uint64_t run_index,
                             InputMode mode = InputMode::uniform) {
  const std::size_t m = config.branch_count();
  ShotRecord record;
  record.y.resize(m);
  record.b.resize(m);
  record.alice.resize(m);

  detail::StratifiedWord strat{run_index};
  if (mode == InputMode::uniform) {
    SplitStream xs(seed, run_index, m, 0);
    record.x = xs.next_bit();
  } else {
    record.x = strat.next_bit();
  }

  for (std::size_t k = 0; k < m; ++k) {
    const BranchConfig& chain = config.branches[k];
    BranchState state{initial_pair_state(config.sources[k]), 0};
    record.y[k].resize(chain.length());
    record.b[k].resize(chain.length());
    for (std::size_t j = 0; j < chain.length(); ++j) {
      SplitStream rng(seed, run_index, k, j);
      const int y = mode == InputMode::uniform ? rng.next_bit()
                                               : strat.next_bit();
      const double p0 =
          luders_conditional(state, chain.parties[j], y, 0).probability;
      const int b = rng.next_double() < p0 ? 0 : 1;
      const ConditionalOutcome out =
          luders_conditional(state, chain.parties[j], y, b);
      state = *out.state;
      record.y[k][j] = y;
      record.b[k][j] = b;
    }
    SplitStream arng(seed, run_index, k, chain.length());
    const ComplexMatrix effect = kron(ComplexMatrix::identity(2),
                                      alice_projector(config.theta, record.x, 0));
    const double p_a0 = trace_of_product(effect, state.rho.matrix()).real();
    record.alice[k] = arng.next_double() < p_a0 ? 0 : 1;
    record.a ^= record.alice[k];
  }
  return record;
}

/// Conditional count table with the JointDistribution cell layout:
/// [a][b_word][x][y_word], branch 0 in the most significant word bit.
struct ConditionalCounts {
  std::size_t branches = 0;
  std::vector<std::uint64_t> cells;
  std::uint64_t total = 0;

  explicit ConditionalCounts(std::size_t m = 1)
      : branches(m), cells(JointDistribution::table_size(m), 0) {}

  void add(int a, std::size_t b_word, int x, std::size_t y_word) {
    ++cells[JointDistribution::index(branches, a, b_word, x, y_word)];
    ++total;
  }

  void merge(const ConditionalCounts& other) {
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] += other.cells[i];
    total += other.total;
  }
};

namespace detail {

/// Plug-in (I, J, S) from a count table. Empty slices contribute a zero
/// correlator; estimate_bell rejects them up front, so this fallback only
/// matters inside bootstrap resamples.
inline void plugin_bell(const ConditionalCounts& counts, double& i_out,
                        double& j_out, double& s_out) {
  const std::size_t m = counts.branches;
  const std::size_t words = std::size_t{1} << m;
  double i_sum = 0.0;
  double j_sum = 0.0;
  for (int x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < words; ++y) {
      std::uint64_t slice_total = 0;
      double signed_sum = 0.0;
      const int y_parity = std::popcount(y) & 1;
      for (int a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < words; ++b) {
          const std::uint64_t c =
              counts.cells[JointDistribution::index(m, a, b, x, y)];
          slice_total += c;
          const int parity =
              x == 0 ? ((a + std::popcount(b)) & 1)
                     : ((a + std::popcount(b) + y_parity) & 1);
          signed_sum += (parity ? -1.0 : 1.0) * static_cast<double>(c);
        }
      if (slice_total == 0) continue;
      const double corr = signed_sum / static_cast<double>(slice_total);
      if (x == 0)
        i_sum += corr;
      else
        j_sum += corr;
    }
  const double scale = 1.0 / static_cast<double>(words);
  i_out = i_sum * scale;
  j_out = j_sum * scale;
  const double inv_m = 1.0 / static_cast<double>(m);
  s_out = std::pow(std::abs(i_out), inv_m) + std::pow(std::abs(j_out), inv_m);
}

/// Multinomial resample by the conditional-binomial method; resampling the
/// whole table with the run total is exactly a bootstrap over runs because
/// every run lands in exactly one cell.
template <typename Cells>
inline void multinomial_resample(const Cells& cells, std::uint64_t total,
                                 SplitStream& rng, Cells& out) {
  std::uint64_t remaining = total;
  double prob_left = 1.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out[i] = 0;
    if (remaining == 0 || cells[i] == 0) {
      prob_left -= static_cast<double>(cells[i]) / static_cast<double>(total);
      continue;
    }
    const double p = static_cast<double>(cells[i]) / static_cast<double>(total);
    double q = prob_left > 0.0 ? p / prob_left : 1.0;
    if (q >= 1.0) {
      out[i] = remaining;
      remaining = 0;
    } else {
      std::binomial_distribution<std::uint64_t> dist(remaining, q);
      out[i] = dist(rng);
      remaining -= out[i];
    }
    prob_left -= p;
  }
  // Rounding residue (if any) joins the last populated cell.
  if (remaining > 0)
    for (std::size_t i = cells.size(); i-- > 0;)
      if (cells[i] > 0) {
        out[i] += remaining;
        break;
      }
}

}  // namespace detail

/// Plug-in Bell estimates with a nonparametric bootstrap over runs.
/// Fewer than two resamples cannot measure spread: the report then carries
/// std_error = 0 and the degenerate flag.
inline BellReport estimate_bell(const ConditionalCounts& counts,
                                const PartySelection& sel,
                                std::size_t bootstrap_resamples,
                                std::uint64_t seed, std::uint64_t table_id = 0) {
  const std::size_t m = counts.branches;
  const std::size_t words = std::size_t{1} << m;
  for (int x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < words; ++y) {
      std::uint64_t slice_total = 0;
      for (int a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < words; ++b)
          slice_total += counts.cells[JointDistribution::index(m, a, b, x, y)];
      if (slice_total == 0)
        throw NumericalError("estimate_bell: no counts in slice (x=" +
                             std::to_string(x) + ", y=" + std::to_string(y) +
                             ")");
    }

  BellReport report;
  report.selection = sel;
  report.method = BellMethod::sampled;
  detail::plugin_bell(counts, report.i_s, report.j_s, report.s_value);

  if (bootstrap_resamples < 2) {
    report.std_error = 0.0;
    report.degenerate_error = true;
    return report;
  }

  std::vector<double> resampled(bootstrap_resamples);
  ConditionalCounts scratch(m);
  for (std::size_t r = 0; r < bootstrap_resamples; ++r) {
    SplitStream rng(seed, detail::kBootstrapSalt, table_id, r);
    detail::multinomial_resample(counts.cells, counts.total, rng,
                                 scratch.cells);
    double i, j;
    detail::plugin_bell(scratch, i, j, resampled[r]);
  }
  double mean = 0.0;
  for (double s : resampled) mean += s;
  mean /= static_cast<double>(bootstrap_resamples);
  double var = 0.0;
  for (double s : resampled) var += (s - mean) * (s - mean);
  var /= static_cast<double>(bootstrap_resamples - 1);
  report.std_error = std::sqrt(var);
  return report;
}

/// Joint count table of one branch's first two rounds together with
/// Alice's unwired bit: cells indexed by (x, y1, y2, b1, b2, a_k).
struct SequentialChshCounts {
  std::array<std::uint64_t, 64> cells{};
  std::uint64_t total = 0;

  static std::size_t index(int x, int y1, int y2, int b1, int b2, int ak) {
    return static_cast<std::size_t>(
        (((((x << 1) | y1) << 1 | y2) << 1 | b1) << 1 | b2) << 1 | ak);
  }

  void add(int x, int y1, int y2, int b1, int b2, int ak) {
    ++cells[index(x, y1, y2, b1, b2, ak)];
    ++total;
  }

  void merge(const SequentialChshCounts& other) {
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] += other.cells[i];
    total += other.total;
  }
};

namespace detail {

/// CHSH_j from the joint table, marginalizing the other round.
inline double plugin_chsh(const SequentialChshCounts& counts, int round) {
  double chsh = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int yj = 0; yj < 2; ++yj) {
      std::uint64_t slice_total = 0;
      double signed_sum = 0.0;
      for (int y_other = 0; y_other < 2; ++y_other)
        for (int b1 = 0; b1 < 2; ++b1)
          for (int b2 = 0; b2 < 2; ++b2)
            for (int ak = 0; ak < 2; ++ak) {
              const int y1 = round == 1 ? yj : y_other;
              const int y2 = round == 1 ? y_other : yj;
              const std::uint64_t c =
                  counts.cells[SequentialChshCounts::index(x, y1, y2, b1, b2,
                                                           ak)];
              slice_total += c;
              const int bj = round == 1 ? b1 : b2;
              signed_sum += (((ak + bj) & 1) ? -1.0 : 1.0) *
                            static_cast<double>(c);
            }
      if (slice_total == 0) continue;
      const double corr = signed_sum / static_cast<double>(slice_total);
      chsh += ((x & yj) ? -1.0 : 1.0) * corr;
    }
  return chsh;
}

}  // namespace detail

/// Sampled sequential CHSH pair of one branch plus its separation from the
/// projective trade-off curve, with bootstrap errors.
struct SequentialChshEstimate {
  std::size_t branch = 0;
  double chsh1 = 0.0;
  double chsh2 = 0.0;
  double se1 = 0.0;
  double se2 = 0.0;
  double bound_at_chsh1 = 0.0;  // sqrt(10) - chsh1/2, extended formula
  double excess = 0.0;          // chsh2 - bound_at_chsh1
  double excess_se = 0.0;
};

inline SequentialChshEstimate estimate_chsh(const SequentialChshCounts& counts,
                                            std::size_t branch,
                                            std::size_t bootstrap_resamples,
                                            std::uint64_t seed,
                                            std::uint64_t table_id) {
  SequentialChshEstimate est;
  est.branch = branch;
  est.chsh1 = detail::plugin_chsh(counts, 1);
  est.chsh2 = detail::plugin_chsh(counts, 2);
  est.bound_at_chsh1 = std::sqrt(10.0) - 0.5 * est.chsh1;
  est.excess = est.chsh2 - est.bound_at_chsh1;
  if (bootstrap_resamples < 2) return est;

  std::vector<double> c1(bootstrap_resamples), c2(bootstrap_resamples),
      ex(bootstrap_resamples);
  SequentialChshCounts scratch;
  for (std::size_t r = 0; r < bootstrap_resamples; ++r) {
    SplitStream rng(seed, detail::kBootstrapSalt, table_id, r);
    detail::multinomial_resample(counts.cells, counts.total, rng,
                                 scratch.cells);
    c1[r] = detail::plugin_chsh(scratch, 1);
    c2[r] = detail::plugin_chsh(scratch, 2);
    ex[r] = c2[r] - (std::sqrt(10.0) - 0.5 * c1[r]);
  }
  auto stddev = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double v : xs) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(xs.size() - 1));
  };
  est.se1 = stddev(c1);
  est.se2 = stddev(c2);
  est.excess_se = stddev(ex);
  return est;
}

/// One estimated Bell value, tagged with the branch subset it used.
struct ScopedBellEstimate {
  std::vector<std::size_t> branch_subset;  // 0-based branch indices
  BellReport report;
  double z_vs_local = 0.0;  // (S - 1) / std_error
};

struct ExperimentOptions {
  std::size_t bootstrap_resamples = 1000;
  unsigned threads = 1;
  InputMode input_mode = InputMode::uniform;
  /// When set, one line per run: x, all y bits, all b bits, a_k bits, a.
  std::ostream* run_log = nullptr;
};

struct ExperimentReport {
  std::uint64_t shots = 0;
  std::vector<ScopedBellEstimate> full_network;
  std::vector<ScopedBellEstimate> two_branch;
  std::vector<SequentialChshEstimate> chsh;
};

namespace detail {

struct ExperimentTables {
  std::vector<ConditionalCounts> full;              // per full selection
  std::vector<ConditionalCounts> pairs;             // per (pair, selection)
  std::vector<SequentialChshCounts> chsh;           // per eligible branch

  void merge(const ExperimentTables& other) {
    for (std::size_t i = 0; i < full.size(); ++i) full[i].merge(other.full[i]);
    for (std::size_t i = 0; i < pairs.size(); ++i)
      pairs[i].merge(other.pairs[i]);
    for (std::size_t i = 0; i < chsh.size(); ++i) chsh[i].merge(other.chsh[i]);
  }
};

inline std::string format_record(const ShotRecord& record) {
  std::string line = std::to_string(record.x);
  for (const auto& chain : record.y)
    for (int v : chain) line += " " + std::to_string(v);
  for (const auto& chain : record.b)
    for (int v : chain) line += " " + std::to_string(v);
  for (int v : record.alice) line += " " + std::to_string(v);
  line += " " + std::to_string(record.a);
  line += "\n";
  return line;
}

}  // namespace detail

/// Run `shots` simulated rounds and estimate, from the same record stream:
/// the network Bell value for every full selection, for every two-branch
/// subnetwork selection (outcomes re-wired to the pair's parity), and the
/// per-branch sequential CHSH pairs from Alice's unwired bits. Counting is
/// a single pass; nothing is re-simulated per analysis.
inline ExperimentReport experiment_report(const NetworkConfig& config,
                                          std::uint64_t shots,
                                          std::uint64_t seed,
                                          const ExperimentOptions& options = {}) {
  require_valid(config);
  if (shots < 1) throw ValidationError("experiment_report: shots must be >= 1");
  const std::size_t m = config.branch_count();

  const std::vector<PartySelection> full_sels = enumerate_selections(config);
  struct PairScope {
    std::vector<std::size_t> branches;
    std::vector<PartySelection> selections;
  };
  std::vector<PairScope> pair_scopes;
  if (m > 2)
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t l = k + 1; l < m; ++l) {
        PairScope scope;
        scope.branches = {k, l};
        scope.selections = enumerate_selections(subnetwork(config, {k, l}));
        pair_scopes.push_back(std::move(scope));
      }
  std::vector<std::size_t> chsh_branches;
  for (std::size_t k = 0; k < m; ++k)
    if (config.branches[k].length() >= 2) chsh_branches.push_back(k);

  auto make_tables = [&] {
    detail::ExperimentTables t;
    for (std::size_t i = 0; i < full_sels.size(); ++i)
      t.full.emplace_back(m);
    for (const auto& scope : pair_scopes)
      for (std::size_t i = 0; i < scope.selections.size(); ++i)
        t.pairs.emplace_back(2);
    t.chsh.resize(chsh_branches.size());
    return t;
  };

  const unsigned threads = std::max(1u, options.threads);
  const std::uint64_t chunk =
      (shots + threads - 1) / static_cast<std::uint64_t>(threads);
  std::vector<detail::ExperimentTables> partials(threads);
  std::vector<std::string> log_chunks(options.run_log ? threads : 0);

  auto worker = [&](unsigned t) {
    detail::ExperimentTables tables = make_tables();
    std::string log;
    const std::uint64_t begin = t * chunk;
    const std::uint64_t end = std::min<std::uint64_t>(shots, begin + chunk);
    for (std::uint64_t run = begin; run < end; ++run) {
      const ShotRecord record =
          sample_run(config, seed, run, options.input_mode);
      std::size_t table = 0;
      for (const auto& sel : full_sels) {
        std::size_t b_word = 0, y_word = 0;
        for (std::size_t k = 0; k < m; ++k) {
          b_word = (b_word << 1) |
                   static_cast<std::size_t>(record.b[k][sel.depths[k] - 1]);
          y_word = (y_word << 1) |
                   static_cast<std::size_t>(record.y[k][sel.depths[k] - 1]);
        }
        tables.full[table++].add(record.a, b_word, record.x, y_word);
      }
      table = 0;
      for (const auto& scope : pair_scopes) {
        const std::size_t k = scope.branches[0];
        const std::size_t l = scope.branches[1];
        const int a_pair = record.alice[k] ^ record.alice[l];
        for (const auto& sel : scope.selections) {
          const std::size_t b_word =
              (static_cast<std::size_t>(record.b[k][sel.depths[0] - 1]) << 1) |
              static_cast<std::size_t>(record.b[l][sel.depths[1] - 1]);
          const std::size_t y_word =
              (static_cast<std::size_t>(record.y[k][sel.depths[0] - 1]) << 1) |
              static_cast<std::size_t>(record.y[l][sel.depths[1] - 1]);
          tables.pairs[table++].add(a_pair, b_word, record.x, y_word);
        }
      }
      for (std::size_t i = 0; i < chsh_branches.size(); ++i) {
        const std::size_t k = chsh_branches[i];
        tables.chsh[i].add(record.x, record.y[k][0], record.y[k][1],
                           record.b[k][0], record.b[k][1], record.alice[k]);
      }
      if (options.run_log) log += detail::format_record(record);
    }
    partials[t] = std::move(tables);
    if (options.run_log) log_chunks[t] = std::move(log);
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  detail::ExperimentTables tables = std::move(partials[0]);
  for (unsigned t = 1; t < threads; ++t) tables.merge(partials[t]);
  if (options.run_log)
    for (const auto& log : log_chunks) (*options.run_log) << log;

  ExperimentReport report;
  report.shots = shots;
  std::uint64_t table_id = 0;
  std::vector<std::size_t> all_branches(m);
  for (std::size_t k = 0; k < m; ++k) all_branches[k] = k;
  for (std::size_t i = 0; i < full_sels.size(); ++i) {
    ScopedBellEstimate est;
    est.branch_subset = all_branches;
    est.report = estimate_bell(tables.full[i], full_sels[i],
                               options.bootstrap_resamples, seed, table_id++);
    const double se = est.report.std_error.value_or(0.0);
    est.z_vs_local = se > 0.0 ? (est.report.s_value - 1.0) / se : 0.0;
    report.full_network.push_back(std::move(est));
  }
  std::size_t pair_table = 0;
  for (const auto& scope : pair_scopes)
    for (const auto& sel : scope.selections) {
      ScopedBellEstimate est;
      est.branch_subset = scope.branches;
      est.report = estimate_bell(tables.pairs[pair_table++], sel,
                                 options.bootstrap_resamples, seed, table_id++);
      const double se = est.report.std_error.value_or(0.0);
      est.z_vs_local = se > 0.0 ? (est.report.s_value - 1.0) / se : 0.0;
      report.two_branch.push_back(std::move(est));
    }
  for (std::size_t i = 0; i < chsh_branches.size(); ++i)
    report.chsh.push_back(estimate_chsh(tables.chsh[i], chsh_branches[i],
                                        options.bootstrap_resamples, seed,
                                        table_id++));
  return report;
}

}  // namespace starbell
