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

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "starbell/starbell.hpp"

namespace {

using namespace starbell;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitValidationError = 3;
constexpr int kExitNumericalError = 4;

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string now_utc_iso8601() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Recorded verbatim in every output file so a run can be reproduced from
// its artifacts alone.
struct RunManifest {
  std::string command;
  std::string config = "-";
  std::uint64_t seed = 0;
  std::uint64_t shots = 0;
  std::string output = "-";
  std::string version = STARBELL_VERSION;
  std::string timestamp;

  std::string comment_line() const {
    return "# manifest command=" + command + " config=" + config +
           " seed=" + std::to_string(seed) +
           " shots=" + std::to_string(shots) + " output=" + output +
           " version=" + version + " timestamp=" + timestamp + "\n";
  }

  nlohmann::ordered_json to_json() const {
    return {{"command", command},   {"config", config},
            {"seed", seed},         {"shots", shots},
            {"output", output},     {"version", version},
            {"timestamp", timestamp}};
  }
};

struct OutputTarget {
  std::ofstream file;
  std::ostream* stream = &std::cout;

  explicit OutputTarget(const std::string& path) {
    if (path.empty() || path == "-") return;
    file.open(path, std::ios::binary);
    if (!file) throw ConfigError("cannot open output file: " + path);
    stream = &file;
  }
};

std::string branch_list_label(const std::vector<std::size_t>& branches) {
  std::string out;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(branches[i] + 1);  // 1-based for humans
  }
  return out;
}

std::string scope_label(std::size_t branches_used) {
  return std::to_string(branches_used) + "-local";
}

NetworkConfig load_and_validate(const std::string& path) {
  const NetworkConfig config = load_config_file(path);
  const auto violations = validate(config);
  if (!violations.empty()) {
    std::string msg = "config " + path + " failed validation:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ValidationError(msg);
  }
  return config;
}

template <typename Task>
void parallel_indexed(std::size_t count, unsigned threads, Task&& task) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin < end)
      pool.emplace_back([&task, begin, end] {
        for (std::size_t i = begin; i < end; ++i) task(i);
      });
  }
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const std::string& config_path, const std::string& output,
                 const std::string& format, unsigned threads,
                 const std::string& timestamp) {
  const NetworkConfig config = load_and_validate(config_path);
  const std::size_t m = config.branch_count();

  struct Scope {
    std::vector<std::size_t> branches;
    NetworkConfig config;
  };
  std::vector<Scope> scopes;
  std::vector<std::size_t> all(m);
  for (std::size_t k = 0; k < m; ++k) all[k] = k;
  scopes.push_back({all, config});
  if (m > 2)
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t l = k + 1; l < m; ++l)
        scopes.push_back({{k, l}, subnetwork(config, {k, l})});

  struct EvaluateRow {
    const Scope* scope;
    PartySelection selection;
    double i_s = 0, j_s = 0, s_born = 0, s_closed = 0;
  };
  std::vector<EvaluateRow> rows;
  for (const auto& scope : scopes)
    for (const auto& sel : enumerate_selections(scope.config))
      rows.push_back({&scope, sel});
  parallel_indexed(rows.size(), threads, [&](std::size_t i) {
    EvaluateRow& row = rows[i];
    const BellReport born =
        bell_value(joint_distribution(row.scope->config, row.selection),
                   row.selection);
    row.i_s = born.i_s;
    row.j_s = born.j_s;
    row.s_born = born.s_value;
    row.s_closed = closed_form_s(row.scope->config, row.selection);
  });

  struct ChshRow {
    std::size_t branch;
    double chsh1, chsh2;
    std::optional<double> bound, excess;
  };
  std::vector<ChshRow> chsh_rows;
  for (std::size_t k = 0; k < m; ++k) {
    if (config.branches[k].length() < 2) continue;
    const ChshPair pair = chsh_pair(config, k);
    ChshRow row{k, pair.chsh1, pair.chsh2, std::nullopt, std::nullopt};
    if (pair.chsh1 >= kProjectiveBoundLow &&
        pair.chsh1 <= kProjectiveBoundHigh) {
      row.bound = projective_bound(pair.chsh1);
      row.excess = pair.chsh2 - *row.bound;
    }
    chsh_rows.push_back(row);
  }

  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.config = config_path;
  manifest.output = output.empty() ? "-" : output;
  manifest.timestamp = timestamp;

  OutputTarget target(output);
  std::ostream& os = *target.stream;
  if (format == "json") {
    nlohmann::ordered_json root;
    root["manifest"] = manifest.to_json();
    auto selections = nlohmann::ordered_json::array();
    for (const auto& row : rows)
      selections.push_back(
          {{"scope", scope_label(row.scope->branches.size())},
           {"branches", branch_list_label(row.scope->branches)},
           {"selection", selection_label(row.selection)},
           {"i_s", row.i_s},
           {"j_s", row.j_s},
           {"s_born", row.s_born},
           {"s_closed", row.s_closed},
           {"difference", row.s_born - row.s_closed}});
    root["selections"] = std::move(selections);
    auto chsh = nlohmann::ordered_json::array();
    for (const auto& row : chsh_rows) {
      nlohmann::ordered_json item = {{"branch", row.branch + 1},
                                     {"chsh1", row.chsh1},
                                     {"chsh2", row.chsh2}};
      if (row.bound) {
        item["projective_bound"] = *row.bound;
        item["excess"] = *row.excess;
      }
      chsh.push_back(std::move(item));
    }
    root["chsh"] = std::move(chsh);
    os << root.dump(2) << "\n";
  } else {
    os << manifest.comment_line();
    os << "scope,branches,selection,i_s,j_s,s_born,s_closed,difference\n";
    for (const auto& row : rows)
      os << scope_label(row.scope->branches.size()) << ",\""
         << branch_list_label(row.scope->branches) << "\",\""
         << selection_label(row.selection) << "\"," << fmt12(row.i_s) << ","
         << fmt12(row.j_s) << "," << fmt12(row.s_born) << ","
         << fmt12(row.s_closed) << "," << fmt12(row.s_born - row.s_closed)
         << "\n";
    os << "# chsh\n";
    os << "branch,chsh1,chsh2,projective_bound,excess\n";
    for (const auto& row : chsh_rows) {
      os << (row.branch + 1) << "," << fmt12(row.chsh1) << ","
         << fmt12(row.chsh2) << ",";
      if (row.bound)
        os << fmt12(*row.bound) << "," << fmt12(*row.excess);
      else
        os << ",";
      os << "\n";
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sample

int cmd_sample(const std::string& config_path, std::uint64_t shots,
               std::uint64_t seed, std::size_t bootstrap, unsigned threads,
               bool stratified, const std::string& run_log_path,
               const std::string& output, const std::string& format,
               const std::string& timestamp) {
  const NetworkConfig config = load_and_validate(config_path);
  if (shots < 1) throw ValidationError("sample: --shots must be >= 1");

  ExperimentOptions options;
  options.bootstrap_resamples = bootstrap;
  options.threads = threads;
  options.input_mode = stratified ? InputMode::stratified : InputMode::uniform;
  std::ofstream run_log;
  if (!run_log_path.empty()) {
    run_log.open(run_log_path, std::ios::binary);
    if (!run_log)
      throw ConfigError("cannot open run log file: " + run_log_path);
    run_log << "# x, then y bits and b bits (branch-major, round within "
               "branch), alice bits per branch, parity a\n";
    options.run_log = &run_log;
  }

  const ExperimentReport report =
      experiment_report(config, shots, seed, options);

  RunManifest manifest;
  manifest.command = "sample";
  manifest.config = config_path;
  manifest.seed = seed;
  manifest.shots = shots;
  manifest.output = output.empty() ? "-" : output;
  manifest.timestamp = timestamp;

  OutputTarget target(output);
  std::ostream& os = *target.stream;
  if (format == "json") {
    nlohmann::ordered_json root;
    root["manifest"] = manifest.to_json();
    auto selections = nlohmann::ordered_json::array();
    auto add = [&](const ScopedBellEstimate& est) {
      selections.push_back(
          {{"scope", scope_label(est.branch_subset.size())},
           {"branches", branch_list_label(est.branch_subset)},
           {"selection", selection_label(est.report.selection)},
           {"i_hat", est.report.i_s},
           {"j_hat", est.report.j_s},
           {"s_hat", est.report.s_value},
           {"std_error", est.report.std_error.value_or(0.0)},
           {"z_score_vs_1", est.z_vs_local},
           {"degenerate_error", est.report.degenerate_error}});
    };
    for (const auto& est : report.full_network) add(est);
    for (const auto& est : report.two_branch) add(est);
    root["selections"] = std::move(selections);
    auto chsh = nlohmann::ordered_json::array();
    for (const auto& est : report.chsh)
      chsh.push_back({{"branch", est.branch + 1},
                      {"chsh1", est.chsh1},
                      {"chsh1_std_error", est.se1},
                      {"chsh2", est.chsh2},
                      {"chsh2_std_error", est.se2},
                      {"projective_bound", est.bound_at_chsh1},
                      {"excess", est.excess},
                      {"excess_std_error", est.excess_se}});
    root["chsh"] = std::move(chsh);
    os << root.dump(2) << "\n";
  } else {
    os << manifest.comment_line();
    os << "scope,branches,selection,i_hat,j_hat,s_hat,std_error,"
          "z_score_vs_1,degenerate_error\n";
    auto add = [&](const ScopedBellEstimate& est) {
      os << scope_label(est.branch_subset.size()) << ",\""
         << branch_list_label(est.branch_subset) << "\",\""
         << selection_label(est.report.selection) << "\","
         << fmt12(est.report.i_s) << "," << fmt12(est.report.j_s) << ","
         << fmt12(est.report.s_value) << ","
         << fmt12(est.report.std_error.value_or(0.0)) << ","
         << fmt12(est.z_vs_local) << ","
         << (est.report.degenerate_error ? 1 : 0) << "\n";
    };
    for (const auto& est : report.full_network) add(est);
    for (const auto& est : report.two_branch) add(est);
    os << "# chsh\n";
    os << "branch,chsh1,chsh1_std_error,chsh2,chsh2_std_error,"
          "projective_bound,excess,excess_std_error\n";
    for (const auto& est : report.chsh)
      os << (est.branch + 1) << "," << fmt12(est.chsh1) << ","
         << fmt12(est.se1) << "," << fmt12(est.chsh2) << "," << fmt12(est.se2)
         << "," << fmt12(est.bound_at_chsh1) << "," << fmt12(est.excess)
         << "," << fmt12(est.excess_se) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// optimize

int cmd_optimize(std::size_t m, std::size_t n,
                 const std::string& symmetry_name,
                 const std::string& objective_name, std::size_t budget,
                 std::uint64_t seed, unsigned threads,
                 const std::string& emit_config, const std::string& output,
                 const std::string& format, const std::string& timestamp) {
  Symmetry symmetry;
  if (symmetry_name == "none")
    symmetry = Symmetry::none;
  else if (symmetry_name == "per-depth")
    symmetry = Symmetry::per_depth;
  else if (symmetry_name == "full")
    symmetry = Symmetry::full;
  else
    throw ConfigError("unknown symmetry: " + symmetry_name +
                      " (expected none|per-depth|full)");
  ObjectiveKind objective;
  if (objective_name == "worst")
    objective = ObjectiveKind::worst_case;
  else if (objective_name == "average")
    objective = ObjectiveKind::average;
  else
    throw ConfigError("unknown objective: " + objective_name +
                      " (expected worst|average)");
  if (m == 0 || n == 0)
    throw ValidationError("optimize: --m and --n must be >= 1");

  const OptimizationProblem problem =
      OptimizationProblem::homogeneous(m, n, symmetry, objective);
  const OptimizationResult result = optimize(problem, budget, seed, threads);

  if (!emit_config.empty()) save_config_file(result.best_config, emit_config);

  RunManifest manifest;
  manifest.command = "optimize";
  manifest.seed = seed;
  manifest.output = output.empty() ? "-" : output;
  manifest.timestamp = timestamp;

  OutputTarget target(output);
  std::ostream& os = *target.stream;
  if (format == "json") {
    nlohmann::ordered_json root;
    root["manifest"] = manifest.to_json();
    root["problem"] = {{"branches", m},
                       {"chain_length", n},
                       {"symmetry", symmetry_name},
                       {"objective", objective_name},
                       {"budget", budget}};
    root["best_objective"] = result.best_objective;
    root["theta_degrees"] =
        result.best_config.theta * 180.0 / std::numbers::pi;
    root["config"] = config_to_json(result.best_config);
    if (!emit_config.empty()) root["emitted_config"] = emit_config;
    auto trace = nlohmann::ordered_json::array();
    for (const auto& [start, objective_value] : result.trace)
      trace.push_back({{"start", start}, {"objective", objective_value}});
    root["trace"] = std::move(trace);
    os << root.dump(2) << "\n";
  } else {
    os << manifest.comment_line();
    os << "key,value\n";
    os << "best_objective," << fmt12(result.best_objective) << "\n";
    os << "theta_degrees,"
       << fmt12(result.best_config.theta * 180.0 / std::numbers::pi) << "\n";
    os << "# parties\n";
    os << "branch,depth,eta_z,eta_x\n";
    for (std::size_t k = 0; k < result.best_config.branch_count(); ++k) {
      const auto& chain = result.best_config.branches[k].parties;
      for (std::size_t j = 0; j < chain.size(); ++j)
        os << (k + 1) << "," << (j + 1) << "," << fmt12(chain[j].eta_z) << ","
           << fmt12(chain[j].eta_x) << "\n";
    }
    os << "# trace\n";
    os << "start,objective\n";
    for (const auto& [start, objective_value] : result.trace)
      os << start << "," << fmt12(objective_value) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// tradeoff

int cmd_tradeoff(std::size_t points, const std::string& output,
                 const std::string& format, const std::string& timestamp) {
  if (points < 2) throw ValidationError("tradeoff: --points must be >= 2");
  const double sqrt10 = std::sqrt(10.0);
  const double tsirelson = 2.0 * std::numbers::sqrt2;

  struct CurvePoint {
    const char* curve;
    double parameter, chsh1, chsh2;
  };
  std::vector<CurvePoint> curve_points;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    const double c1 =
        kProjectiveBoundLow + t * (kProjectiveBoundHigh - kProjectiveBoundLow);
    curve_points.push_back({"projective", c1, c1, sqrt10 - 0.5 * c1});
  }
  for (std::size_t i = 0; i < points; ++i) {
    const double eta =
        static_cast<double>(i) / static_cast<double>(points - 1);
    curve_points.push_back(
        {"unsharp", eta, tsirelson * eta,
         tsirelson * 0.5 * (1.0 + std::sqrt(1.0 - eta * eta))});
  }
  for (std::size_t i = 0; i < points; ++i) {
    const double t =
        tsirelson * static_cast<double>(i) / static_cast<double>(points - 1);
    curve_points.push_back({"local_chsh1", t, 2.0, t});
  }
  for (std::size_t i = 0; i < points; ++i) {
    const double t =
        tsirelson * static_cast<double>(i) / static_cast<double>(points - 1);
    curve_points.push_back({"local_chsh2", t, t, 2.0});
  }

  RunManifest manifest;
  manifest.command = "tradeoff";
  manifest.output = output.empty() ? "-" : output;
  manifest.timestamp = timestamp;

  OutputTarget target(output);
  std::ostream& os = *target.stream;
  if (format == "json") {
    nlohmann::ordered_json root;
    root["manifest"] = manifest.to_json();
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : curve_points)
      arr.push_back({{"curve", p.curve},
                     {"parameter", p.parameter},
                     {"chsh1", p.chsh1},
                     {"chsh2", p.chsh2}});
    root["points"] = std::move(arr);
    os << root.dump(2) << "\n";
  } else {
    os << manifest.comment_line();
    os << "curve,parameter,chsh1,chsh2\n";
    for (const auto& p : curve_points)
      os << p.curve << "," << fmt12(p.parameter) << "," << fmt12(p.chsh1)
         << "," << fmt12(p.chsh2) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "starbell: recycled Bell nonlocality in star networks - exact "
      "evaluation, finite-statistics sampling, and parameter optimization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", STARBELL_VERSION);

  std::string config_path, output, run_log_path, emit_config;
  std::string format = "csv";
  std::string timestamp = now_utc_iso8601();
  std::string symmetry = "per-depth", objective = "worst";
  std::uint64_t seed = 1, shots = 100000;
  std::size_t bootstrap = 1000, budget = 16, points = 101;
  std::size_t opt_m = 3, opt_n = 2;
  unsigned threads = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--output", output, "Output path (default: stdout)");
    cmd->add_option("--format", format, "Output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--timestamp", timestamp,
                    "Timestamp recorded in the manifest (default: now, UTC); "
                    "pin it for byte-reproducible outputs");
  };

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Exact Bell values for every selection of parties");
  evaluate->add_option("--config", config_path, "Network config JSON")
      ->required();
  evaluate->add_option("--threads", threads, "Worker threads");
  add_common(evaluate);

  CLI::App* sample = app.add_subcommand(
      "sample", "Finite-statistics experiment with bootstrap errors");
  sample->add_option("--config", config_path, "Network config JSON")
      ->required();
  sample->add_option("--shots", shots, "Number of simulated runs")->required();
  sample->add_option("--seed", seed, "RNG seed");
  sample->add_option("--bootstrap", bootstrap, "Bootstrap resamples");
  sample->add_option("--threads", threads, "Worker threads");
  sample->add_flag("--stratified", "Cycle inputs through all settings");
  sample->add_option("--run-log", run_log_path,
                     "Write one line per run (inputs and outcomes)");
  add_common(sample);

  CLI::App* optimize_cmd = app.add_subcommand(
      "optimize", "Maximize the worst-case (or average) Bell value");
  optimize_cmd->add_option("--m", opt_m, "Number of branches")->required();
  optimize_cmd->add_option("--n", opt_n, "Parties per branch")->required();
  optimize_cmd->add_option("--symmetry", symmetry,
                           "Parameter tying: none|per-depth|full");
  optimize_cmd->add_option("--objective", objective,
                           "Objective: worst|average");
  optimize_cmd->add_option("--budget", budget, "Multistart budget");
  optimize_cmd->add_option("--seed", seed, "RNG seed");
  optimize_cmd->add_option("--threads", threads, "Worker threads");
  optimize_cmd->add_option("--emit-config", emit_config,
                           "Write a ready-to-run config at the optimum");
  add_common(optimize_cmd);

  CLI::App* tradeoff = app.add_subcommand(
      "tradeoff", "Projective trade-off curve and unsharp locus as CSV");
  tradeoff->add_option("--points", points, "Samples per curve (>= 2)");
  add_common(tradeoff);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (evaluate->parsed())
      return cmd_evaluate(config_path, output, format, threads, timestamp);
    if (sample->parsed())
      return cmd_sample(config_path, shots, seed, bootstrap, threads,
                        sample->count("--stratified") > 0, run_log_path,
                        output, format, timestamp);
    if (optimize_cmd->parsed())
      return cmd_optimize(opt_m, opt_n, symmetry, objective, budget, seed,
                          threads, emit_config, output, format, timestamp);
    if (tradeoff->parsed())
      return cmd_tradeoff(points, output, format, timestamp);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidationError;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalError;
  }
  return kExitConfigError;
}
