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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "starbell/sampler.hpp"
#include "test_helpers.hpp"

using namespace starbell;

TEST_CASE("identical seeds give identical records") {
  const NetworkConfig config = testing::operating_point(3);
  for (std::uint64_t run = 0; run < 50; ++run) {
    const ShotRecord a = sample_run(config, 99, run);
    const ShotRecord b = sample_run(config, 99, run);
    REQUIRE(a.x == b.x);
    REQUIRE(a.y == b.y);
    REQUIRE(a.b == b.b);
    REQUIRE(a.alice == b.alice);
    REQUIRE(a.a == b.a);
  }
  // A different seed changes the stream.
  int differences = 0;
  for (std::uint64_t run = 0; run < 50; ++run) {
    const ShotRecord a = sample_run(config, 99, run);
    const ShotRecord b = sample_run(config, 100, run);
    if (a.x != b.x || a.b != b.b) ++differences;
  }
  REQUIRE(differences > 0);
}

TEST_CASE("parity bookkeeping holds on every record") {
  SplitStream rng(61, 0, 0, 0);
  const NetworkConfig config = testing::random_config(rng, 3, 3);
  for (std::uint64_t run = 0; run < 200; ++run) {
    const ShotRecord record = sample_run(config, 7, run);
    int parity = 0;
    for (int ak : record.alice) parity ^= ak;
    REQUIRE(record.a == parity);
    for (std::size_t k = 0; k < config.branch_count(); ++k) {
      REQUIRE(record.y[k].size() == config.branches[k].length());
      REQUIRE(record.b[k].size() == config.branches[k].length());
    }
  }
}

TEST_CASE("sharp ZZ correlations at theta = 0") {
  // eta = 1 and theta = 0: whenever a party measures Z (y = 0), its outcome
  // must equal Alice's bit for that branch.
  NetworkConfig config = testing::operating_point(2);
  config.theta = 0.0;
  for (auto& branch : config.branches)
    for (auto& party : branch.parties) party = {1.0, 1.0};
  for (std::uint64_t run = 0; run < 300; ++run) {
    const ShotRecord record = sample_run(config, 11, run);
    for (std::size_t k = 0; k < 2; ++k)
      if (record.y[k][0] == 0) REQUIRE(record.b[k][0] == record.alice[k]);
  }
}

TEST_CASE("trivial parties flip unbiased coins") {
  NetworkConfig config = testing::operating_point(1);
  config.branches[0].parties[0] = {0.0, 0.0};
  config.branches[0].parties[1] = {0.0, 0.0};
  std::uint64_t ones = 0, agree = 0;
  const std::uint64_t runs = 20000;
  for (std::uint64_t run = 0; run < runs; ++run) {
    const ShotRecord record = sample_run(config, 13, run);
    ones += static_cast<std::uint64_t>(record.b[0][0]);
    agree += static_cast<std::uint64_t>(record.b[0][0] == record.alice[0]);
  }
  // 5 sigma of a fair binomial with 20000 draws is ~354.
  REQUIRE(std::abs(static_cast<double>(ones) - 10000.0) < 400.0);
  REQUIRE(std::abs(static_cast<double>(agree) - 10000.0) < 400.0);
}

TEST_CASE("stratified input mode cycles all settings evenly") {
  const NetworkConfig config = testing::operating_point(2);
  // Joint input word: x plus 2*2 branch inputs -> 32 settings.
  const std::uint64_t settings = 32;
  std::vector<int> counts(settings, 0);
  for (std::uint64_t run = 0; run < 4 * settings; ++run) {
    const ShotRecord r = sample_run(config, 5, run, InputMode::stratified);
    std::uint64_t word = static_cast<std::uint64_t>(r.x);
    std::uint64_t bit = 1;
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t j = 0; j < 2; ++j)
        word |= static_cast<std::uint64_t>(r.y[k][j]) << bit++;
    ++counts[word];
  }
  for (int c : counts) REQUIRE(c == 4);
}

TEST_CASE("empirical distribution converges to the exact one") {
  const NetworkConfig config = testing::operating_point(2);
  const PartySelection sel{{1, 2}};
  const JointDistribution exact = joint_distribution(config, sel);

  auto rms_error = [&](std::uint64_t shots) {
    ConditionalCounts counts(2);
    for (std::uint64_t run = 0; run < shots; ++run) {
      const ShotRecord r = sample_run(config, 17, run);
      std::size_t b_word = 0, y_word = 0;
      for (std::size_t k = 0; k < 2; ++k) {
        b_word = (b_word << 1) |
                 static_cast<std::size_t>(r.b[k][sel.depths[k] - 1]);
        y_word = (y_word << 1) |
                 static_cast<std::size_t>(r.y[k][sel.depths[k] - 1]);
      }
      counts.add(r.a, b_word, r.x, y_word);
    }
    double sum_sq = 0.0;
    std::size_t cells = 0;
    for (int x = 0; x < 2; ++x)
      for (std::size_t y = 0; y < 4; ++y) {
        std::uint64_t slice = 0;
        for (int a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 4; ++b)
            slice += counts.cells[JointDistribution::index(2, a, b, x, y)];
        for (int a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 4; ++b) {
            const double empirical =
                static_cast<double>(
                    counts.cells[JointDistribution::index(2, a, b, x, y)]) /
                static_cast<double>(slice);
            const double diff = empirical - exact.at(a, b, x, y);
            sum_sq += diff * diff;
            ++cells;
          }
      }
    return std::sqrt(sum_sq / static_cast<double>(cells));
  };

  const double err_small = rms_error(2000);
  const double err_large = rms_error(200000);
  // 100x the statistics should shrink the error by about 10x.
  REQUIRE(err_large < err_small);
  const double ratio = err_small / err_large;
  REQUIRE(ratio > 3.0);
  REQUIRE(ratio < 33.0);
}

TEST_CASE("estimate_bell on a deterministic local strategy stays classical") {
  // Local model: b = y, a = x. Build the count table directly.
  ConditionalCounts counts(2);
  for (int x = 0; x < 2; ++x)
    for (std::size_t y_word = 0; y_word < 4; ++y_word)
      for (int copies = 0; copies < 250; ++copies)
        counts.add(x, y_word, x, y_word);
  const BellReport report = estimate_bell(counts, {{1, 1}}, 200, 23);
  REQUIRE(report.s_value <= 1.0 + 3.0 * report.std_error.value() + 1e-12);
  REQUIRE(report.method == BellMethod::sampled);
}

TEST_CASE("estimate_bell rejects empty slices naming the slice") {
  ConditionalCounts counts(1);
  counts.add(0, 0, 0, 0);  // only (x=0, y=0) populated
  try {
    estimate_bell(counts, {{1}}, 10, 1);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    REQUIRE(std::string(e.what()).find("x=0, y=1") != std::string::npos);
  }
}

TEST_CASE("single bootstrap resample is degenerate") {
  ConditionalCounts counts(1);
  for (int x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) counts.add(a, b, x, y);
  const BellReport report = estimate_bell(counts, {{1}}, 1, 3);
  REQUIRE(report.degenerate_error);
  REQUIRE(report.std_error.value() == 0.0);
}

TEST_CASE("experiment_report matches the exact values at moderate statistics") {
  const NetworkConfig config = testing::operating_point(3);
  ExperimentOptions options;
  options.bootstrap_resamples = 200;
  const ExperimentReport report = experiment_report(config, 40000, 31, options);

  REQUIRE(report.full_network.size() == 8);
  REQUIRE(report.two_branch.size() == 12);
  REQUIRE(report.chsh.size() == 3);

  const double expected = 0.8 * std::sqrt(2.0);
  for (const auto& est : report.full_network) {
    const double se = est.report.std_error.value();
    REQUIRE(se > 0.0);
    REQUIRE(std::abs(est.report.s_value - expected) < 5.0 * se);
  }
  for (const auto& est : report.two_branch) {
    const double se = est.report.std_error.value();
    REQUIRE(std::abs(est.report.s_value - expected) < 5.0 * se);
  }
  const double chsh_expected = 2.0 * std::sqrt(2.0) * 0.8;
  for (const auto& est : report.chsh) {
    REQUIRE(std::abs(est.chsh1 - chsh_expected) < 5.0 * est.se1);
    REQUIRE(std::abs(est.chsh2 - chsh_expected) < 5.0 * est.se2);
    REQUIRE(est.excess > 0.0);
  }
}

TEST_CASE("experiment_report is deterministic across thread counts") {
  const NetworkConfig config = testing::operating_point(2, 0.95);
  ExperimentOptions serial;
  serial.bootstrap_resamples = 50;
  serial.threads = 1;
  ExperimentOptions parallel = serial;
  parallel.threads = 4;

  std::ostringstream log_serial, log_parallel;
  serial.run_log = &log_serial;
  parallel.run_log = &log_parallel;

  const ExperimentReport a = experiment_report(config, 5000, 41, serial);
  const ExperimentReport b = experiment_report(config, 5000, 41, parallel);
  REQUIRE(log_serial.str() == log_parallel.str());
  REQUIRE(a.full_network.size() == b.full_network.size());
  for (std::size_t i = 0; i < a.full_network.size(); ++i) {
    REQUIRE(a.full_network[i].report.s_value ==
            b.full_network[i].report.s_value);
    REQUIRE(a.full_network[i].report.std_error.value() ==
            b.full_network[i].report.std_error.value());
  }
  for (std::size_t i = 0; i < a.chsh.size(); ++i) {
    REQUIRE(a.chsh[i].chsh1 == b.chsh[i].chsh1);
    REQUIRE(a.chsh[i].excess_se == b.chsh[i].excess_se);
  }
}

TEST_CASE("experiment_report validates its inputs") {
  const NetworkConfig config = testing::operating_point(2);
  REQUIRE_THROWS_AS(experiment_report(config, 0, 1), ValidationError);
}

TEST_CASE("run log lists every record once") {
  const NetworkConfig config = testing::operating_point(2);
  ExperimentOptions options;
  options.bootstrap_resamples = 2;
  std::ostringstream log;
  options.run_log = &log;
  experiment_report(config, 100, 43, options);
  const std::string text = log.str();
  std::size_t lines = 0;
  for (char c : text) lines += (c == '\n');
  REQUIRE(lines == 100);
  // Columns: x, 4 y bits, 4 b bits, 2 alice bits, a.
  std::istringstream first_line(text.substr(0, text.find('\n')));
  int fields = 0, value;
  while (first_line >> value) ++fields;
  REQUIRE(fields == 12);
}
