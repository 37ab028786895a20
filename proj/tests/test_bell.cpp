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
#include <numbers>

#include "starbell/bell.hpp"
#include "test_helpers.hpp"

using namespace starbell;

namespace {

NetworkConfig single_chsh_config() {
  NetworkConfig config;
  config.branches.push_back({{PartySetting{1.0, 1.0}}});
  config.sources.push_back({1.0});
  config.theta = std::numbers::pi / 4;
  return config;
}

}  // namespace

TEST_CASE("m=1 sharp distribution reproduces singlet CHSH statistics") {
  const JointDistribution dist =
      joint_distribution(single_chsh_config(), {{1}});
  // p(a=0, b=0 | x=0, y=0) = (1 + 1/sqrt(2))/4.
  REQUIRE(dist.at(0, 0, 0, 0) ==
          Catch::Approx(0.25 * (1.0 + 1.0 / std::sqrt(2.0))).margin(1e-12));
  // <A_0 B_0> = 1/sqrt(2).
  double corr = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      corr += ((a + b) % 2 ? -1.0 : 1.0) * dist.at(a, b, 0, 0);
  REQUIRE(corr == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-12));
}

TEST_CASE("Alice's marginal is unbiased") {
  SplitStream rng(51, 0, 0, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const NetworkConfig config = testing::random_config(rng, 3, 2);
    const auto sels = enumerate_selections(config);
    const JointDistribution dist = joint_distribution(config, sels[0]);
    const std::size_t words = std::size_t{1} << config.branch_count();
    for (int x = 0; x < 2; ++x) {
      double p_a0 = 0.0;
      for (std::size_t b = 0; b < words; ++b) p_a0 += dist.at(0, b, x, 0);
      REQUIRE(p_a0 == Catch::Approx(0.5).margin(1e-10));
    }
  }
}

TEST_CASE("trivial party factorizes out") {
  NetworkConfig config = single_chsh_config();
  config.branches[0].parties[0] = {0.0, 0.0};
  const JointDistribution dist = joint_distribution(config, {{1}});
  for (int x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
          REQUIRE(dist.at(a, b, x, y) ==
                  Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("bell_value of a uniform distribution is zero") {
  std::vector<double> table(JointDistribution::table_size(2), 1.0 / 8.0);
  const JointDistribution uniform(2, std::move(table));
  const BellReport report = bell_value(uniform);
  REQUIRE(report.i_s == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(report.j_s == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(report.s_value == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("joint distributions reject malformed tables") {
  REQUIRE_THROWS_AS(JointDistribution(2, std::vector<double>(7, 0.125)),
                    NumericalError);
  // Slices must be normalized.
  REQUIRE_THROWS_AS(
      JointDistribution(1, std::vector<double>(16, 0.3)), NumericalError);
  std::vector<double> negative(16, 0.25);
  negative[0] = -0.25;
  negative[1] = 0.75;
  REQUIRE_THROWS_AS(JointDistribution(1, std::move(negative)),
                    NumericalError);
}

TEST_CASE("operating point: every selection reaches 0.8 sqrt(2)") {
  const NetworkConfig config = testing::operating_point(3);
  const double expected = 0.8 * std::sqrt(2.0);
  for (const auto& sel : enumerate_selections(config)) {
    const BellReport report = bell_value(joint_distribution(config, sel) , sel);
    REQUIRE(report.s_value == Catch::Approx(expected).margin(1e-9));
    REQUIRE(report.s_value ==
            Catch::Approx(std::pow(std::abs(report.i_s), 1.0 / 3.0) +
                          std::pow(std::abs(report.j_s), 1.0 / 3.0))
                .margin(1e-12));
  }
}

TEST_CASE("operating point: every two-branch subnetwork reaches 0.8 sqrt(2)") {
  const NetworkConfig config = testing::operating_point(3);
  const double expected = 0.8 * std::sqrt(2.0);
  int rows = 0;
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t l = k + 1; l < 3; ++l) {
      const NetworkConfig sub = subnetwork(config, {k, l});
      for (const auto& sel : enumerate_selections(sub)) {
        const BellReport report = bell_value(joint_distribution(sub, sel), sel);
        REQUIRE(report.s_value == Catch::Approx(expected).margin(1e-9));
        ++rows;
      }
    }
  REQUIRE(rows == 12);
}

TEST_CASE("noisy sources scale S") {
  const NetworkConfig config = testing::operating_point(3, 0.9723);
  const auto sels = enumerate_selections(config);
  const BellReport report =
      bell_value(joint_distribution(config, sels[0]), sels[0]);
  REQUIRE(report.s_value ==
          Catch::Approx(0.8 * std::sqrt(2.0) * 0.9723).margin(1e-10));
  REQUIRE(report.s_value == Catch::Approx(1.100).margin(5e-4));
}

TEST_CASE("closed_form_s worked examples") {
  const NetworkConfig config = testing::operating_point(3);
  REQUIRE(closed_form_s(config, {{1, 1, 1}}) ==
          Catch::Approx(0.8 * std::sqrt(2.0)).margin(1e-14));
  // Depth-2 everywhere: the factor 2^-1 * f(0.8) = 0.8 restores the same S.
  REQUIRE(closed_form_s(config, {{2, 2, 2}}) ==
          Catch::Approx(0.8 * std::sqrt(2.0)).margin(1e-14));

  NetworkConfig sharp = testing::operating_point(3);
  for (auto& branch : sharp.branches) branch.parties[0] = {1.0, 1.0};
  REQUIRE(closed_form_s(sharp, {{1, 1, 1}}) ==
          Catch::Approx(std::sqrt(2.0)).margin(1e-14));
}

TEST_CASE("oracle: Born-rule evaluation equals the closed form") {
  SplitStream rng(52, 0, 0, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const NetworkConfig config = testing::random_config(rng, 3, 3);
    const PartySelection sel = testing::random_selection(rng, config);
    const BellReport report = bell_value(joint_distribution(config, sel), sel);
    const double closed = closed_form_s(config, sel);
    REQUIRE(report.s_value == Catch::Approx(closed).margin(1e-10));
  }
}

TEST_CASE("monotonicity along depth-homogeneous chains") {
  // With every party in a chain sharing the same setting, selecting a
  // deeper party can only shrink S: each skipped round multiplies the
  // branch correlators by (1 + sqrt(1 - eta^2))/2 <= 1.
  SplitStream rng(53, 0, 0, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    NetworkConfig config;
    const std::size_t m = 1 + trial % 3;
    for (std::size_t k = 0; k < m; ++k) {
      const PartySetting setting{rng.next_double(), rng.next_double()};
      BranchConfig branch;
      for (int j = 0; j < 3; ++j) branch.parties.push_back(setting);
      config.branches.push_back(std::move(branch));
      config.sources.push_back({1.0});
    }
    config.theta = rng.next_double() * std::numbers::pi / 2;
    PartySelection sel;
    for (std::size_t k = 0; k < m; ++k)
      sel.depths.push_back(1 + static_cast<std::size_t>(
                                   rng.next_double() * 2.0));
    const double before = closed_form_s(config, sel);
    for (std::size_t k = 0; k < m; ++k) {
      PartySelection deeper = sel;
      deeper.depths[k] += 1;
      REQUIRE(closed_form_s(config, deeper) <= before + 1e-12);
    }
  }
}

TEST_CASE("visibility linearity of S") {
  SplitStream rng(54, 0, 0, 0);
  for (int trial = 0; trial < 200; ++trial) {
    NetworkConfig config = testing::random_config(rng, 3, 2);
    const PartySelection sel = testing::random_selection(rng, config);
    const double ideal = closed_form_s(config, sel);
    double expected_scale = 1.0;
    for (auto& source : config.sources) {
      source.visibility = rng.next_double();
      expected_scale *= std::pow(source.visibility,
                                 1.0 / static_cast<double>(config.branch_count()));
    }
    REQUIRE(closed_form_s(config, sel) ==
            Catch::Approx(expected_scale * ideal).margin(1e-10));
    // The Born-rule path obeys the same scaling.
    const BellReport report = bell_value(joint_distribution(config, sel), sel);
    REQUIRE(report.s_value ==
            Catch::Approx(expected_scale * ideal).margin(1e-10));
  }
}

TEST_CASE("chsh_pair at the operating point and its extremes") {
  const NetworkConfig config = testing::operating_point(3);
  const ChshPair pair = chsh_pair(config, 0);
  const double expected = 2.0 * std::sqrt(2.0) * 0.8;
  REQUIRE(pair.chsh1 == Catch::Approx(expected).margin(1e-12));
  REQUIRE(pair.chsh2 == Catch::Approx(expected).margin(1e-12));

  NetworkConfig sharp_first = testing::operating_point(1);
  sharp_first.branches[0].parties[0] = {1.0, 1.0};
  const ChshPair dephased = chsh_pair(sharp_first, 0);
  REQUIRE(dephased.chsh1 == Catch::Approx(2.0 * std::sqrt(2.0)).margin(1e-12));
  REQUIRE(dephased.chsh2 == Catch::Approx(std::sqrt(2.0)).margin(1e-12));

  NetworkConfig blind_first = testing::operating_point(1);
  blind_first.branches[0].parties[0] = {0.0, 0.0};
  const ChshPair untouched = chsh_pair(blind_first, 0);
  REQUIRE(untouched.chsh1 == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(untouched.chsh2 ==
          Catch::Approx(2.0 * std::sqrt(2.0)).margin(1e-12));

  NetworkConfig short_chain = single_chsh_config();
  REQUIRE_THROWS_AS(chsh_pair(short_chain, 0), ValidationError);
}

TEST_CASE("projective trade-off bound") {
  REQUIRE(projective_bound(2.0) ==
          Catch::Approx(std::sqrt(10.0) - 1.0).margin(1e-14));
  REQUIRE(projective_bound(2.0 * std::sqrt(10.0) - 4.0) ==
          Catch::Approx(2.0).margin(1e-12));
  const double at_operating_point = projective_bound(2.0 * std::sqrt(2.0) * 0.8);
  REQUIRE(at_operating_point == Catch::Approx(2.0309).margin(1e-4));
  REQUIRE(2.0 * std::sqrt(2.0) * 0.8 - at_operating_point > 0.2);

  REQUIRE_THROWS_AS(projective_bound(1.9), ValidationError);
  REQUIRE_THROWS_AS(projective_bound(2.4), ValidationError);
}

TEST_CASE("deterministic strategies reach exactly the local bound") {
  REQUIRE(deterministic_max_s(1) == 1.0);
  REQUIRE(deterministic_max_s(2) == 1.0);
  REQUIRE(deterministic_max_s(3) == 1.0);
  REQUIRE_THROWS_AS(deterministic_max_s(4), ValidationError);
}
