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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "starbell/config_json.hpp"

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
  const char* env = std::getenv("STARBELL_CLI");
  return env ? env : "";
}

int run_cli(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const std::string kValidConfig = R"({
  "theta_degrees": 45.0,
  "branches": [
    [{"eta_z": 0.8, "eta_x": 0.8}, {"eta_z": 1.0, "eta_x": 1.0}],
    [{"eta_z": 0.8, "eta_x": 0.8}, {"eta_z": 1.0, "eta_x": 1.0}]
  ]
})";

}  // namespace

TEST_CASE("cli exit codes distinguish failure classes") {
  if (cli_path().empty()) {
    SKIP("STARBELL_CLI not set");
  }
  const fs::path good = temp_file("starbell_cli_good.json", kValidConfig);
  const fs::path bad_syntax = temp_file("starbell_cli_syntax.json", "{ nope");
  const fs::path bad_range = temp_file("starbell_cli_range.json", R"({
    "theta_degrees": 45.0,
    "branches": [[{"eta_z": 1.4, "eta_x": 1.0}]]
  })");

  CHECK(run_cli("evaluate --config " + good.string()) == 0);
  CHECK(run_cli("evaluate --config /does/not/exist.json") == 2);
  CHECK(run_cli("evaluate --config " + bad_syntax.string()) == 2);
  CHECK(run_cli("evaluate --config " + bad_range.string()) == 3);
  CHECK(run_cli("sample --config " + good.string() + " --shots 0") == 3);
  CHECK(run_cli("tradeoff --points 1") == 3);
  CHECK(run_cli("optimize --m 0 --n 1") == 3);
  CHECK(run_cli("bogus") == 2);
  CHECK(run_cli("--version") == 0);
}

TEST_CASE("cli evaluate output embeds the manifest and both S columns") {
  if (cli_path().empty()) {
    SKIP("STARBELL_CLI not set");
  }
  const fs::path config = temp_file("starbell_cli_eval.json", kValidConfig);
  const fs::path out = fs::temp_directory_path() / "starbell_cli_eval.csv";
  REQUIRE(run_cli("evaluate --config " + config.string() +
                  " --timestamp 2026-01-01T00:00:00Z --output " +
                  out.string()) == 0);
  const std::string text = read_file(out);
  REQUIRE(text.find("# manifest command=evaluate") != std::string::npos);
  REQUIRE(text.find("timestamp=2026-01-01T00:00:00Z") != std::string::npos);
  REQUIRE(text.find("s_born,s_closed") != std::string::npos);
  REQUIRE(text.find("# chsh") != std::string::npos);
  // Born and closed-form columns agree to 1e-10 on every row.
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);  // manifest
  std::getline(lines, line);  // header
  while (std::getline(lines, line) && line[0] != '#') {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      else if (c == ',' && !quoted) {
        fields.push_back(field);
        field.clear();
      } else {
        field += c;
      }
    }
    fields.push_back(field);
    REQUIRE(fields.size() == 8);
    const double born = std::stod(fields[5]);
    const double closed = std::stod(fields[6]);
    REQUIRE(std::abs(born - closed) < 1e-10);
  }
  fs::remove(out);
}

TEST_CASE("cli optimize emits a loadable config at the optimum") {
  if (cli_path().empty()) {
    SKIP("STARBELL_CLI not set");
  }
  const fs::path emitted = fs::temp_directory_path() / "starbell_cli_opt.json";
  REQUIRE(run_cli("optimize --m 1 --n 1 --budget 2 --seed 3 --emit-config " +
                  emitted.string()) == 0);
  const starbell::NetworkConfig config =
      starbell::load_config_file(emitted.string());
  REQUIRE(starbell::validate(config).empty());
  REQUIRE(config.branch_count() == 1);
  REQUIRE(config.branches[0].parties[0].eta_z == 1.0);
  fs::remove(emitted);
}
