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

#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <json.hpp>

#include "starbell/error.hpp"
#include "starbell/network.hpp"

namespace starbell {

// Config file schema (JSON):
//   {
//     "theta_degrees": 45.0,
//     "branches": [[{"eta_z": 0.8, "eta_x": 0.8}, ...], ...],
//     "sources":  [{"visibility": 1.0}, ...]   // optional, defaults to 1.0
//   }
// Angles are degrees in files and radians everywhere else; the conversion
// happens exactly once, here.

namespace detail {

inline double require_number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number())
    throw ConfigError("config: " + path + " must be a number");
  return j.get<double>();
}

}  // namespace detail

inline NetworkConfig config_from_json(const nlohmann::json& root) {
  if (!root.is_object()) throw ConfigError("config: root must be an object");
  NetworkConfig config;

  if (!root.contains("theta_degrees"))
    throw ConfigError("config: missing key theta_degrees");
  config.theta = detail::require_number(root["theta_degrees"], "theta_degrees") *
                 std::numbers::pi / 180.0;

  if (!root.contains("branches"))
    throw ConfigError("config: missing key branches");
  const auto& branches = root["branches"];
  if (!branches.is_array())
    throw ConfigError("config: branches must be an array");
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const auto& chain = branches[k];
    const std::string bpath = "branches[" + std::to_string(k) + "]";
    if (!chain.is_array())
      throw ConfigError("config: " + bpath + " must be an array of parties");
    BranchConfig branch;
    for (std::size_t j = 0; j < chain.size(); ++j) {
      const auto& party = chain[j];
      const std::string ppath = bpath + "[" + std::to_string(j) + "]";
      if (!party.is_object())
        throw ConfigError("config: " + ppath + " must be an object");
      if (!party.contains("eta_z"))
        throw ConfigError("config: missing key " + ppath + ".eta_z");
      if (!party.contains("eta_x"))
        throw ConfigError("config: missing key " + ppath + ".eta_x");
      branch.parties.push_back(
          {detail::require_number(party["eta_z"], ppath + ".eta_z"),
           detail::require_number(party["eta_x"], ppath + ".eta_x")});
    }
    config.branches.push_back(std::move(branch));
  }

  if (root.contains("sources")) {
    const auto& sources = root["sources"];
    if (!sources.is_array())
      throw ConfigError("config: sources must be an array");
    for (std::size_t k = 0; k < sources.size(); ++k) {
      const auto& src = sources[k];
      const std::string spath = "sources[" + std::to_string(k) + "]";
      if (!src.is_object())
        throw ConfigError("config: " + spath + " must be an object");
      if (!src.contains("visibility"))
        throw ConfigError("config: missing key " + spath + ".visibility");
      config.sources.push_back(
          {detail::require_number(src["visibility"], spath + ".visibility")});
    }
  } else {
    config.sources.assign(config.branches.size(), SourceSpec{1.0});
  }

  return config;
}

inline nlohmann::ordered_json config_to_json(const NetworkConfig& config) {
  nlohmann::ordered_json root;
  root["theta_degrees"] = config.theta * 180.0 / std::numbers::pi;
  auto branches = nlohmann::ordered_json::array();
  for (const auto& branch : config.branches) {
    auto chain = nlohmann::ordered_json::array();
    for (const auto& p : branch.parties)
      chain.push_back({{"eta_z", p.eta_z}, {"eta_x", p.eta_x}});
    branches.push_back(std::move(chain));
  }
  root["branches"] = std::move(branches);
  auto sources = nlohmann::ordered_json::array();
  for (const auto& s : config.sources)
    sources.push_back({{"visibility", s.visibility}});
  root["sources"] = std::move(sources);
  return root;
}

inline NetworkConfig parse_config_text(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: JSON parse failure: ") + e.what());
  }
  return config_from_json(root);
}

inline NetworkConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

inline void save_config_file(const NetworkConfig& config,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("config: cannot write file: " + path);
  out << config_to_json(config).dump(2) << "\n";
}

}  // namespace starbell
