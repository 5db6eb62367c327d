// Copyright 2026 The rtnmpc Authors
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

#ifndef RTNMPC_CONFIG_HPP_
#define RTNMPC_CONFIG_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rtnmpc/sim.hpp"

namespace rtnmpc {

/// Sectioned key = value configuration. Keys are addressed as
/// "section.key"; '#' starts a comment. Serialization is canonical
/// (sorted sections and keys) so parse(serialize(x)) == x.
class ConfigMap {
 public:
  static ConfigMap parse_string(const std::string& text);
  static ConfigMap parse_file(const std::string& path);

  std::string serialize() const;
  void save(const std::string& path) const;

  void set(const std::string& dotted_key, const std::string& value);
  std::optional<std::string> get(const std::string& dotted_key) const;
  std::vector<std::string> keys() const;  // dotted, sorted

  bool operator==(const ConfigMap& other) const = default;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// The canonical configuration carrying every ScenarioConfig default.
ConfigMap default_config();

/// Converts a ConfigMap into a ScenarioConfig, collecting one message per
/// offending key (unknown keys, unparsable or out-of-range values). The
/// returned scenario is only meaningful when `errors` comes back empty.
ScenarioConfig scenario_from_config(const ConfigMap& config,
                                    std::vector<std::string>* errors);

/// Canonical ConfigMap for a scenario; scenario_from_config inverts it.
ConfigMap config_from_scenario(const ScenarioConfig& scenario);

}  // namespace rtnmpc

#endif  // RTNMPC_CONFIG_HPP_
