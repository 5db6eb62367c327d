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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "rtnmpc/config.hpp"

using namespace rtnmpc;

TEST_CASE("parse and access") {
  const ConfigMap c = ConfigMap::parse_string(
      "# comment line\n"
      "[vehicle]\n"
      "mass = 210 # trailing comment\n"
      "friction = 0.8\n"
      "\n"
      "[scenario]\n"
      "duration = 12\n");
  CHECK(c.get("vehicle.mass") == "210");
  CHECK(c.get("vehicle.friction") == "0.8");
  CHECK(c.get("scenario.duration") == "12");
  CHECK_FALSE(c.get("vehicle.missing").has_value());
  CHECK_FALSE(c.get("nosection.key").has_value());
}

TEST_CASE("parse errors carry line numbers") {
  CHECK_THROWS_WITH_AS(ConfigMap::parse_string("[vehicle\nmass = 1\n"),
                       doctest::Contains("line 1"), std::invalid_argument);
  CHECK_THROWS_AS(ConfigMap::parse_string("mass = 1\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ConfigMap::parse_string("[a]\nno equals here\n"),
                  std::invalid_argument);
}

TEST_CASE("canonical serialization round-trips losslessly") {
  const ConfigMap defaults = default_config();
  const ConfigMap reparsed = ConfigMap::parse_string(defaults.serialize());
  CHECK(defaults == reparsed);

  // And the scenario survives the round trip.
  std::vector<std::string> errors;
  const ScenarioConfig a = scenario_from_config(defaults, &errors);
  CHECK(errors.empty());
  const ConfigMap again = config_from_scenario(a);
  CHECK(defaults == again);
}

TEST_CASE("defaults produce a valid nominal scenario") {
  std::vector<std::string> errors;
  const ScenarioConfig s = scenario_from_config(default_config(), &errors);
  CHECK(errors.empty());
  CHECK(s.duration == 24.0);
  CHECK(s.sample_period == 0.04);
  CHECK(s.horizon == 15);
  CHECK(s.vehicle.mass == 200.0);
  CHECK(s.limits.torque_max == 300.0);
  CHECK(s.initial_offset == 1.0);
  CHECK(s.noise.sigma_position == 0.05);
  CHECK(s.filter.cutoff_hz == 3.5);
  CHECK(s.wind.mean == 2.0);
}

TEST_CASE("overrides apply and are validated") {
  ConfigMap c = default_config();
  c.set("vehicle.mass", "250");
  c.set("trajectory.kind", "lane_change");
  std::vector<std::string> errors;
  const ScenarioConfig s = scenario_from_config(c, &errors);
  CHECK(errors.empty());
  CHECK(s.vehicle.mass == 250.0);
  CHECK(s.trajectory.kind == TrajectoryKind::kLaneChange);
}

TEST_CASE("errors name every offending key") {
  ConfigMap c = default_config();
  c.set("vehicle.mass", "-5");
  c.set("scenario.duration", "abc");
  c.set("made.up_key", "1");
  std::vector<std::string> errors;
  scenario_from_config(c, &errors);
  REQUIRE(errors.size() >= 3);
  auto mentions = [&errors](const std::string& needle) {
    return std::any_of(errors.begin(), errors.end(),
                       [&needle](const std::string& e) {
                         return e.find(needle) != std::string::npos;
                       });
  };
  CHECK(mentions("mass"));
  CHECK(mentions("scenario.duration"));
  CHECK(mentions("made.up_key"));
}

TEST_CASE("dotted key syntax is enforced") {
  ConfigMap c;
  CHECK_THROWS_AS(c.set("nodot", "1"), std::invalid_argument);
  CHECK_THROWS_AS(c.set(".x", "1"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("x.", "1"), std::invalid_argument);
}

TEST_CASE("file round trip") {
  const ConfigMap defaults = default_config();
  defaults.save("config_roundtrip.cfg");
  const ConfigMap loaded = ConfigMap::parse_file("config_roundtrip.cfg");
  CHECK(defaults == loaded);
  std::remove("config_roundtrip.cfg");
  CHECK_THROWS_AS(ConfigMap::parse_file("does_not_exist.cfg"),
                  std::runtime_error);
}
