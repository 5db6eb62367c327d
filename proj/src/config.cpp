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

#include "rtnmpc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rtnmpc {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct KeyReader {
  const ConfigMap& config;
  std::vector<std::string>* errors;
  std::vector<std::string> consumed;

  std::optional<std::string> raw(const std::string& key) {
    consumed.push_back(key);
    return config.get(key);
  }

  double number(const std::string& key, double fallback) {
    const auto value = raw(key);
    if (!value) return fallback;
    try {
      size_t pos = 0;
      const double parsed = std::stod(*value, &pos);
      if (pos != value->size() || !std::isfinite(parsed)) {
        throw std::invalid_argument("trailing characters");
      }
      return parsed;
    } catch (const std::exception&) {
      errors->push_back(key + ": not a number ('" + *value + "')");
      return fallback;
    }
  }

  long integer(const std::string& key, long fallback) {
    const auto value = raw(key);
    if (!value) return fallback;
    long parsed = 0;
    const auto res = std::from_chars(value->data(),
                                     value->data() + value->size(), parsed);
    if (res.ec != std::errc() || res.ptr != value->data() + value->size()) {
      errors->push_back(key + ": not an integer ('" + *value + "')");
      return fallback;
    }
    return parsed;
  }

  bool boolean(const std::string& key, bool fallback) {
    const auto value = raw(key);
    if (!value) return fallback;
    if (*value == "1" || *value == "true" || *value == "on") return true;
    if (*value == "0" || *value == "false" || *value == "off") return false;
    errors->push_back(key + ": not a boolean ('" + *value + "')");
    return fallback;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const auto value = raw(key);
    return value ? *value : fallback;
  }
};

}  // namespace

ConfigMap ConfigMap::parse_string(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": empty section name");
      }
      out.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key");
    }
    if (section.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": key outside any section");
    }
    out.sections_[section][key] = value;
  }
  return out;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str());
}

std::string ConfigMap::serialize() const {
  std::string out;
  bool first = true;
  for (const auto& [section, entries] : sections_) {
    if (!first) out += "\n";
    first = false;
    out += "[" + section + "]\n";
    for (const auto& [key, value] : entries) {
      out += key + " = " + value + "\n";
    }
  }
  return out;
}

void ConfigMap::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open config output file: " + path);
  }
  out << serialize();
}

void ConfigMap::set(const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size()) {
    throw std::invalid_argument("config keys use the form section.key: " +
                                dotted_key);
  }
  sections_[dotted_key.substr(0, dot)][dotted_key.substr(dot + 1)] =
      trim(value);
}

std::optional<std::string> ConfigMap::get(
    const std::string& dotted_key) const {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) return std::nullopt;
  const auto sec = sections_.find(dotted_key.substr(0, dot));
  if (sec == sections_.end()) return std::nullopt;
  const auto key = sec->second.find(dotted_key.substr(dot + 1));
  if (key == sec->second.end()) return std::nullopt;
  return key->second;
}

std::vector<std::string> ConfigMap::keys() const {
  std::vector<std::string> out;
  for (const auto& [section, entries] : sections_) {
    for (const auto& [key, value] : entries) {
      out.push_back(section + "." + key);
    }
  }
  return out;
}

ConfigMap default_config() { return config_from_scenario(ScenarioConfig{}); }

ConfigMap config_from_scenario(const ScenarioConfig& s) {
  ConfigMap c;
  auto setd = [&c](const std::string& key, double v) {
    c.set(key, format_double(v));
  };
  auto seti = [&c](const std::string& key, long v) {
    c.set(key, std::to_string(v));
  };
  auto setb = [&c](const std::string& key, bool v) {
    c.set(key, v ? "1" : "0");
  };

  setd("scenario.duration", s.duration);
  setd("scenario.sample_period", s.sample_period);
  seti("scenario.seed", static_cast<long>(s.seed));
  setd("scenario.initial_offset", s.initial_offset);
  setd("scenario.initial_speed", s.initial_speed);
  seti("scenario.plant_substeps", s.plant_substeps);
  setd("scenario.transient_window", s.transient_window);

  setd("vehicle.mass", s.vehicle.mass);
  setd("vehicle.yaw_inertia", s.vehicle.yaw_inertia);
  setd("vehicle.lf", s.vehicle.lf);
  setd("vehicle.lr", s.vehicle.lr);
  setd("vehicle.half_track", s.vehicle.half_track);
  setd("vehicle.wheel_radius", s.vehicle.wheel_radius);
  setd("vehicle.wheel_inertia", s.vehicle.wheel_inertia);
  setd("vehicle.drag_lon", s.vehicle.drag_lon);
  setd("vehicle.drag_lat", s.vehicle.drag_lat);
  setd("vehicle.long_stiffness", s.vehicle.long_stiffness);
  setd("vehicle.corner_stiffness", s.vehicle.corner_stiffness);
  setd("vehicle.friction", s.vehicle.friction);
  setd("vehicle.gravity", s.vehicle.gravity);
  setb("vehicle.paper_exact_kinematics", s.vehicle.paper_exact_kinematics);
  setd("vehicle.dugoff_friction_reduction",
       s.vehicle.dugoff_friction_reduction);

  setd("limits.torque_max", s.limits.torque_max);
  setd("limits.steer_rate_max", s.limits.steer_rate_max);
  setd("limits.steer_max", s.limits.steer_max);
  setd("limits.friction_budget_sq", s.limits.friction_budget_sq);
  c.set("limits.friction_circle",
        s.limits.friction_mode == FrictionCircleMode::kPerAxle ? "per_axle"
                                                               : "total");

  seti("controller.horizon", s.horizon);
  setd("controller.qp_eps", s.qp.eps_primal);
  seti("controller.qp_max_iterations", s.qp.max_iterations);
  setd("controller.sqp_tolerance", s.sqp.tolerance);
  seti("controller.sqp_max_iterations", s.sqp.max_iterations);

  setd("cost.weight_px", s.weights.output_weights[0]);
  setd("cost.weight_py", s.weights.output_weights[1]);
  setd("cost.weight_heading", s.weights.output_weights[2]);
  setd("cost.weight_vx", s.weights.output_weights[3]);
  setd("cost.range_px", s.weights.output_ranges[0]);
  setd("cost.range_py", s.weights.output_ranges[1]);
  setd("cost.range_heading", s.weights.output_ranges[2]);
  setd("cost.range_vx", s.weights.output_ranges[3]);
  setd("cost.weight_dtorque", s.weights.increment_weights[0]);
  setd("cost.weight_dsteer", s.weights.increment_weights[1]);
  setd("cost.range_dtorque", s.weights.increment_ranges[0]);
  setd("cost.range_dsteer", s.weights.increment_ranges[1]);

  setb("wind.enabled", s.wind.enabled);
  setd("wind.mean", s.wind.mean);
  setd("wind.dispersion", s.wind.dispersion);
  setd("wind.walk_sigma", s.wind.walk_sigma);
  setd("wind.direction", s.wind.direction);

  setb("noise.enabled", s.noise.enabled);
  setd("noise.sigma_position", s.noise.sigma_position);
  setd("noise.sigma_heading", s.noise.sigma_heading);
  setd("noise.sigma_velocity", s.noise.sigma_velocity);
  setd("noise.sigma_yaw_rate", s.noise.sigma_yaw_rate);
  setd("noise.sigma_wheel", s.noise.sigma_wheel);
  setd("noise.sigma_steer", s.noise.sigma_steer);

  setd("filter.cutoff_hz", s.filter.cutoff_hz);

  switch (s.trajectory.kind) {
    case TrajectoryKind::kStraight:
      c.set("trajectory.kind", "straight");
      break;
    case TrajectoryKind::kArc:
      c.set("trajectory.kind", "arc");
      break;
    case TrajectoryKind::kLaneChange:
      c.set("trajectory.kind", "lane_change");
      break;
    case TrajectoryKind::kCourse:
      c.set("trajectory.kind", "course");
      break;
  }
  setd("trajectory.speed", s.trajectory.speed);
  setd("trajectory.radius", s.trajectory.radius);
  setd("trajectory.amplitude", s.trajectory.amplitude);
  seti("trajectory.lobes", s.trajectory.lobes);
  setd("trajectory.lane_offset", s.trajectory.lane_offset);
  setd("trajectory.lane_start", s.trajectory.lane_start);
  setd("trajectory.lane_duration", s.trajectory.lane_duration);
  return c;
}

ScenarioConfig scenario_from_config(const ConfigMap& config,
                                    std::vector<std::string>* errors) {
  ScenarioConfig s;
  KeyReader r{config, errors, {}};

  s.duration = r.number("scenario.duration", s.duration);
  s.sample_period = r.number("scenario.sample_period", s.sample_period);
  s.seed = static_cast<uint64_t>(
      r.integer("scenario.seed", static_cast<long>(s.seed)));
  s.initial_offset = r.number("scenario.initial_offset", s.initial_offset);
  s.initial_speed = r.number("scenario.initial_speed", s.initial_speed);
  s.plant_substeps = static_cast<int>(
      r.integer("scenario.plant_substeps", s.plant_substeps));
  s.transient_window =
      r.number("scenario.transient_window", s.transient_window);

  s.vehicle.mass = r.number("vehicle.mass", s.vehicle.mass);
  s.vehicle.yaw_inertia = r.number("vehicle.yaw_inertia",
                                   s.vehicle.yaw_inertia);
  s.vehicle.lf = r.number("vehicle.lf", s.vehicle.lf);
  s.vehicle.lr = r.number("vehicle.lr", s.vehicle.lr);
  s.vehicle.half_track = r.number("vehicle.half_track", s.vehicle.half_track);
  s.vehicle.wheel_radius =
      r.number("vehicle.wheel_radius", s.vehicle.wheel_radius);
  s.vehicle.wheel_inertia =
      r.number("vehicle.wheel_inertia", s.vehicle.wheel_inertia);
  s.vehicle.drag_lon = r.number("vehicle.drag_lon", s.vehicle.drag_lon);
  s.vehicle.drag_lat = r.number("vehicle.drag_lat", s.vehicle.drag_lat);
  s.vehicle.long_stiffness =
      r.number("vehicle.long_stiffness", s.vehicle.long_stiffness);
  s.vehicle.corner_stiffness =
      r.number("vehicle.corner_stiffness", s.vehicle.corner_stiffness);
  s.vehicle.friction = r.number("vehicle.friction", s.vehicle.friction);
  s.vehicle.gravity = r.number("vehicle.gravity", s.vehicle.gravity);
  s.vehicle.paper_exact_kinematics = r.boolean(
      "vehicle.paper_exact_kinematics", s.vehicle.paper_exact_kinematics);
  s.vehicle.dugoff_friction_reduction = r.number(
      "vehicle.dugoff_friction_reduction", s.vehicle.dugoff_friction_reduction);

  s.limits.torque_max = r.number("limits.torque_max", s.limits.torque_max);
  s.limits.steer_rate_max =
      r.number("limits.steer_rate_max", s.limits.steer_rate_max);
  s.limits.steer_max = r.number("limits.steer_max", s.limits.steer_max);
  s.limits.friction_budget_sq =
      r.number("limits.friction_budget_sq", s.limits.friction_budget_sq);
  const std::string circle = r.text("limits.friction_circle", "per_axle");
  if (circle == "per_axle") {
    s.limits.friction_mode = FrictionCircleMode::kPerAxle;
  } else if (circle == "total") {
    s.limits.friction_mode = FrictionCircleMode::kTotal;
  } else {
    errors->push_back("limits.friction_circle: expected per_axle or total");
  }

  s.horizon = static_cast<int>(r.integer("controller.horizon", s.horizon));
  const double qp_eps = r.number("controller.qp_eps", s.qp.eps_primal);
  s.qp.eps_primal = qp_eps;
  s.qp.eps_dual = qp_eps;
  s.qp.max_iterations = static_cast<int>(
      r.integer("controller.qp_max_iterations", s.qp.max_iterations));
  s.sqp.tolerance = r.number("controller.sqp_tolerance", s.sqp.tolerance);
  s.sqp.max_iterations = static_cast<int>(
      r.integer("controller.sqp_max_iterations", s.sqp.max_iterations));

  s.weights.output_weights[0] =
      r.number("cost.weight_px", s.weights.output_weights[0]);
  s.weights.output_weights[1] =
      r.number("cost.weight_py", s.weights.output_weights[1]);
  s.weights.output_weights[2] =
      r.number("cost.weight_heading", s.weights.output_weights[2]);
  s.weights.output_weights[3] =
      r.number("cost.weight_vx", s.weights.output_weights[3]);
  s.weights.output_ranges[0] =
      r.number("cost.range_px", s.weights.output_ranges[0]);
  s.weights.output_ranges[1] =
      r.number("cost.range_py", s.weights.output_ranges[1]);
  s.weights.output_ranges[2] =
      r.number("cost.range_heading", s.weights.output_ranges[2]);
  s.weights.output_ranges[3] =
      r.number("cost.range_vx", s.weights.output_ranges[3]);
  s.weights.increment_weights[0] =
      r.number("cost.weight_dtorque", s.weights.increment_weights[0]);
  s.weights.increment_weights[1] =
      r.number("cost.weight_dsteer", s.weights.increment_weights[1]);
  s.weights.increment_ranges[0] =
      r.number("cost.range_dtorque", s.weights.increment_ranges[0]);
  s.weights.increment_ranges[1] =
      r.number("cost.range_dsteer", s.weights.increment_ranges[1]);

  s.wind.enabled = r.boolean("wind.enabled", s.wind.enabled);
  s.wind.mean = r.number("wind.mean", s.wind.mean);
  s.wind.dispersion = r.number("wind.dispersion", s.wind.dispersion);
  s.wind.walk_sigma = r.number("wind.walk_sigma", s.wind.walk_sigma);
  s.wind.direction = r.number("wind.direction", s.wind.direction);

  s.noise.enabled = r.boolean("noise.enabled", s.noise.enabled);
  s.noise.sigma_position =
      r.number("noise.sigma_position", s.noise.sigma_position);
  s.noise.sigma_heading =
      r.number("noise.sigma_heading", s.noise.sigma_heading);
  s.noise.sigma_velocity =
      r.number("noise.sigma_velocity", s.noise.sigma_velocity);
  s.noise.sigma_yaw_rate =
      r.number("noise.sigma_yaw_rate", s.noise.sigma_yaw_rate);
  s.noise.sigma_wheel = r.number("noise.sigma_wheel", s.noise.sigma_wheel);
  s.noise.sigma_steer = r.number("noise.sigma_steer", s.noise.sigma_steer);

  s.filter.cutoff_hz = r.number("filter.cutoff_hz", s.filter.cutoff_hz);

  const std::string kind = r.text("trajectory.kind", "course");
  if (kind == "straight") {
    s.trajectory.kind = TrajectoryKind::kStraight;
  } else if (kind == "arc") {
    s.trajectory.kind = TrajectoryKind::kArc;
  } else if (kind == "lane_change") {
    s.trajectory.kind = TrajectoryKind::kLaneChange;
  } else if (kind == "course") {
    s.trajectory.kind = TrajectoryKind::kCourse;
  } else {
    errors->push_back(
        "trajectory.kind: expected straight, arc, lane_change or course");
  }
  s.trajectory.speed = r.number("trajectory.speed", s.trajectory.speed);
  s.trajectory.radius = r.number("trajectory.radius", s.trajectory.radius);
  s.trajectory.amplitude =
      r.number("trajectory.amplitude", s.trajectory.amplitude);
  s.trajectory.lobes =
      static_cast<int>(r.integer("trajectory.lobes", s.trajectory.lobes));
  s.trajectory.lane_offset =
      r.number("trajectory.lane_offset", s.trajectory.lane_offset);
  s.trajectory.lane_start =
      r.number("trajectory.lane_start", s.trajectory.lane_start);
  s.trajectory.lane_duration =
      r.number("trajectory.lane_duration", s.trajectory.lane_duration);

  // Anything not consumed above is an unknown key.
  for (const std::string& key : config.keys()) {
    if (std::find(r.consumed.begin(), r.consumed.end(), key) ==
        r.consumed.end()) {
      errors->push_back(key + ": unknown configuration key");
    }
  }

  for (const std::string& message : s.validation_errors()) {
    errors->push_back(message);
  }
  return s;
}

}  // namespace rtnmpc
