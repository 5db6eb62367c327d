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

#include "rtnmpc.h"

#include <cstdio>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "rtnmpc/config.hpp"
#include "rtnmpc/controller.hpp"
#include "rtnmpc/sim.hpp"
#include "rtnmpc/verify.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

int fail(int code, const std::string& message) {
  set_error(message);
  return code;
}

// Exceptions crossing the C boundary become error codes.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    return fail(RTN_ERR_VALIDATION, e.what());
  } catch (const std::domain_error& e) {
    return fail(RTN_ERR_RUNTIME, e.what());
  } catch (const std::exception& e) {
    return fail(RTN_ERR_RUNTIME, e.what());
  }
}

int copy_out(const std::string& text, char* buffer, size_t capacity) {
  if (buffer == nullptr || capacity == 0) {
    return fail(RTN_ERR_ARGUMENT, "output buffer is null or empty");
  }
  if (text.size() + 1 > capacity) {
    return fail(RTN_ERR_ARGUMENT,
                "output buffer too small: need " +
                    std::to_string(text.size() + 1) + " bytes");
  }
  std::memcpy(buffer, text.c_str(), text.size() + 1);
  return RTN_OK;
}

bool parse_mode(const char* mode, rtnmpc::ControllerMode* out) {
  if (mode == nullptr) return false;
  const std::string m(mode);
  if (m == "rti") {
    *out = rtnmpc::ControllerMode::kRti;
    return true;
  }
  if (m == "sqp" || m == "sqp-converged") {
    *out = rtnmpc::ControllerMode::kSqpConverged;
    return true;
  }
  return false;
}

}  // namespace

struct rtn_config {
  rtnmpc::ConfigMap map;
};

struct rtn_log {
  rtnmpc::SimLog log;
};

struct rtn_controller {
  std::unique_ptr<rtnmpc::BicycleModel> model;
  std::unique_ptr<rtnmpc::VehicleStageConstraints> constraints;
  std::unique_ptr<rtnmpc::RtiController> controller;
  int horizon = 0;
};

extern "C" {

const char* rtn_version(void) { return "1.0.0"; }

const char* rtn_last_error(void) { return g_last_error.c_str(); }

rtn_config* rtn_config_default(void) {
  try {
    auto* out = new rtn_config{rtnmpc::default_config()};
    return out;
  } catch (const std::exception& e) {
    set_error(e.what());
    return nullptr;
  }
}

rtn_config* rtn_config_load(const char* path) {
  if (path == nullptr) {
    set_error("config path is null");
    return nullptr;
  }
  try {
    // Unspecified keys keep their defaults, so loading merges over them.
    rtnmpc::ConfigMap merged = rtnmpc::default_config();
    const rtnmpc::ConfigMap loaded = rtnmpc::ConfigMap::parse_file(path);
    for (const std::string& key : loaded.keys()) {
      merged.set(key, *loaded.get(key));
    }
    return new rtn_config{std::move(merged)};
  } catch (const std::exception& e) {
    set_error(e.what());
    return nullptr;
  }
}

void rtn_config_free(rtn_config* config) { delete config; }

int rtn_config_set(rtn_config* config, const char* key, const char* value) {
  if (config == nullptr || key == nullptr || value == nullptr) {
    return fail(RTN_ERR_ARGUMENT, "null argument to rtn_config_set");
  }
  return guarded([&] {
    config->map.set(key, value);
    return RTN_OK;
  });
}

int rtn_config_get(const rtn_config* config, const char* key, char* buffer,
                   size_t capacity) {
  if (config == nullptr || key == nullptr) {
    return fail(RTN_ERR_ARGUMENT, "null argument to rtn_config_get");
  }
  const auto value = config->map.get(key);
  if (!value) {
    return fail(RTN_ERR_ARGUMENT, std::string("unknown config key: ") + key);
  }
  return copy_out(*value, buffer, capacity);
}

int rtn_config_keys(const rtn_config* config, char* buffer, size_t capacity) {
  if (config == nullptr) {
    return fail(RTN_ERR_ARGUMENT, "null config");
  }
  std::string joined;
  for (const std::string& key : config->map.keys()) {
    if (!joined.empty()) joined += "\n";
    joined += key;
  }
  return copy_out(joined, buffer, capacity);
}

int rtn_config_validate(const rtn_config* config) {
  if (config == nullptr) {
    return fail(RTN_ERR_ARGUMENT, "null config");
  }
  return guarded([&] {
    std::vector<std::string> errors;
    rtnmpc::scenario_from_config(config->map, &errors);
    if (!errors.empty()) {
      std::string joined;
      for (const auto& e : errors) {
        if (!joined.empty()) joined += "\n";
        joined += e;
      }
      return fail(RTN_ERR_VALIDATION, joined);
    }
    return RTN_OK;
  });
}

int rtn_config_save(const rtn_config* config, const char* path) {
  if (config == nullptr || path == nullptr) {
    return fail(RTN_ERR_ARGUMENT, "null argument to rtn_config_save");
  }
  return guarded([&] {
    config->map.save(path);
    return RTN_OK;
  });
}

int rtn_run_closed_loop(const rtn_config* config, const char* mode,
                        rtn_log** out) {
  if (config == nullptr || out == nullptr) {
    return fail(RTN_ERR_ARGUMENT, "null argument to rtn_run_closed_loop");
  }
  rtnmpc::ControllerMode parsed_mode;
  if (!parse_mode(mode, &parsed_mode)) {
    return fail(RTN_ERR_ARGUMENT, "mode must be 'rti' or 'sqp'");
  }
  *out = nullptr;
  return guarded([&] {
    std::vector<std::string> errors;
    const rtnmpc::ScenarioConfig scenario =
        rtnmpc::scenario_from_config(config->map, &errors);
    if (!errors.empty()) {
      std::string joined;
      for (const auto& e : errors) {
        if (!joined.empty()) joined += "\n";
        joined += e;
      }
      return fail(RTN_ERR_VALIDATION, joined);
    }
    auto log = std::make_unique<rtn_log>();
    log->log = rtnmpc::run_closed_loop(scenario, parsed_mode);
    const bool aborted = log->log.summary.aborted;
    const std::string reason = log->log.summary.abort_reason;
    *out = log.release();
    if (aborted) {
      return fail(RTN_ERR_RUNTIME, "run aborted: " + reason);
    }
    return RTN_OK;
  });
}

int rtn_log_steps(const rtn_log* log) {
  return log == nullptr ? 0 : static_cast<int>(log->log.records.size());
}

int rtn_log_write_csv(const rtn_log* log, const char* path,
                      int include_timing) {
  if (log == nullptr || path == nullptr) {
    return fail(RTN_ERR_ARGUMENT, "null argument to rtn_log_write_csv");
  }
  return guarded([&] {
    rtnmpc::write_csv(log->log, path, include_timing != 0);
    return RTN_OK;
  });
}

int rtn_log_write_summary(const rtn_log* log, const char* path) {
  if (log == nullptr || path == nullptr) {
    return fail(RTN_ERR_ARGUMENT, "null argument to rtn_log_write_summary");
  }
  return guarded([&] {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      return fail(RTN_ERR_RUNTIME,
                  std::string("cannot open summary file: ") + path);
    }
    out << rtnmpc::summary_text(log->log);
    return RTN_OK;
  });
}

int rtn_log_summary_value(const rtn_log* log, const char* key,
                          double* value) {
  if (log == nullptr || key == nullptr || value == nullptr) {
    return fail(RTN_ERR_ARGUMENT, "null argument to rtn_log_summary_value");
  }
  const rtnmpc::SimSummary& s = log->log.summary;
  const std::string k(key);
  if (k == "rms_tracking_error") {
    *value = s.rms_tracking_error;
  } else if (k == "max_tracking_error") {
    *value = s.max_tracking_error;
  } else if (k == "mean_step_time") {
    *value = s.mean_step_time;
  } else if (k == "p95_step_time") {
    *value = s.p95_step_time;
  } else if (k == "max_step_time") {
    *value = s.max_step_time;
  } else if (k == "constraint_violations") {
    *value = s.constraint_violations;
  } else if (k == "steps") {
    *value = s.steps;
  } else if (k == "aborted") {
    *value = s.aborted ? 1.0 : 0.0;
  } else {
    return fail(RTN_ERR_ARGUMENT, "unknown summary key: " + k);
  }
  return RTN_OK;
}

int rtn_log_column(const rtn_log* log, const char* column, double* buffer,
                   size_t capacity, size_t* length) {
  if (log == nullptr || column == nullptr || length == nullptr) {
    return fail(RTN_ERR_ARGUMENT, "null argument to rtn_log_column");
  }
  const std::string name(column);
  const auto& records = log->log.records;
  *length = records.size();
  if (buffer == nullptr || capacity < records.size()) {
    return fail(RTN_ERR_ARGUMENT, "column buffer too small");
  }
  auto extract = [&](auto&& getter) {
    for (size_t i = 0; i < records.size(); ++i) {
      buffer[i] = getter(records[i]);
    }
    return RTN_OK;
  };
  using Rec = rtnmpc::SimRecord;
  if (name == "time") {
    return extract([](const Rec& r) { return r.time; });
  }
  if (name == "input_torque") {
    return extract([](const Rec& r) { return r.applied.torque; });
  }
  if (name == "input_steer_rate") {
    return extract([](const Rec& r) { return r.applied.steer_rate; });
  }
  if (name == "tracking_error") {
    return extract([](const Rec& r) { return r.tracking_error; });
  }
  if (name == "wind_speed") {
    return extract([](const Rec& r) { return r.wind.speed; });
  }
  if (name == "step_time") {
    return extract([](const Rec& r) { return r.step_time; });
  }
  if (name == "qp_status") {
    return extract(
        [](const Rec& r) { return static_cast<double>(r.qp_status); });
  }
  if (name == "qp_iterations") {
    return extract(
        [](const Rec& r) { return static_cast<double>(r.qp_iterations); });
  }
  if (name == "sqp_iterations") {
    return extract(
        [](const Rec& r) { return static_cast<double>(r.sqp_iterations); });
  }
  if (name == "constraint_residual") {
    return extract([](const Rec& r) { return r.constraint_residual; });
  }
  if (name == "truth_px") {
    return extract([](const Rec& r) { return r.truth.px; });
  }
  if (name == "truth_py") {
    return extract([](const Rec& r) { return r.truth.py; });
  }
  if (name == "truth_vx") {
    return extract([](const Rec& r) { return r.truth.vx; });
  }
  if (name == "ref_px") {
    return extract([](const Rec& r) { return r.reference.px; });
  }
  if (name == "ref_py") {
    return extract([](const Rec& r) { return r.reference.py; });
  }
  return fail(RTN_ERR_ARGUMENT, "unknown column: " + name);
}

void rtn_log_free(rtn_log* log) { delete log; }

int rtn_verify(const char* suite, int inject_jacobian_bug,
               const char* report_path) {
  return guarded([&] {
    rtnmpc::VerifyOptions options;
    if (suite != nullptr) options.suite = suite;
    options.inject_jacobian_bug = inject_jacobian_bug != 0;
    const rtnmpc::VerifyReport report = rtnmpc::run_verification(options);
    if (report_path == nullptr) {
      std::fputs(report.text.c_str(), stdout);
    } else {
      std::ofstream out(report_path, std::ios::binary);
      if (!out) {
        return fail(RTN_ERR_RUNTIME,
                    std::string("cannot open report file: ") + report_path);
      }
      out << report.text;
    }
    if (!report.passed) {
      return fail(RTN_ERR_VERIFICATION, "verification failed:\n" + report.text);
    }
    return RTN_OK;
  });
}

rtn_controller* rtn_controller_create(const rtn_config* config,
                                      const char* mode) {
  if (config == nullptr) {
    set_error("null config");
    return nullptr;
  }
  rtnmpc::ControllerMode parsed_mode;
  if (!parse_mode(mode, &parsed_mode)) {
    set_error("mode must be 'rti' or 'sqp'");
    return nullptr;
  }
  try {
    std::vector<std::string> errors;
    const rtnmpc::ScenarioConfig scenario =
        rtnmpc::scenario_from_config(config->map, &errors);
    if (!errors.empty()) {
      set_error(errors.front());
      return nullptr;
    }
    auto out = std::make_unique<rtn_controller>();
    out->model = std::make_unique<rtnmpc::BicycleModel>(scenario.vehicle);
    out->constraints = std::make_unique<rtnmpc::VehicleStageConstraints>(
        scenario.vehicle, scenario.limits);
    rtnmpc::ControllerConfig ccfg;
    ccfg.horizon = scenario.horizon;
    ccfg.sample_period = scenario.sample_period;
    ccfg.weights = scenario.weights;
    ccfg.qp = scenario.qp;
    ccfg.sqp = scenario.sqp;
    ccfg.input_lower = Eigen::Vector2d(-scenario.limits.torque_max,
                                       -scenario.limits.steer_rate_max);
    ccfg.input_upper = Eigen::Vector2d(scenario.limits.torque_max,
                                       scenario.limits.steer_rate_max);
    out->controller = std::make_unique<rtnmpc::RtiController>(
        *out->model, out->constraints.get(), ccfg, parsed_mode);
    out->horizon = scenario.horizon;
    return out.release();
  } catch (const std::exception& e) {
    set_error(e.what());
    return nullptr;
  }
}

int rtn_controller_horizon(const rtn_controller* controller) {
  return controller == nullptr ? 0 : controller->horizon;
}

int rtn_controller_initialize(rtn_controller* controller,
                              const double* state9, const double* input2) {
  if (controller == nullptr || state9 == nullptr) {
    return fail(RTN_ERR_ARGUMENT, "null argument to controller initialize");
  }
  return guarded([&] {
    const Eigen::Map<const Eigen::VectorXd> x(state9,
                                              rtnmpc::PredictionState::kDim);
    Eigen::Vector2d u = Eigen::Vector2d::Zero();
    if (input2 != nullptr) {
      u = Eigen::Map<const Eigen::Vector2d>(input2);
    }
    controller->controller->initialize(x, u);
    return RTN_OK;
  });
}

int rtn_controller_step(rtn_controller* controller, const double* state9,
                        const double* reference, size_t reference_len,
                        double* input2, double* step_time) {
  if (controller == nullptr || state9 == nullptr || reference == nullptr ||
      input2 == nullptr) {
    return fail(RTN_ERR_ARGUMENT, "null argument to controller step");
  }
  const size_t expected = 3 * (controller->horizon + 1);
  if (reference_len != expected) {
    return fail(RTN_ERR_ARGUMENT,
                "reference must hold " + std::to_string(expected) +
                    " doubles (horizon+1 triplets)");
  }
  return guarded([&] {
    const Eigen::Map<const Eigen::VectorXd> x(state9,
                                              rtnmpc::PredictionState::kDim);
    // Tracked outputs are (p_x, p_y, heading, v_x); the heading reference
    // is the chord direction of consecutive points, unwrapped against the
    // measured yaw.
    const int horizon = controller->horizon;
    std::vector<Eigen::VectorXd> window;
    window.reserve(horizon + 1);
    double anchor = state9[2];
    for (int i = 0; i <= horizon; ++i) {
      const int ahead = std::min(i, horizon - 1);
      const double dx = reference[3 * (ahead + 1)] - reference[3 * ahead];
      const double dy =
          reference[3 * (ahead + 1) + 1] - reference[3 * ahead + 1];
      double heading = anchor;
      if (std::abs(dx) + std::abs(dy) > 1e-12) {
        const double raw = std::atan2(dy, dx);
        heading = anchor + std::remainder(raw - anchor, 2.0 * M_PI);
      }
      anchor = heading;
      window.push_back(Eigen::Vector4d(reference[3 * i],
                                       reference[3 * i + 1], heading,
                                       reference[3 * i + 2]));
    }
    const rtnmpc::ControlDecision decision =
        controller->controller->step(x, window);
    input2[0] = decision.input[0];
    input2[1] = decision.input[1];
    if (step_time != nullptr) {
      *step_time = decision.wall_time;
    }
    return RTN_OK;
  });
}

void rtn_controller_free(rtn_controller* controller) { delete controller; }

}  // extern "C"
