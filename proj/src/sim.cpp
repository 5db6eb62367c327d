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

#include "rtnmpc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rtnmpc/discretize.hpp"

namespace rtnmpc {

namespace {

double smoothstep_quintic(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double format_guard(double v) { return v == 0.0 ? 0.0 : v; }  // kill -0

void append_number(std::string* out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", format_guard(v));
  out->append(buf);
}

}  // namespace

ReferencePoint reference_point(const TrajectorySpec& spec, double t) {
  if (t < 0.0) {
    throw std::invalid_argument("reference time must be nonnegative");
  }
  ReferencePoint p;
  switch (spec.kind) {
    case TrajectoryKind::kStraight:
      p.px = spec.speed * t;
      p.py = 0.0;
      p.vx = spec.speed;
      p.heading = 0.0;
      return p;
    case TrajectoryKind::kArc: {
      const double theta = spec.speed * t / spec.radius;
      p.px = spec.radius * std::sin(theta);
      p.py = spec.radius * (1.0 - std::cos(theta));
      p.vx = spec.speed;
      p.heading = std::remainder(theta, 2.0 * M_PI);
      return p;
    }
    case TrajectoryKind::kLaneChange: {
      const double s = (t - spec.lane_start) / spec.lane_duration;
      p.px = spec.speed * t;
      p.py = spec.lane_offset * smoothstep_quintic(s);
      // d/dt of the quintic blend, zero outside the window.
      double sdot = 0.0;
      if (s > 0.0 && s < 1.0) {
        sdot = 30.0 * s * s * (1.0 - s) * (1.0 - s) / spec.lane_duration;
      }
      p.heading = std::atan2(spec.lane_offset * sdot, spec.speed);
      p.vx = spec.speed;
      return p;
    }
    case TrajectoryKind::kCourse: {
      // Circle of radius `radius` about (0, radius) with the radial
      // distance modulated by `amplitude` sin(lobes * theta); starts at
      // the origin, closes after one lap.
      const double theta = spec.speed * t / spec.radius;
      const double rho = spec.radius + spec.amplitude *
                                           std::sin(spec.lobes * theta);
      const double rho_dot = spec.amplitude * spec.lobes *
                             std::cos(spec.lobes * theta) * spec.speed /
                             spec.radius;
      const double theta_dot = spec.speed / spec.radius;
      p.px = rho * std::sin(theta);
      p.py = spec.radius - rho * std::cos(theta);
      const double dx = rho_dot * std::sin(theta) +
                        rho * theta_dot * std::cos(theta);
      const double dy = -rho_dot * std::cos(theta) +
                        rho * theta_dot * std::sin(theta);
      p.vx = std::hypot(dx, dy);
      p.heading = std::atan2(dy, dx);
      return p;
    }
  }
  throw std::invalid_argument("unknown trajectory kind");
}

ButterworthFilter::ButterworthFilter(double cutoff_hz, double dt) {
  if (!(cutoff_hz > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("filter needs positive cutoff and dt");
  }
  const double k = std::tan(M_PI * cutoff_hz * dt);
  b0_ = k / (1.0 + k);
  b1_ = b0_;
  a1_ = (k - 1.0) / (1.0 + k);
}

void ButterworthFilter::reset(const Eigen::VectorXd& sample) {
  prev_in_ = sample;
  prev_out_ = sample;
  primed_ = true;
}

Eigen::VectorXd ButterworthFilter::step(const Eigen::VectorXd& raw) {
  if (!primed_) {
    reset(raw);
    return raw;
  }
  const Eigen::VectorXd out = b0_ * raw + b1_ * prev_in_ - a1_ * prev_out_;
  prev_in_ = raw;
  prev_out_ = out;
  return out;
}

double ButterworthFilter::group_delay(double cutoff_hz, double dt) {
  return dt / (2.0 * std::tan(M_PI * cutoff_hz * dt));
}

int ScenarioConfig::step_count() const {
  return static_cast<int>(std::lround(duration / sample_period));
}

std::vector<std::string> ScenarioConfig::validation_errors() const {
  std::vector<std::string> errors;
  auto check = [&errors](bool ok, const std::string& message) {
    if (!ok) errors.push_back(message);
  };
  check(sample_period > 0.0, "scenario.sample_period must be positive");
  check(duration > 0.0, "scenario.duration must be positive");
  if (sample_period > 0.0 && duration > 0.0) {
    const double steps = duration / sample_period;
    check(std::abs(steps - std::lround(steps)) < 1e-9,
          "scenario.duration must be a multiple of the sample period");
  }
  check(horizon >= 2, "controller.horizon must be at least 2");
  check(initial_offset >= 0.0, "scenario.initial_offset must be nonnegative");
  check(initial_speed >= kMinLongitudinalSpeed,
        "scenario.initial_speed must stay above the standstill guard");
  check(plant_substeps >= 1, "scenario.plant_substeps must be at least 1");
  check(transient_window >= 0.0,
        "scenario.transient_window must be nonnegative");
  try {
    vehicle.validate();
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  try {
    limits.validate();
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  try {
    weights.validate(PredictionState::kDim, ControlInput::kDim);
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  check(wind.mean >= 0.0, "wind.mean must be nonnegative");
  check(wind.walk_sigma >= 0.0, "wind.walk_sigma must be nonnegative");
  check(wind.dispersion >= 0.0, "wind.dispersion must be nonnegative");
  const NoiseParams& nz = noise;
  check(nz.sigma_position >= 0.0 && nz.sigma_heading >= 0.0 &&
            nz.sigma_velocity >= 0.0 && nz.sigma_yaw_rate >= 0.0 &&
            nz.sigma_wheel >= 0.0 && nz.sigma_steer >= 0.0,
        "noise.sigma_* must be nonnegative");
  check(filter.cutoff_hz > 0.0, "filter.cutoff_hz must be positive");
  check(trajectory.speed > 0.0, "trajectory.speed must be positive");
  check(trajectory.radius > 0.0, "trajectory.radius must be positive");
  check(trajectory.lane_duration > 0.0,
        "trajectory.lane_duration must be positive");
  return errors;
}

void ScenarioConfig::validate() const {
  const auto errors = validation_errors();
  if (!errors.empty()) {
    std::string joined;
    for (const auto& e : errors) {
      if (!joined.empty()) joined += "; ";
      joined += e;
    }
    throw std::invalid_argument(joined);
  }
}

WindCondition wind_sample(std::mt19937_64& rng, const WindCondition& previous,
                          double dt, const WindParams& params) {
  std::normal_distribution<double> dist(0.0, 1.0);
  const double increment = params.walk_sigma * std::sqrt(dt) * dist(rng);
  WindCondition next;
  next.speed = std::max(0.0, previous.speed + increment);
  next.direction = params.direction;
  return next;
}

Eigen::VectorXd add_measurement_noise(const PlantState& truth,
                                      std::mt19937_64& rng,
                                      const NoiseParams& noise) {
  Eigen::VectorXd sigmas(PlantState::kDim);
  sigmas << noise.sigma_position, noise.sigma_position, noise.sigma_heading,
      noise.sigma_velocity, noise.sigma_velocity, noise.sigma_yaw_rate,
      noise.sigma_wheel, noise.sigma_wheel, noise.sigma_wheel,
      noise.sigma_wheel, noise.sigma_steer;
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd out = truth.vector();
  for (int i = 0; i < out.size(); ++i) {
    out[i] += sigmas[i] * dist(rng);
  }
  return out;
}

Eigen::VectorXd axle_average(const Eigen::VectorXd& plant_measurement) {
  if (plant_measurement.size() != PlantState::kDim) {
    throw std::invalid_argument("expected an 11-channel plant measurement");
  }
  Eigen::VectorXd out(PredictionState::kDim);
  out.head(6) = plant_measurement.head(6);
  out[6] = 0.5 * (plant_measurement[6] + plant_measurement[7]);
  out[7] = 0.5 * (plant_measurement[8] + plant_measurement[9]);
  out[8] = plant_measurement[10];
  return out;
}

namespace {

PlantState initial_plant_state(const ScenarioConfig& cfg) {
  const ReferencePoint r0 = reference_point(cfg.trajectory, 0.0);
  const double heading = r0.heading;

  PlantState s;
  s.px = r0.px - cfg.initial_offset * std::sin(heading);
  s.py = r0.py + cfg.initial_offset * std::cos(heading);
  s.yaw = heading;
  s.vx = cfg.initial_speed;
  s.vy = 0.0;
  s.yaw_rate = 0.0;
  const double wheel = cfg.initial_speed / cfg.vehicle.wheel_radius;
  s.wheel_fl = wheel;
  s.wheel_fr = wheel;
  s.wheel_rl = wheel;
  s.wheel_rr = wheel;
  s.steer = 0.0;
  return s;
}

// Tracked-output window (p_x, p_y, heading, v_x); headings are unwrapped
// against `heading_anchor` so they live on the same branch as the plant's
// integrated yaw. Query times are retarded by the measurement filter's
// group delay so the filtered state is regulated onto the same timeline
// it is sampled from.
std::vector<Eigen::VectorXd> reference_window(const ScenarioConfig& cfg,
                                              double t,
                                              double* heading_anchor) {
  std::vector<Eigen::VectorXd> window;
  window.reserve(cfg.horizon + 1);
  const double lag =
      ButterworthFilter::group_delay(cfg.filter.cutoff_hz, cfg.sample_period);
  double anchor = *heading_anchor;
  for (int i = 0; i <= cfg.horizon; ++i) {
    const double ti = std::clamp(t - lag + i * cfg.sample_period, 0.0,
                                 cfg.duration);
    const ReferencePoint r = reference_point(cfg.trajectory, ti);
    const double heading = anchor + std::remainder(r.heading - anchor,
                                                   2.0 * M_PI);
    if (i == 0) *heading_anchor = heading;
    anchor = heading;
    window.push_back(Eigen::Vector4d(r.px, r.py, heading, r.vx));
  }
  return window;
}

void finalize_summary(SimLog* log, const ScenarioConfig& cfg,
                      const std::string& mode) {
  SimSummary& s = log->summary;
  s.mode = mode;
  s.steps = static_cast<int>(log->records.size());
  s.transient_window = cfg.transient_window;

  double sq_sum = 0.0;
  int sq_count = 0;
  std::vector<double> times;
  times.reserve(log->records.size());
  for (const SimRecord& rec : log->records) {
    s.max_tracking_error = std::max(s.max_tracking_error, rec.tracking_error);
    if (rec.time >= cfg.transient_window) {
      sq_sum += rec.tracking_error * rec.tracking_error;
      ++sq_count;
    }
    times.push_back(rec.step_time);
    const bool box_ok =
        std::abs(rec.applied.torque) <= cfg.limits.torque_max + 1e-9 &&
        std::abs(rec.applied.steer_rate) <= cfg.limits.steer_rate_max + 1e-9;
    if (!box_ok || rec.constraint_residual > 1e-5) {
      ++s.constraint_violations;
    }
  }
  s.rms_tracking_error = sq_count > 0 ? std::sqrt(sq_sum / sq_count) : 0.0;
  if (!times.empty()) {
    s.mean_step_time =
        std::accumulate(times.begin(), times.end(), 0.0) / times.size();
    std::sort(times.begin(), times.end());
    s.max_step_time = times.back();
    const size_t idx = static_cast<size_t>(
        std::min<double>(times.size() - 1.0, std::ceil(0.95 * times.size()) - 1.0));
    s.p95_step_time = times[idx];
  }
}

template <typename StepFn>
SimLog run_loop(const ScenarioConfig& cfg, const std::string& mode_name,
                StepFn&& control_step) {
  cfg.validate();
  SimLog log;
  log.records.reserve(cfg.step_count());

  std::mt19937_64 rng(cfg.seed);
  WindCondition wind{cfg.wind.enabled ? cfg.wind.mean : 0.0,
                     cfg.wind.direction};
  ButterworthFilter filter(cfg.filter.cutoff_hz, cfg.sample_period);

  PlantState truth = initial_plant_state(cfg);
  ControlInput applied{};  // committed input for the first interval

  const int steps = cfg.step_count();
  for (int k = 0; k < steps; ++k) {
    const double t = k * cfg.sample_period;
    if (cfg.wind.enabled) {
      wind = wind_sample(rng, wind, cfg.sample_period, cfg.wind);
    }

    const Eigen::VectorXd raw = cfg.noise.enabled
                                    ? add_measurement_noise(truth, rng,
                                                            cfg.noise)
                                    : truth.vector();
    const Eigen::VectorXd filtered = filter.step(axle_average(raw));

    SimRecord rec;
    rec.time = t;
    rec.truth = truth;
    rec.raw_measurement = raw;
    rec.filtered = filtered;
    rec.reference = reference_point(cfg.trajectory, t);
    rec.applied = applied;
    rec.wind = wind;
    rec.tracking_error = std::hypot(truth.px - rec.reference.px,
                                    truth.py - rec.reference.py);

    ControlInput next = applied;
    try {
      next = control_step(filtered, t, &rec);
    } catch (const std::exception& e) {
      log.records.push_back(rec);
      log.summary.aborted = true;
      log.summary.abort_reason = std::string("controller: ") + e.what();
      break;
    }

    try {
      const PlantModel plant(cfg.vehicle, wind);
      const Eigen::VectorXd propagated =
          rk4_integrate(plant, truth.vector(), applied.vector(),
                        cfg.sample_period, cfg.plant_substeps);
      truth = PlantState::from_vector(propagated);
    } catch (const std::exception& e) {
      log.records.push_back(rec);
      log.summary.aborted = true;
      log.summary.abort_reason = std::string("plant: ") + e.what();
      break;
    }

    log.records.push_back(rec);
    applied = next;  // takes effect at the next sample instant
  }

  finalize_summary(&log, cfg, mode_name);
  return log;
}

}  // namespace

SimLog run_closed_loop(const ScenarioConfig& cfg, ControllerMode mode) {
  const BicycleModel model(cfg.vehicle);
  const VehicleStageConstraints constraints(cfg.vehicle, cfg.limits);

  ControllerConfig ccfg;
  ccfg.horizon = cfg.horizon;
  ccfg.sample_period = cfg.sample_period;
  ccfg.weights = cfg.weights;
  ccfg.qp = cfg.qp;
  ccfg.sqp = cfg.sqp;
  ccfg.input_lower = Eigen::Vector2d(-cfg.limits.torque_max,
                                     -cfg.limits.steer_rate_max);
  ccfg.input_upper = Eigen::Vector2d(cfg.limits.torque_max,
                                     cfg.limits.steer_rate_max);

  RtiController controller(model, &constraints, ccfg, mode);
  double heading_anchor = reference_point(cfg.trajectory, 0.0).heading;

  auto step = [&](const Eigen::VectorXd& filtered, double t,
                  SimRecord* rec) -> ControlInput {
    if (!controller.initialized()) {
      controller.initialize(filtered, Eigen::Vector2d::Zero());
    }
    const ControlDecision decision = controller.step(
        filtered, reference_window(cfg, t, &heading_anchor));
    rec->qp_status = decision.qp_status;
    rec->qp_iterations = decision.qp_iterations;
    rec->sqp_iterations = decision.sqp_iterations;
    rec->constraint_residual = decision.max_constraint_residual;
    rec->step_time = decision.wall_time;
    return ControlInput::from_vector(decision.input);
  };
  return run_loop(cfg, mode == ControllerMode::kRti ? "rti" : "sqp", step);
}

SimLog run_closed_loop_custom(const ScenarioConfig& cfg,
                              const ControlStepFn& control) {
  auto step = [&](const Eigen::VectorXd& filtered, double t,
                  SimRecord*) -> ControlInput {
    return control(filtered, t);
  };
  return run_loop(cfg, "custom", step);
}

std::vector<std::string> csv_columns(bool include_timing) {
  std::vector<std::string> cols = {
      "time",
      "truth_px", "truth_py", "truth_yaw", "truth_vx", "truth_vy",
      "truth_yaw_rate", "truth_wheel_fl", "truth_wheel_fr", "truth_wheel_rl",
      "truth_wheel_rr", "truth_steer",
      "meas_px", "meas_py", "meas_yaw", "meas_vx", "meas_vy",
      "meas_yaw_rate", "meas_wheel_fl", "meas_wheel_fr", "meas_wheel_rl",
      "meas_wheel_rr", "meas_steer",
      "filt_px", "filt_py", "filt_yaw", "filt_vx", "filt_vy",
      "filt_yaw_rate", "filt_wheel_f", "filt_wheel_r", "filt_steer",
      "ref_px", "ref_py", "ref_vx",
      "input_torque", "input_steer_rate",
      "wind_speed", "wind_direction",
      "tracking_error",
      "qp_status", "qp_iterations", "sqp_iterations", "constraint_residual"};
  if (include_timing) {
    cols.push_back("step_time");
  }
  return cols;
}

void write_csv(const SimLog& log, const std::string& path,
               bool include_timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open CSV output file: " + path);
  }
  const auto cols = csv_columns(include_timing);
  std::string line;
  for (size_t i = 0; i < cols.size(); ++i) {
    if (i > 0) line += ",";
    line += cols[i];
  }
  line += "\n";
  out << line;

  for (const SimRecord& rec : log.records) {
    line.clear();
    append_number(&line, rec.time);
    const Eigen::VectorXd truth = rec.truth.vector();
    for (int i = 0; i < truth.size(); ++i) {
      line += ",";
      append_number(&line, truth[i]);
    }
    for (int i = 0; i < rec.raw_measurement.size(); ++i) {
      line += ",";
      append_number(&line, rec.raw_measurement[i]);
    }
    for (int i = 0; i < rec.filtered.size(); ++i) {
      line += ",";
      append_number(&line, rec.filtered[i]);
    }
    line += ",";
    append_number(&line, rec.reference.px);
    line += ",";
    append_number(&line, rec.reference.py);
    line += ",";
    append_number(&line, rec.reference.vx);
    line += ",";
    append_number(&line, rec.applied.torque);
    line += ",";
    append_number(&line, rec.applied.steer_rate);
    line += ",";
    append_number(&line, rec.wind.speed);
    line += ",";
    append_number(&line, rec.wind.direction);
    line += ",";
    append_number(&line, rec.tracking_error);
    line += ",";
    line += std::to_string(static_cast<int>(rec.qp_status));
    line += ",";
    line += std::to_string(rec.qp_iterations);
    line += ",";
    line += std::to_string(rec.sqp_iterations);
    line += ",";
    append_number(&line, rec.constraint_residual);
    if (include_timing) {
      line += ",";
      append_number(&line, rec.step_time);
    }
    line += "\n";
    out << line;
  }
}

std::string summary_text(const SimLog& log) {
  const SimSummary& s = log.summary;
  std::ostringstream out;
  out.precision(17);
  out << "mode = " << s.mode << "\n"
      << "steps = " << s.steps << "\n"
      << "transient_window = " << s.transient_window << "\n"
      << "rms_tracking_error = " << s.rms_tracking_error << "\n"
      << "max_tracking_error = " << s.max_tracking_error << "\n"
      << "mean_step_time = " << s.mean_step_time << "\n"
      << "p95_step_time = " << s.p95_step_time << "\n"
      << "max_step_time = " << s.max_step_time << "\n"
      << "constraint_violations = " << s.constraint_violations << "\n"
      << "aborted = " << (s.aborted ? 1 : 0) << "\n";
  if (s.aborted) {
    out << "abort_reason = " << s.abort_reason << "\n";
  }
  return out.str();
}

}  // namespace rtnmpc
