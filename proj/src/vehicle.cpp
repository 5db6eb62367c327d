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

#include "rtnmpc/vehicle.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rtnmpc {

namespace {

void check_speed_guard(double vx) {
  if (vx < kMinLongitudinalSpeed) {
    std::ostringstream msg;
    msg << "slip quantities undefined below the standstill guard: v_x = " << vx
        << " < " << kMinLongitudinalSpeed;
    throw std::domain_error(msg.str());
  }
}

}  // namespace

void VehicleParams::validate() const {
  std::ostringstream bad;
  auto require_positive = [&bad](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      bad << (bad.tellp() > 0 ? ", " : "") << name;
    }
  };
  require_positive(mass, "mass");
  require_positive(yaw_inertia, "yaw_inertia");
  require_positive(lf, "lf");
  require_positive(lr, "lr");
  require_positive(half_track, "half_track");
  require_positive(wheel_radius, "wheel_radius");
  require_positive(wheel_inertia, "wheel_inertia");
  require_positive(long_stiffness, "long_stiffness");
  require_positive(corner_stiffness, "corner_stiffness");
  require_positive(gravity, "gravity");
  if (!(drag_lon >= 0.0)) bad << (bad.tellp() > 0 ? ", " : "") << "drag_lon";
  if (!(drag_lat >= 0.0)) bad << (bad.tellp() > 0 ? ", " : "") << "drag_lat";
  if (!(friction > 0.0 && friction <= 1.5)) {
    bad << (bad.tellp() > 0 ? ", " : "") << "friction";
  }
  if (!(dugoff_friction_reduction >= 0.0)) {
    bad << (bad.tellp() > 0 ? ", " : "") << "dugoff_friction_reduction";
  }
  if (bad.tellp() > 0) {
    throw std::invalid_argument("invalid vehicle parameters: " + bad.str());
  }
}

Eigen::VectorXd PlantState::vector() const {
  Eigen::VectorXd v(kDim);
  v << px, py, yaw, vx, vy, yaw_rate, wheel_fl, wheel_fr, wheel_rl, wheel_rr,
      steer;
  return v;
}

PlantState PlantState::from_vector(const Eigen::VectorXd& v) {
  if (v.size() != kDim) {
    throw std::invalid_argument("PlantState expects an 11-vector");
  }
  PlantState s;
  s.px = v[0];
  s.py = v[1];
  s.yaw = v[2];
  s.vx = v[3];
  s.vy = v[4];
  s.yaw_rate = v[5];
  s.wheel_fl = v[6];
  s.wheel_fr = v[7];
  s.wheel_rl = v[8];
  s.wheel_rr = v[9];
  s.steer = v[10];
  return s;
}

Eigen::VectorXd PredictionState::vector() const {
  Eigen::VectorXd v(kDim);
  v << px, py, yaw, vx, vy, yaw_rate, wheel_f, wheel_r, steer;
  return v;
}

PredictionState PredictionState::from_vector(const Eigen::VectorXd& v) {
  if (v.size() != kDim) {
    throw std::invalid_argument("PredictionState expects a 9-vector");
  }
  PredictionState s;
  s.px = v[0];
  s.py = v[1];
  s.yaw = v[2];
  s.vx = v[3];
  s.vy = v[4];
  s.yaw_rate = v[5];
  s.wheel_f = v[6];
  s.wheel_r = v[7];
  s.steer = v[8];
  return s;
}

Eigen::VectorXd ControlInput::vector() const {
  Eigen::VectorXd v(kDim);
  v << torque, steer_rate;
  return v;
}

ControlInput ControlInput::from_vector(const Eigen::VectorXd& v) {
  if (v.size() != kDim) {
    throw std::invalid_argument("ControlInput expects a 2-vector");
  }
  return ControlInput{v[0], v[1]};
}

double slip_angle_front(double vx, double vy, double yaw_rate, double lf,
                        double steer) {
  check_speed_guard(vx);
  return steer - std::atan((vy + lf * yaw_rate) / vx);
}

double slip_angle_rear(double vx, double vy, double yaw_rate, double lr) {
  check_speed_guard(vx);
  return -std::atan((vy - lr * yaw_rate) / vx);
}

double slip_ratio(double wheel_speed, double radius, double vx) {
  check_speed_guard(vx);
  return (radius * wheel_speed - vx) / vx;
}

TireForces linear_tire_forces(double sigma, double alpha,
                              const VehicleParams& params) {
  return {params.long_stiffness * sigma, params.corner_stiffness * alpha};
}

TireForces dugoff_tire_forces(double sigma, double alpha, double vertical_load,
                              double sliding_speed,
                              const VehicleParams& params) {
  if (!(vertical_load > 0.0)) {
    throw std::domain_error("Dugoff model requires a positive vertical load");
  }
  if (!(1.0 + sigma >= 0.0)) {
    throw std::domain_error("Dugoff model requires 1 + sigma >= 0");
  }
  const double cs = params.long_stiffness;
  const double ca = params.corner_stiffness;
  const double ta = std::tan(alpha);
  const double fx_lin = cs * sigma;
  const double fy_lin = ca * ta;
  const double denom = std::hypot(fx_lin, fy_lin);
  if (denom == 0.0) {
    return {0.0, 0.0};
  }

  double mu = params.friction;
  if (params.dugoff_friction_reduction > 0.0) {
    const double slip_mag = std::sqrt(sigma * sigma + ta * ta);
    mu *= std::max(0.0, 1.0 - params.dugoff_friction_reduction *
                                  sliding_speed * slip_mag);
  }

  const double lambda = mu * vertical_load * (1.0 + sigma) / (2.0 * denom);
  if (lambda < 1.0) {
    // lambda(2 - lambda)/ (1 + sigma) rewritten so sigma -> -1 stays finite.
    const double scale = mu * vertical_load * (2.0 - lambda) / (2.0 * denom);
    return {fx_lin * scale, fy_lin * scale};
  }
  return {fx_lin / (1.0 + sigma), fy_lin / (1.0 + sigma)};
}

void ackermann_angles(double steer, const VehicleParams& params, double* left,
                      double* right) {
  if (std::abs(steer) < 1e-9) {
    *left = steer;
    *right = steer;
    return;
  }
  const double wheelbase = params.wheelbase();
  const double turn_radius = wheelbase / std::tan(steer);
  if (std::abs(turn_radius) <= params.half_track) {
    std::ostringstream msg;
    msg << "turn radius " << turn_radius << " m inside the track ("
        << params.half_track << " m)";
    throw std::domain_error(msg.str());
  }
  *right = std::atan(wheelbase / (turn_radius + params.half_track));
  *left = std::atan(wheelbase / (turn_radius - params.half_track));
}

PlantState plant_derivative(const PlantState& state, const ControlInput& input,
                            const WindCondition& wind,
                            const VehicleParams& params) {
  check_speed_guard(state.vx);

  double steer_l = 0.0;
  double steer_r = 0.0;
  ackermann_angles(state.steer, params, &steer_l, &steer_r);

  // Deep-slip saturation: past these slips the Dugoff force has long
  // saturated near mu Fz, and the raw formulas leave their domain (sigma
  // = -1 is a locked wheel). Keeps skids integrable instead of fatal.
  auto sat_ratio = [](double sigma) { return std::clamp(sigma, -0.95, 5.0); };
  auto sat_angle = [](double alpha) { return std::clamp(alpha, -1.2, 1.2); };

  const double alpha_fl = sat_angle(slip_angle_front(
      state.vx, state.vy, state.yaw_rate, params.lf, steer_l));
  const double alpha_fr = sat_angle(slip_angle_front(
      state.vx, state.vy, state.yaw_rate, params.lf, steer_r));
  const double alpha_r = sat_angle(
      slip_angle_rear(state.vx, state.vy, state.yaw_rate, params.lr));

  const double r = params.wheel_radius;
  const double sigma_fl = sat_ratio(slip_ratio(state.wheel_fl, r, state.vx));
  const double sigma_fr = sat_ratio(slip_ratio(state.wheel_fr, r, state.vx));
  const double sigma_rl = sat_ratio(slip_ratio(state.wheel_rl, r, state.vx));
  const double sigma_rr = sat_ratio(slip_ratio(state.wheel_rr, r, state.vx));

  const double fz_front = params.front_wheel_load();
  const double fz_rear = params.rear_wheel_load();
  const double slide = std::abs(state.vx);

  const TireForces fl =
      dugoff_tire_forces(sigma_fl, alpha_fl, fz_front, slide, params);
  const TireForces fr =
      dugoff_tire_forces(sigma_fr, alpha_fr, fz_front, slide, params);
  const TireForces rl =
      dugoff_tire_forces(sigma_rl, alpha_r, fz_rear, slide, params);
  const TireForces rr =
      dugoff_tire_forces(sigma_rr, alpha_r, fz_rear, slide, params);

  const double cl = std::cos(steer_l);
  const double sl = std::sin(steer_l);
  const double cr = std::cos(steer_r);
  const double sr = std::sin(steer_r);

  const double wind_rel = wind.direction - state.yaw;
  const double vx_air = state.vx + wind.speed * std::cos(wind_rel);
  const double vy_air = state.vy + wind.speed * std::sin(wind_rel);

  const double cpsi = std::cos(state.yaw);
  const double spsi = std::sin(state.yaw);

  PlantState d;
  d.px = state.vx * cpsi - state.vy * spsi;
  d.py = params.paper_exact_kinematics ? state.vx * spsi - state.vy * cpsi
                                       : state.vx * spsi + state.vy * cpsi;
  d.yaw = state.yaw_rate;

  d.vx = state.yaw_rate * state.vy +
         (fl.fx * cl + fr.fx * cr - fl.fy * sl - fr.fy * sr + rl.fx + rr.fx -
          params.drag_lon * vx_air * vx_air) /
             params.mass;
  d.vy = -state.yaw_rate * state.vx +
         (fl.fx * sl + fr.fx * sr + fl.fy * cl + fr.fy * cr + rl.fy + rr.fy -
          params.drag_lat * vy_air * vy_air) /
             params.mass;

  // Per-wheel moment sum about the CoG; the l_f and t_w groupings below are
  // the expanded form of x_i F_{by,i} - y_i F_{bx,i} over the four contact
  // points.
  d.yaw_rate =
      ((fl.fx * sl + fr.fx * sr + fl.fy * cl + fr.fy * cr) * params.lf -
       (rl.fy + rr.fy) * params.lr +
       (fr.fx * cr - fl.fx * cl + fl.fy * sl - fr.fy * sr - rl.fx + rr.fx) *
           params.half_track) /
      params.yaw_inertia;

  const double inv_j = 1.0 / params.wheel_inertia;
  d.wheel_fl = -r * fl.fx * inv_j;
  d.wheel_fr = -r * fr.fx * inv_j;
  d.wheel_rl = (input.torque - r * rl.fx) * inv_j;
  d.wheel_rr = (input.torque - r * rr.fx) * inv_j;
  d.steer = input.steer_rate;
  return d;
}

PredictionState prediction_derivative(const PredictionState& state,
                                      const ControlInput& input,
                                      const WindCondition& wind,
                                      const VehicleParams& params) {
  check_speed_guard(state.vx);

  const double alpha_f = slip_angle_front(state.vx, state.vy, state.yaw_rate,
                                          params.lf, state.steer);
  const double alpha_r =
      slip_angle_rear(state.vx, state.vy, state.yaw_rate, params.lr);
  const double r = params.wheel_radius;
  const double sigma_f = slip_ratio(state.wheel_f, r, state.vx);
  const double sigma_r = slip_ratio(state.wheel_r, r, state.vx);

  const TireForces front = linear_tire_forces(sigma_f, alpha_f, params);
  const TireForces rear = linear_tire_forces(sigma_r, alpha_r, params);

  const double cd = std::cos(state.steer);
  const double sd = std::sin(state.steer);

  const double wind_rel = wind.direction - state.yaw;
  const double vx_air = state.vx + wind.speed * std::cos(wind_rel);
  const double vy_air = state.vy + wind.speed * std::sin(wind_rel);

  const double cpsi = std::cos(state.yaw);
  const double spsi = std::sin(state.yaw);

  PredictionState d;
  d.px = state.vx * cpsi - state.vy * spsi;
  d.py = params.paper_exact_kinematics ? state.vx * spsi - state.vy * cpsi
                                       : state.vx * spsi + state.vy * cpsi;
  d.yaw = state.yaw_rate;
  d.vx = state.yaw_rate * state.vy +
         (2.0 * front.fx * cd - 2.0 * front.fy * sd + 2.0 * rear.fx -
          params.drag_lon * vx_air * vx_air) /
             params.mass;
  d.vy = -state.yaw_rate * state.vx +
         (2.0 * front.fx * sd + 2.0 * front.fy * cd + 2.0 * rear.fy -
          params.drag_lat * vy_air * vy_air) /
             params.mass;
  d.yaw_rate = ((2.0 * front.fx * sd + 2.0 * front.fy * cd) * params.lf -
                2.0 * rear.fy * params.lr) /
               params.yaw_inertia;
  d.wheel_f = -r * front.fx / params.wheel_inertia;
  d.wheel_r = (input.torque - r * rear.fx) / params.wheel_inertia;
  d.steer = input.steer_rate;
  return d;
}

void prediction_jacobians(const PredictionState& state,
                          const ControlInput& input, const WindCondition& wind,
                          const VehicleParams& params, Eigen::MatrixXd* dfdx,
                          Eigen::MatrixXd* dfdu) {
  check_speed_guard(state.vx);
  (void)input;

  constexpr int kPx = 0, kPy = 1, kYaw = 2, kVx = 3, kVy = 4, kW = 5, kWf = 6,
                kWr = 7, kSt = 8;

  const double vx = state.vx;
  const double vy = state.vy;
  const double w = state.yaw_rate;
  const double cs = params.long_stiffness;
  const double ca = params.corner_stiffness;
  const double r = params.wheel_radius;
  const double m = params.mass;
  const double iz = params.yaw_inertia;
  const double j = params.wheel_inertia;
  const double lf = params.lf;
  const double lr = params.lr;

  // Slip kinematics and their partials.
  const double qf = (vy + lf * w) / vx;
  const double qr = (vy - lr * w) / vx;
  const double df = 1.0 / (1.0 + qf * qf);
  const double dr = 1.0 / (1.0 + qr * qr);
  const double alpha_f = state.steer - std::atan(qf);
  const double dafdvx = df * qf / vx;
  const double dafdvy = -df / vx;
  const double dafdw = -df * lf / vx;
  const double dardvx = dr * qr / vx;
  const double dardvy = -dr / vx;
  const double dardw = dr * lr / vx;

  const double sigma_f = (r * state.wheel_f - vx) / vx;
  const double dsfdvx = -r * state.wheel_f / (vx * vx);
  const double dsrdvx = -r * state.wheel_r / (vx * vx);
  const double dsdw = r / vx;

  const double fxf = cs * sigma_f;
  const double fyf = ca * alpha_f;

  const double cd = std::cos(state.steer);
  const double sd = std::sin(state.steer);
  const double cpsi = std::cos(state.yaw);
  const double spsi = std::sin(state.yaw);

  const double wind_rel = wind.direction - state.yaw;
  const double cw = wind.speed * std::cos(wind_rel);
  const double sw = wind.speed * std::sin(wind_rel);
  const double vx_air = vx + cw;
  const double vy_air = vy + sw;

  Eigen::MatrixXd& a = *dfdx;
  Eigen::MatrixXd& b = *dfdu;
  a = Eigen::MatrixXd::Zero(PredictionState::kDim, PredictionState::kDim);
  b = Eigen::MatrixXd::Zero(PredictionState::kDim, ControlInput::kDim);

  a(kPx, kYaw) = -vx * spsi - vy * cpsi;
  a(kPx, kVx) = cpsi;
  a(kPx, kVy) = -spsi;

  if (params.paper_exact_kinematics) {
    a(kPy, kYaw) = vx * cpsi + vy * spsi;
    a(kPy, kVx) = spsi;
    a(kPy, kVy) = -cpsi;
  } else {
    a(kPy, kYaw) = vx * cpsi - vy * spsi;
    a(kPy, kVx) = spsi;
    a(kPy, kVy) = cpsi;
  }

  a(kYaw, kW) = 1.0;

  // d(cos(a_w - psi))/dpsi = sin(a_w - psi), d(sin)/dpsi = -cos.
  a(kVx, kYaw) = -2.0 * params.drag_lon * vx_air * sw / m;
  a(kVx, kVx) =
      (2.0 * cs * dsfdvx * cd - 2.0 * ca * dafdvx * sd + 2.0 * cs * dsrdvx -
       2.0 * params.drag_lon * vx_air) /
      m;
  a(kVx, kVy) = w - 2.0 * ca * dafdvy * sd / m;
  a(kVx, kW) = vy - 2.0 * ca * dafdw * sd / m;
  a(kVx, kWf) = 2.0 * cs * dsdw * cd / m;
  a(kVx, kWr) = 2.0 * cs * dsdw / m;
  a(kVx, kSt) = (-2.0 * fxf * sd - 2.0 * ca * sd - 2.0 * fyf * cd) / m;

  a(kVy, kYaw) = 2.0 * params.drag_lat * vy_air * cw / m;
  a(kVy, kVx) = -w + (2.0 * cs * dsfdvx * sd + 2.0 * ca * dafdvx * cd +
                      2.0 * ca * dardvx) /
                         m;
  a(kVy, kVy) = (2.0 * ca * dafdvy * cd + 2.0 * ca * dardvy -
                 2.0 * params.drag_lat * vy_air) /
                m;
  a(kVy, kW) = -vx + (2.0 * ca * dafdw * cd + 2.0 * ca * dardw) / m;
  a(kVy, kWf) = 2.0 * cs * dsdw * sd / m;
  a(kVy, kSt) = (2.0 * fxf * cd + 2.0 * ca * cd - 2.0 * fyf * sd) / m;

  a(kW, kVx) = (lf * (2.0 * cs * dsfdvx * sd + 2.0 * ca * dafdvx * cd) -
                lr * 2.0 * ca * dardvx) /
               iz;
  a(kW, kVy) = (lf * 2.0 * ca * dafdvy * cd - lr * 2.0 * ca * dardvy) / iz;
  a(kW, kW) = (lf * 2.0 * ca * dafdw * cd - lr * 2.0 * ca * dardw) / iz;
  a(kW, kWf) = lf * 2.0 * cs * dsdw * sd / iz;
  a(kW, kSt) = lf * (2.0 * fxf * cd + 2.0 * ca * cd - 2.0 * fyf * sd) / iz;

  a(kWf, kVx) = -r * cs * dsfdvx / j;
  a(kWf, kWf) = -r * cs * dsdw / j;

  a(kWr, kVx) = -r * cs * dsrdvx / j;
  a(kWr, kWr) = -r * cs * dsdw / j;

  b(kWr, 0) = 1.0 / j;
  b(kSt, 1) = 1.0;
}

Eigen::VectorXd BicycleModel::derivative(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& u) const {
  return prediction_derivative(PredictionState::from_vector(x),
                               ControlInput::from_vector(u), wind_, params_)
      .vector();
}

void BicycleModel::analytic_jacobians(const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u,
                                      Eigen::MatrixXd& dfdx,
                                      Eigen::MatrixXd& dfdu) const {
  prediction_jacobians(PredictionState::from_vector(x),
                       ControlInput::from_vector(u), wind_, params_, &dfdx,
                       &dfdu);
}

Eigen::VectorXd PlantModel::derivative(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& u) const {
  return plant_derivative(PlantState::from_vector(x),
                          ControlInput::from_vector(u), wind_, params_)
      .vector();
}

}  // namespace rtnmpc
