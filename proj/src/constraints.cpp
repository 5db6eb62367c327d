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

#include "rtnmpc/constraints.hpp"

#include <cmath>
#include <stdexcept>

namespace rtnmpc {

namespace {

constexpr int kVx = 3;
constexpr int kVy = 4;
constexpr int kW = 5;
constexpr int kWf = 6;
constexpr int kWr = 7;
constexpr int kSt = 8;

struct AxleSlip {
  double sigma;
  double alpha;
  // Partials with respect to (vx, vy, yaw rate, wheel speed, steer).
  double dsig_dvx, dsig_dwheel;
  double dalf_dvx, dalf_dvy, dalf_dw, dalf_dsteer;
};

AxleSlip front_slip(const PredictionState& s, const VehicleParams& p) {
  AxleSlip out;
  const double q = (s.vy + p.lf * s.yaw_rate) / s.vx;
  const double d = 1.0 / (1.0 + q * q);
  out.alpha = s.steer - std::atan(q);
  out.sigma = (p.wheel_radius * s.wheel_f - s.vx) / s.vx;
  out.dsig_dvx = -p.wheel_radius * s.wheel_f / (s.vx * s.vx);
  out.dsig_dwheel = p.wheel_radius / s.vx;
  out.dalf_dvx = d * q / s.vx;
  out.dalf_dvy = -d / s.vx;
  out.dalf_dw = -d * p.lf / s.vx;
  out.dalf_dsteer = 1.0;
  return out;
}

AxleSlip rear_slip(const PredictionState& s, const VehicleParams& p) {
  AxleSlip out;
  const double q = (s.vy - p.lr * s.yaw_rate) / s.vx;
  const double d = 1.0 / (1.0 + q * q);
  out.alpha = -std::atan(q);
  out.sigma = (p.wheel_radius * s.wheel_r - s.vx) / s.vx;
  out.dsig_dvx = -p.wheel_radius * s.wheel_r / (s.vx * s.vx);
  out.dsig_dwheel = p.wheel_radius / s.vx;
  out.dalf_dvx = d * q / s.vx;
  out.dalf_dvy = -d / s.vx;
  out.dalf_dw = d * p.lr / s.vx;
  out.dalf_dsteer = 0.0;
  return out;
}

}  // namespace

ConstraintLimits ConstraintLimits::from_params(const VehicleParams& params) {
  ConstraintLimits limits;
  const double budget = params.friction * params.mass * params.gravity;
  limits.friction_budget_sq = budget * budget;
  return limits;
}

void ConstraintLimits::validate() const {
  if (!(torque_max > 0.0) || !(steer_rate_max > 0.0) || !(steer_max > 0.0) ||
      !(friction_budget_sq > 0.0)) {
    throw std::invalid_argument("constraint limits must be positive");
  }
}

int VehicleStageConstraints::row_count() const {
  return limits_.friction_mode == FrictionCircleMode::kPerAxle ? 8 : 7;
}

Eigen::VectorXd VehicleStageConstraints::evaluate(
    const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  const PredictionState s = PredictionState::from_vector(x);
  if (s.vx < kMinLongitudinalSpeed) {
    throw std::domain_error(
        "constraint evaluation needs v_x above the standstill guard");
  }
  const AxleSlip f = front_slip(s, params_);
  const AxleSlip r = rear_slip(s, params_);
  const double cs = params_.long_stiffness;
  const double ca = params_.corner_stiffness;

  Eigen::VectorXd g(row_count());
  int row = 0;
  if (limits_.friction_mode == FrictionCircleMode::kPerAxle) {
    const double fsh = params_.front_axle_share();
    const double rsh = params_.rear_axle_share();
    const double fx_f = 2.0 * cs * f.sigma;
    const double fy_f = 2.0 * ca * f.alpha;
    const double fx_r = 2.0 * cs * r.sigma;
    const double fy_r = 2.0 * ca * r.alpha;
    g[row++] = fx_f * fx_f + fy_f * fy_f -
               limits_.friction_budget_sq * fsh * fsh;
    g[row++] = fx_r * fx_r + fy_r * fy_r -
               limits_.friction_budget_sq * rsh * rsh;
  } else {
    const double fx = 2.0 * cs * (f.sigma + r.sigma);
    const double fy = 2.0 * ca * (f.alpha + r.alpha);
    g[row++] = fx * fx + fy * fy - limits_.friction_budget_sq;
  }
  g[row++] = u[0] - limits_.torque_max;
  g[row++] = -u[0] - limits_.torque_max;
  g[row++] = u[1] - limits_.steer_rate_max;
  g[row++] = -u[1] - limits_.steer_rate_max;
  g[row++] = s.steer - limits_.steer_max;
  g[row++] = -s.steer - limits_.steer_max;
  return g;
}

ConstraintLinearization VehicleStageConstraints::linearize(
    const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  const PredictionState s = PredictionState::from_vector(x);
  if (s.vx < kMinLongitudinalSpeed) {
    throw std::domain_error(
        "constraint linearization needs v_x above the standstill guard");
  }
  const int rows = row_count();
  ConstraintLinearization lin;
  lin.g = evaluate(x, u);
  lin.dx = Eigen::MatrixXd::Zero(rows, PredictionState::kDim);
  lin.du = Eigen::MatrixXd::Zero(rows, ControlInput::kDim);

  const AxleSlip f = front_slip(s, params_);
  const AxleSlip r = rear_slip(s, params_);
  const double cs = params_.long_stiffness;
  const double ca = params_.corner_stiffness;

  // d/dz [(2 C sigma)^2 + (2 C alpha)^2] = 8 C^2 (sigma dsigma + alpha dalpha)
  auto add_axle_terms = [&](int row, const AxleSlip& a, int wheel_col,
                            double sigma, double alpha) {
    const double ks = 8.0 * cs * cs * sigma;
    const double ka = 8.0 * ca * ca * alpha;
    lin.dx(row, kVx) += ks * a.dsig_dvx + ka * a.dalf_dvx;
    lin.dx(row, kVy) += ka * a.dalf_dvy;
    lin.dx(row, kW) += ka * a.dalf_dw;
    lin.dx(row, wheel_col) += ks * a.dsig_dwheel;
    lin.dx(row, kSt) += ka * a.dalf_dsteer;
  };

  int row = 0;
  if (limits_.friction_mode == FrictionCircleMode::kPerAxle) {
    add_axle_terms(row, f, kWf, f.sigma, f.alpha);
    ++row;
    add_axle_terms(row, r, kWr, r.sigma, r.alpha);
    ++row;
  } else {
    // Summed forces: gradient couples both axles through the common totals.
    const double sig_tot = f.sigma + r.sigma;
    const double alf_tot = f.alpha + r.alpha;
    add_axle_terms(row, f, kWf, sig_tot, alf_tot);
    add_axle_terms(row, r, kWr, sig_tot, alf_tot);
    ++row;
  }
  lin.du(row, 0) = 1.0;
  ++row;
  lin.du(row, 0) = -1.0;
  ++row;
  lin.du(row, 1) = 1.0;
  ++row;
  lin.du(row, 1) = -1.0;
  ++row;
  lin.dx(row, kSt) = 1.0;
  ++row;
  lin.dx(row, kSt) = -1.0;
  return lin;
}

}  // namespace rtnmpc
