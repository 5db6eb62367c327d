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

#ifndef RTNMPC_VEHICLE_HPP_
#define RTNMPC_VEHICLE_HPP_

#include <Eigen/Dense>

#include "rtnmpc/model.hpp"

namespace rtnmpc {

/// Slip quantities are singular at standstill; states must stay above this.
inline constexpr double kMinLongitudinalSpeed = 0.5;  // [m/s]

struct VehicleParams {
  double mass = 200.0;              // [kg]
  double yaw_inertia = 150.0;       // [kg m^2]
  double lf = 0.8;                  // front axle to CoG [m]
  double lr = 1.0;                  // rear axle to CoG [m]
  double half_track = 0.6;          // [m]
  double wheel_radius = 0.6;        // [m]
  double wheel_inertia = 0.2;       // [kg m^2]
  double drag_lon = 0.01;           // [N s^2/m^2]
  double drag_lat = 0.05;           // [N s^2/m^2]
  double long_stiffness = 600000.0;    // C_s [N]
  double corner_stiffness = 250000.0;  // C_a [N/rad]
  double friction = 0.9;            // tire-road mu
  double gravity = 9.81;            // [m/s^2]

  // Reproduces the source text's sign on the lateral pose kinematics
  // (p_y rate uses -v_y cos psi). Off by default; see README.
  bool paper_exact_kinematics = false;

  // Speed-dependent friction reduction coefficient e_r of the Dugoff
  // model; 0 disables the reduction entirely.
  double dugoff_friction_reduction = 0.0;

  double wheelbase() const { return lf + lr; }

  // Static load split, no longitudinal/lateral transfer.
  double front_wheel_load() const {
    return mass * gravity * lr / (2.0 * wheelbase());
  }
  double rear_wheel_load() const {
    return mass * gravity * lf / (2.0 * wheelbase());
  }
  double front_axle_share() const { return lr / wheelbase(); }
  double rear_axle_share() const { return lf / wheelbase(); }

  /// Throws std::invalid_argument naming every offending field.
  void validate() const;
};

/// Four-wheel simulation plant state.
struct PlantState {
  static constexpr int kDim = 11;

  double px = 0.0;        // [m], inertial
  double py = 0.0;        // [m], inertial
  double yaw = 0.0;       // [rad], unwrapped
  double vx = 0.0;        // [m/s], body frame
  double vy = 0.0;        // [m/s], body frame
  double yaw_rate = 0.0;  // [rad/s]
  double wheel_fl = 0.0;  // [rad/s]
  double wheel_fr = 0.0;
  double wheel_rl = 0.0;
  double wheel_rr = 0.0;
  double steer = 0.0;     // commanded average steering angle [rad]

  Eigen::VectorXd vector() const;
  static PlantState from_vector(const Eigen::VectorXd& v);
};

/// Two-wheel (bicycle) prediction state.
struct PredictionState {
  static constexpr int kDim = 9;

  double px = 0.0;
  double py = 0.0;
  double yaw = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;
  double wheel_f = 0.0;
  double wheel_r = 0.0;
  double steer = 0.0;

  Eigen::VectorXd vector() const;
  static PredictionState from_vector(const Eigen::VectorXd& v);
};

struct ControlInput {
  static constexpr int kDim = 2;

  double torque = 0.0;      // u_tau, wheel torque [N m]
  double steer_rate = 0.0;  // u_delta [rad/s]

  Eigen::VectorXd vector() const;
  static ControlInput from_vector(const Eigen::VectorXd& v);
};

struct WindCondition {
  double speed = 0.0;      // [m/s], >= 0
  double direction = 0.0;  // [rad], inertial frame
};

struct TireForces {
  double fx = 0.0;  // longitudinal, tire frame [N]
  double fy = 0.0;  // lateral, tire frame [N]
};

/// alpha_f = delta - atan((v_y + l_f w) / v_x). Throws std::domain_error
/// below the standstill guard.
double slip_angle_front(double vx, double vy, double yaw_rate, double lf,
                        double steer);

/// alpha_r = -atan((v_y - l_r w) / v_x).
double slip_angle_rear(double vx, double vy, double yaw_rate, double lr);

/// sigma = (r w - v_x) / v_x.
double slip_ratio(double wheel_speed, double radius, double vx);

/// Linear tire law: F_lon = C_s sigma, F_lat = C_a alpha.
TireForces linear_tire_forces(double sigma, double alpha,
                              const VehicleParams& params);

/// Dugoff tire forces with optional speed-dependent friction reduction.
/// Combined force magnitude never exceeds mu * Fz.
TireForces dugoff_tire_forces(double sigma, double alpha, double vertical_load,
                              double sliding_speed,
                              const VehicleParams& params);

/// Left/right front wheel angles about a common turn center. Returns
/// (steer, steer) for |steer| below 1e-9; throws std::domain_error when
/// the turn radius falls inside the track.
void ackermann_angles(double steer, const VehicleParams& params, double* left,
                      double* right);

/// Four-wheel plant dynamics: Dugoff tires, rear-axle drive torque,
/// steering-rate integrator with Ackermann split.
PlantState plant_derivative(const PlantState& state, const ControlInput& input,
                            const WindCondition& wind,
                            const VehicleParams& params);

/// Bicycle prediction dynamics: linear tires, axle force factors of 2,
/// averaged front steering.
PredictionState prediction_derivative(const PredictionState& state,
                                      const ControlInput& input,
                                      const WindCondition& wind,
                                      const VehicleParams& params);

/// Closed-form Jacobians of prediction_derivative.
void prediction_jacobians(const PredictionState& state,
                          const ControlInput& input, const WindCondition& wind,
                          const VehicleParams& params, Eigen::MatrixXd* dfdx,
                          Eigen::MatrixXd* dfdu);

/// ContinuousModel adapter over prediction_derivative with a fixed wind
/// estimate (zero by default: the controller does not know the disturbance).
class BicycleModel : public ContinuousModel {
 public:
  explicit BicycleModel(const VehicleParams& params,
                        const WindCondition& wind_estimate = {})
      : params_(params), wind_(wind_estimate) {}

  int state_dim() const override { return PredictionState::kDim; }
  int input_dim() const override { return ControlInput::kDim; }
  Eigen::VectorXd derivative(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) const override;
  bool has_analytic_jacobians() const override { return true; }
  void analytic_jacobians(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          Eigen::MatrixXd& dfdx,
                          Eigen::MatrixXd& dfdu) const override;

  const VehicleParams& params() const { return params_; }

 private:
  VehicleParams params_;
  WindCondition wind_;
};

/// ContinuousModel adapter over plant_derivative with a fixed wind sample.
class PlantModel : public ContinuousModel {
 public:
  explicit PlantModel(const VehicleParams& params,
                      const WindCondition& wind = {})
      : params_(params), wind_(wind) {}

  int state_dim() const override { return PlantState::kDim; }
  int input_dim() const override { return ControlInput::kDim; }
  Eigen::VectorXd derivative(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) const override;

  const VehicleParams& params() const { return params_; }

 private:
  VehicleParams params_;
  WindCondition wind_;
};

}  // namespace rtnmpc

#endif  // RTNMPC_VEHICLE_HPP_
