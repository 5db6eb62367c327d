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

#ifndef RTNMPC_CONSTRAINTS_HPP_
#define RTNMPC_CONSTRAINTS_HPP_

#include <Eigen/Dense>

#include "rtnmpc/vehicle.hpp"

namespace rtnmpc {

enum class FrictionCircleMode {
  kPerAxle,  // one circle per axle, budget split by static axle load
  kTotal,    // single whole-vehicle circle on the summed forces
};

struct ConstraintLimits {
  double torque_max = 300.0;                  // [N m]
  double steer_rate_max = 1.5;                // [rad/s]
  double steer_max = 0.7853981633974483;      // 45 deg [rad]
  double friction_budget_sq = 3118049.6400;   // (mu m g)^2 [N^2]
  FrictionCircleMode friction_mode = FrictionCircleMode::kPerAxle;

  static ConstraintLimits from_params(const VehicleParams& params);

  void validate() const;
};

/// First-order expansion of the stage constraints about a guess point:
/// G(x, u) ~ g + dx (x - x_g) + du (u - u_g), rows of dx/du matching g.
struct ConstraintLinearization {
  Eigen::VectorXd g;
  Eigen::MatrixXd dx;
  Eigen::MatrixXd du;
};

/// Stage inequality set G(x, u) <= 0 evaluated and linearized per
/// prediction stage. Implementations are pure and thread-safe.
class StageConstraintModel {
 public:
  virtual ~StageConstraintModel() = default;
  virtual int row_count() const = 0;
  virtual Eigen::VectorXd evaluate(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& u) const = 0;
  virtual ConstraintLinearization linearize(const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& u) const = 0;
};

/// Friction-circle rows on the bicycle model's linear axle forces plus box
/// rows on torque, steering rate and the steering-angle state.
///
/// Row order (per-axle mode):
///   0 front circle, 1 rear circle, 2/3 +-torque, 4/5 +-steer rate,
///   6/7 +-steer angle. Total mode drops row 1 and uses summed forces.
class VehicleStageConstraints : public StageConstraintModel {
 public:
  VehicleStageConstraints(const VehicleParams& params,
                          const ConstraintLimits& limits)
      : params_(params), limits_(limits) {}

  int row_count() const override;
  Eigen::VectorXd evaluate(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u) const override;
  ConstraintLinearization linearize(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& u) const override;

  const ConstraintLimits& limits() const { return limits_; }

 private:
  VehicleParams params_;
  ConstraintLimits limits_;
};

}  // namespace rtnmpc

#endif  // RTNMPC_CONSTRAINTS_HPP_
