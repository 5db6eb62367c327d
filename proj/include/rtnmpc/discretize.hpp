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

#ifndef RTNMPC_DISCRETIZE_HPP_
#define RTNMPC_DISCRETIZE_HPP_

#include <Eigen/Dense>

#include "rtnmpc/model.hpp"

namespace rtnmpc {

struct NewtonSettings {
  double tolerance = 1e-10;  // inf-norm of the step residual
  int max_iterations = 25;
  int max_halvings = 4;  // damped fallback on residual increase
};

/// Linearization of the one-step map
///   F(x_k, x_{k-1}, u) = x_{k-1} + f(x_k, u) dt
/// about a guess point. a0 = dF/dx_{k-1} is the identity by structure;
/// a1 = dt df/dx and b = dt df/du are taken at (x_k, u); fg is F at the
/// guess triple.
struct StageJacobians {
  Eigen::MatrixXd a0;
  Eigen::MatrixXd a1;
  Eigen::MatrixXd b;
  Eigen::VectorXd fg;
};

/// One implicit Euler step: solves x = x_prev + f(x, u) dt by Newton
/// iteration started at x_prev. The returned state satisfies the residual
/// to settings.tolerance; throws std::runtime_error on non-convergence or
/// a singular Newton matrix.
Eigen::VectorXd implicit_euler_step(const ContinuousModel& model,
                                    const Eigen::VectorXd& x_prev,
                                    const Eigen::VectorXd& u, double dt,
                                    const NewtonSettings& settings = {});

StageJacobians stage_jacobians(const ContinuousModel& model,
                               const Eigen::VectorXd& x_guess,
                               const Eigen::VectorXd& x_prev_guess,
                               const Eigen::VectorXd& u_guess, double dt);

/// df/dx and df/du, dispatching to the model's analytic pair when present
/// and to central finite differences otherwise.
void model_jacobians(const ContinuousModel& model, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& u, Eigen::MatrixXd* dfdx,
                     Eigen::MatrixXd* dfdu);

/// Central finite differences with component-relative step
/// h = max(1e-6, 1e-6 |x_i|). Kept separate so it can serve as the oracle
/// for models that also provide the analytic pair.
void finite_difference_jacobians(const ContinuousModel& model,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& u,
                                 Eigen::MatrixXd* dfdx, Eigen::MatrixXd* dfdu);

/// Classical RK4 applied `substeps` times with step dt/substeps, input held
/// constant (zero-order hold). Throws std::runtime_error when the state
/// leaves the finite range.
Eigen::VectorXd rk4_integrate(const ContinuousModel& model,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u, double dt,
                              int substeps);

}  // namespace rtnmpc

#endif  // RTNMPC_DISCRETIZE_HPP_
