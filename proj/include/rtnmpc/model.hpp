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

#ifndef RTNMPC_MODEL_HPP_
#define RTNMPC_MODEL_HPP_

#include <Eigen/Dense>

namespace rtnmpc {

/// Continuous-time dynamics ẋ = f(x, u).
///
/// Implementations must be pure: identical (x, u) give bit-identical
/// derivatives, no shared mutable state, safe to call concurrently.
class ContinuousModel {
 public:
  virtual ~ContinuousModel() = default;

  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;

  virtual Eigen::VectorXd derivative(const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u) const = 0;

  /// Models with closed-form ∂f/∂x, ∂f/∂u override this pair; everything
  /// else falls back to finite differences in model_jacobians().
  virtual bool has_analytic_jacobians() const { return false; }
  virtual void analytic_jacobians(const Eigen::VectorXd& /*x*/,
                                  const Eigen::VectorXd& /*u*/,
                                  Eigen::MatrixXd& /*dfdx*/,
                                  Eigen::MatrixXd& /*dfdu*/) const;
};

}  // namespace rtnmpc

#endif  // RTNMPC_MODEL_HPP_
