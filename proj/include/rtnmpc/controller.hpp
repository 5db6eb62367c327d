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

#ifndef RTNMPC_CONTROLLER_HPP_
#define RTNMPC_CONTROLLER_HPP_

#include <Eigen/Dense>
#include <vector>

#include "rtnmpc/constraints.hpp"
#include "rtnmpc/discretize.hpp"
#include "rtnmpc/qp.hpp"

namespace rtnmpc {

enum class ControllerMode {
  kRti,           // one linearize-build-solve-update per sample
  kSqpConverged,  // iterate the same cycle to convergence (baseline)
};

struct SqpSettings {
  double tolerance = 1e-8;  // inf-norm of the combined (dx, du) step
  int max_iterations = 50;
};

struct ControllerConfig {
  int horizon = 15;
  double sample_period = 0.04;  // [s]
  CostWeights weights;
  QpSettings qp;
  SqpSettings sqp;
  NewtonSettings newton;
  // Clip bounds for the emitted input; empty means unbounded.
  Eigen::VectorXd input_lower;
  Eigen::VectorXd input_upper;
};

struct ControlDecision {
  Eigen::VectorXd input;  // applied from the next sample instant on
  std::vector<Eigen::VectorXd> predicted_states;
  std::vector<Eigen::VectorXd> predicted_inputs;
  QpStatus qp_status = QpStatus::kSolved;
  int qp_iterations = 0;
  int sqp_iterations = 1;  // accepted linearize-solve-update cycles
  bool sqp_converged = true;
  KktResiduals kkt;
  double max_constraint_residual = 0.0;  // max over G z - h at the solution
  double dynamics_defect = 0.0;  // max stage residual of the implicit map
  bool fallback = false;         // QP failed; previous plan reused
  double wall_time = 0.0;        // linearize+build+solve+update [s]
};

/// Real-Time Iteration controller over a generic continuous model with
/// optional stage constraints.
///
/// Time alignment: at sample t the controller receives the measurement
/// taken at t while the previously committed input keeps acting over
/// [t, t+dt). The first horizon input is therefore anchored to that
/// committed value and the returned decision is the input that takes
/// effect at t+dt.
///
/// Instances hold mutable guess trajectories; use one instance per thread.
class RtiController {
 public:
  RtiController(const ContinuousModel& model,
                const StageConstraintModel* constraints,
                const ControllerConfig& config, ControllerMode mode);

  /// Seeds guesses with N+1 copies of x0 and N copies of u0.
  void initialize(const Eigen::VectorXd& x0, const Eigen::VectorXd& u0);

  /// One control sample: RTI performs a single linearize-build-solve-update
  /// cycle, the converged-SQP baseline repeats it on the frozen measurement.
  /// Guesses are shifted afterwards for the next call.
  ControlDecision step(const Eigen::VectorXd& measurement,
                       const std::vector<Eigen::VectorXd>& reference);

  /// Drops stage 0, appends a terminal stage by one implicit Euler step
  /// under the last input, and repeats the last input.
  void shift();

  const std::vector<Eigen::VectorXd>& state_guess() const { return x_guess_; }
  const std::vector<Eigen::VectorXd>& input_guess() const { return u_guess_; }
  const Eigen::VectorXd& latest_input() const { return u_latest_; }
  ControllerMode mode() const { return mode_; }
  bool initialized() const { return initialized_; }

 private:
  struct CycleResult {
    QpSolution solution;
    KktResiduals kkt;
    double step_norm = 0.0;
    double max_constraint_residual = 0.0;
    bool usable = false;
  };

  CycleResult cycle(const Eigen::VectorXd& measurement,
                    const std::vector<Eigen::VectorXd>& reference);
  void recover_from_failure(const Eigen::VectorXd& measurement);
  double dynamics_defect() const;
  Eigen::VectorXd clip_input(const Eigen::VectorXd& input) const;

  const ContinuousModel& model_;
  const StageConstraintModel* constraints_;
  ControllerConfig config_;
  ControllerMode mode_;

  std::vector<Eigen::VectorXd> x_guess_;
  std::vector<Eigen::VectorXd> u_guess_;
  Eigen::VectorXd u_latest_;
  QpSolution warm_start_;
  bool have_warm_start_ = false;
  bool initialized_ = false;
  int consecutive_failures_ = 0;
};

}  // namespace rtnmpc

#endif  // RTNMPC_CONTROLLER_HPP_
