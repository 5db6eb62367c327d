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

#include "rtnmpc/controller.hpp"

#include <chrono>
#include <stdexcept>

namespace rtnmpc {

RtiController::RtiController(const ContinuousModel& model,
                             const StageConstraintModel* constraints,
                             const ControllerConfig& config,
                             ControllerMode mode)
    : model_(model), constraints_(constraints), config_(config), mode_(mode) {
  if (config_.horizon < 2) {
    throw std::invalid_argument("controller horizon must be at least 2");
  }
  if (!(config_.sample_period > 0.0)) {
    throw std::invalid_argument("sample period must be positive");
  }
  config_.weights.validate(model_.state_dim(), model_.input_dim());
}

void RtiController::initialize(const Eigen::VectorXd& x0,
                               const Eigen::VectorXd& u0) {
  if (x0.size() != model_.state_dim() || !x0.allFinite()) {
    throw std::invalid_argument("initial state must be finite and sized n");
  }
  Eigen::VectorXd u = u0.size() == 0
                          ? Eigen::VectorXd::Zero(model_.input_dim())
                          : u0;
  if (u.size() != model_.input_dim()) {
    throw std::invalid_argument("initial input must be sized m");
  }
  x_guess_.assign(config_.horizon + 1, x0);
  u_guess_.assign(config_.horizon, u);
  u_latest_ = u;
  have_warm_start_ = false;
  consecutive_failures_ = 0;
  initialized_ = true;
}

RtiController::CycleResult RtiController::cycle(
    const Eigen::VectorXd& measurement,
    const std::vector<Eigen::VectorXd>& reference) {
  const int n = model_.state_dim();
  const int m = model_.input_dim();
  const int horizon = config_.horizon;

  std::vector<StageJacobians> stage_lins;
  stage_lins.reserve(horizon);
  std::vector<ConstraintLinearization> constraint_lins;
  if (constraints_ != nullptr) {
    constraint_lins.reserve(horizon);
  }
  for (int i = 1; i <= horizon; ++i) {
    stage_lins.push_back(stage_jacobians(model_, x_guess_[i], x_guess_[i - 1],
                                         u_guess_[i - 1],
                                         config_.sample_period));
    if (constraints_ != nullptr) {
      constraint_lins.push_back(
          constraints_->linearize(x_guess_[i], u_guess_[i - 1]));
    }
  }

  const QpProblem qp =
      build_qp(x_guess_, u_guess_, reference, measurement, u_latest_,
               config_.weights, stage_lins, constraint_lins);
  const QpSolution sol =
      solve_qp(qp, config_.qp, have_warm_start_ ? &warm_start_ : nullptr);

  CycleResult result;
  result.solution = sol;
  if (sol.status != QpStatus::kSolved || !sol.primal.allFinite()) {
    // Applying an unconverged iterate poisons the guess trajectories;
    // better to keep the previous plan and recover on fresh measurements.
    result.usable = false;
    return result;
  }
  result.usable = true;
  result.kkt = kkt_residuals(qp, sol);
  result.step_norm = sol.primal.lpNorm<Eigen::Infinity>();
  if (qp.ineq_matrix.rows() > 0) {
    result.max_constraint_residual =
        (qp.ineq_matrix * sol.primal - qp.ineq_rhs).maxCoeff();
  }

  for (int i = 0; i <= horizon; ++i) {
    x_guess_[i] += sol.primal.segment(n * i, n);
  }
  const int u_base = n * (horizon + 1);
  for (int i = 0; i < horizon; ++i) {
    u_guess_[i] += sol.primal.segment(u_base + m * i, m);
  }

  // Deviations were absorbed into the guesses, so the next solve expects a
  // small step: keep the duals, restart the primal at zero.
  warm_start_ = sol;
  warm_start_.primal.setZero();
  have_warm_start_ = true;
  return result;
}

void RtiController::recover_from_failure(const Eigen::VectorXd& measurement) {
  // One isolated failure keeps the shifted plan; repeated failures mean
  // the guesses went bad, so reseed them from the live measurement.
  if (++consecutive_failures_ >= 2 && measurement.allFinite()) {
    x_guess_.assign(config_.horizon + 1, measurement);
    u_guess_.assign(config_.horizon, u_latest_);
    have_warm_start_ = false;
    consecutive_failures_ = 0;
  }
}

double RtiController::dynamics_defect() const {
  double worst = 0.0;
  for (int i = 1; i <= config_.horizon; ++i) {
    const Eigen::VectorXd residual =
        x_guess_[i] - x_guess_[i - 1] -
        config_.sample_period * model_.derivative(x_guess_[i], u_guess_[i - 1]);
    worst = std::max(worst, residual.lpNorm<Eigen::Infinity>());
  }
  return worst;
}

Eigen::VectorXd RtiController::clip_input(const Eigen::VectorXd& input) const {
  Eigen::VectorXd out = input;
  if (config_.input_lower.size() == out.size()) {
    out = out.cwiseMax(config_.input_lower);
  }
  if (config_.input_upper.size() == out.size()) {
    out = out.cwiseMin(config_.input_upper);
  }
  return out;
}

ControlDecision RtiController::step(
    const Eigen::VectorXd& measurement,
    const std::vector<Eigen::VectorXd>& reference) {
  if (!initialized_) {
    throw std::logic_error("controller used before initialize()");
  }
  if (static_cast<int>(reference.size()) != config_.horizon + 1) {
    throw std::invalid_argument("reference window must have N+1 points");
  }

  const auto t0 = std::chrono::steady_clock::now();
  ControlDecision decision;

  if (mode_ == ControllerMode::kRti) {
    const CycleResult res = cycle(measurement, reference);
    decision.sqp_iterations = 1;
    if (res.usable) {
      decision.qp_status = res.solution.status;
      decision.qp_iterations = res.solution.iterations;
      decision.kkt = res.kkt;
      decision.max_constraint_residual = res.max_constraint_residual;
      consecutive_failures_ = 0;
    } else {
      decision.fallback = true;
      decision.qp_status = res.solution.status;
      recover_from_failure(measurement);
    }
  } else {
    int accepted = 0;
    bool converged = false;
    QpStatus last_status = QpStatus::kSolved;
    int last_iters = 0;
    for (int k = 0; k < config_.sqp.max_iterations; ++k) {
      const CycleResult res = cycle(measurement, reference);
      if (!res.usable) {
        decision.fallback = accepted == 0;
        last_status = res.solution.status;
        if (decision.fallback) {
          recover_from_failure(measurement);
        }
        break;
      }
      last_status = res.solution.status;
      last_iters = res.solution.iterations;
      decision.kkt = res.kkt;
      decision.max_constraint_residual = res.max_constraint_residual;
      if (res.step_norm <= config_.sqp.tolerance) {
        converged = true;
        break;
      }
      ++accepted;
    }
    if (converged || accepted > 0) {
      consecutive_failures_ = 0;
    }
    decision.sqp_iterations = accepted;
    decision.sqp_converged = converged;
    decision.qp_status = last_status;
    decision.qp_iterations = last_iters;
  }

  const int emit_stage = 1;
  decision.input = clip_input(u_guess_[emit_stage]);
  decision.predicted_states = x_guess_;
  decision.predicted_inputs = u_guess_;
  decision.dynamics_defect = dynamics_defect();

  u_latest_ = decision.input;
  shift();

  decision.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return decision;
}

void RtiController::shift() {
  if (!initialized_) {
    throw std::logic_error("controller used before initialize()");
  }
  const int horizon = config_.horizon;
  Eigen::VectorXd terminal;
  try {
    terminal = implicit_euler_step(model_, x_guess_[horizon],
                                   u_guess_[horizon - 1],
                                   config_.sample_period, config_.newton);
  } catch (const std::runtime_error&) {
    // Integration failure: repeat the last state instead of extrapolating.
    terminal = x_guess_[horizon];
  }
  for (int i = 0; i < horizon; ++i) {
    x_guess_[i] = x_guess_[i + 1];
  }
  x_guess_[horizon] = terminal;
  for (int i = 0; i + 1 < horizon; ++i) {
    u_guess_[i] = u_guess_[i + 1];
  }
  // u_guess_[horizon - 1] already repeats the last input.
}

}  // namespace rtnmpc
