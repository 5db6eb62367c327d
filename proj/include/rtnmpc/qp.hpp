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

#ifndef RTNMPC_QP_HPP_
#define RTNMPC_QP_HPP_

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "rtnmpc/constraints.hpp"
#include "rtnmpc/discretize.hpp"

namespace rtnmpc {

/// Tracked-output selection and cost normalization. Each tracked output
/// error is divided by its expected (max - min) range before weighting,
/// and likewise each input increment, so weights compare like with like.
struct CostWeights {
  Eigen::MatrixXd output_matrix;      // C, rows pick tracked outputs
  Eigen::VectorXd output_weights;     // diagonal of Q before normalization
  Eigen::VectorXd output_ranges;      // expected output spans, > 0
  Eigen::VectorXd increment_weights;  // diagonal of R before normalization
  Eigen::VectorXd increment_ranges;   // expected input spans, > 0

  Eigen::MatrixXd normalized_output_cost() const;
  Eigen::MatrixXd normalized_increment_cost() const;

  void validate(int state_dim, int input_dim) const;

  /// Tracks (p_x, p_y, v_x) of the bicycle state; unit output weights,
  /// increment weight 5 on both inputs.
  static CostWeights vehicle_defaults();
};

/// Stacked deviation-variable QP
///   min 1/2 z' H z + g' z
///   s.t. A z = b,  G z <= h
/// over z = [dx_0 .. dx_N, du_0 .. du_{N-1}].
struct QpProblem {
  Eigen::SparseMatrix<double> hessian;
  Eigen::VectorXd gradient;
  Eigen::SparseMatrix<double> eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::SparseMatrix<double> ineq_matrix;
  Eigen::VectorXd ineq_rhs;

  int horizon = 0;
  int state_dim = 0;
  int input_dim = 0;

  int variable_count() const { return static_cast<int>(gradient.size()); }
};

enum class QpStatus {
  kSolved,
  kMaxIterations,
  kPrimalInfeasible,
  kDualInfeasible,
};

const char* to_string(QpStatus status);

struct QpSettings {
  double eps_primal = 1e-6;
  double eps_dual = 1e-6;
  int max_iterations = 4000;
  double rho = 0.1;            // ADMM penalty on inequality rows
  double rho_eq_scale = 1e3;   // equality rows get rho * rho_eq_scale
  double sigma = 1e-6;
  double relaxation = 1.6;
  bool polish = true;          // active-set KKT refinement after ADMM
  double polish_reg = 1e-9;
};

struct QpSolution {
  Eigen::VectorXd primal;
  Eigen::VectorXd eq_duals;
  Eigen::VectorXd ineq_duals;
  QpStatus status = QpStatus::kMaxIterations;
  int iterations = 0;
  bool polished = false;
  double solve_time = 0.0;  // [s]
};

/// Assembles the stage-structured QP from guess trajectories, a reference
/// window, the measured state, the latest applied input, and the stage
/// linearizations. `stage_lins[i]` and `constraint_lins[i]` belong to
/// prediction stage i+1; `constraint_lins` may be empty for unconstrained
/// problems. Input increments are differenced against `u_latest`.
QpProblem build_qp(const std::vector<Eigen::VectorXd>& x_guess,
                   const std::vector<Eigen::VectorXd>& u_guess,
                   const std::vector<Eigen::VectorXd>& reference,
                   const Eigen::VectorXd& x_measured,
                   const Eigen::VectorXd& u_latest, const CostWeights& weights,
                   const std::vector<StageJacobians>& stage_lins,
                   const std::vector<ConstraintLinearization>& constraint_lins);

/// Operator-splitting (ADMM) solve with optional warm start and active-set
/// polish. Deterministic: identical inputs produce identical iterates.
QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings = {},
                    const QpSolution* warm_start = nullptr);

struct KktResiduals {
  double stationarity = 0.0;
  double equality = 0.0;
  double inequality = 0.0;
  double complementarity = 0.0;

  double max() const;
};

KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& sol);

/// Plain-text dump of (H, g, A, b, G, h) in MatrixMarket-style coordinate
/// blocks for offline cross-checking.
void dump_qp(const QpProblem& problem, const std::string& path);

}  // namespace rtnmpc

#endif  // RTNMPC_QP_HPP_
