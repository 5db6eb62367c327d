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

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "rtnmpc/qp.hpp"

namespace rtnmpc {

Eigen::MatrixXd CostWeights::normalized_output_cost() const {
  return (output_weights.array() /
          (output_ranges.array() * output_ranges.array()))
      .matrix()
      .asDiagonal();
}

Eigen::MatrixXd CostWeights::normalized_increment_cost() const {
  return (increment_weights.array() /
          (increment_ranges.array() * increment_ranges.array()))
      .matrix()
      .asDiagonal();
}

void CostWeights::validate(int state_dim, int input_dim) const {
  const auto n_out = output_matrix.rows();
  if (output_matrix.cols() != state_dim) {
    throw std::invalid_argument("output matrix column count != state dim");
  }
  if (output_weights.size() != n_out || output_ranges.size() != n_out) {
    throw std::invalid_argument("output weight/range size != output count");
  }
  if (increment_weights.size() != input_dim ||
      increment_ranges.size() != input_dim) {
    throw std::invalid_argument("increment weight/range size != input dim");
  }
  if ((output_weights.array() < 0.0).any() ||
      (increment_weights.array() < 0.0).any()) {
    throw std::invalid_argument("cost weights must be nonnegative");
  }
  if ((output_ranges.array() <= 0.0).any() ||
      (increment_ranges.array() <= 0.0).any()) {
    throw std::invalid_argument("normalization ranges must be positive");
  }
}

CostWeights CostWeights::vehicle_defaults() {
  // Pose tracking plus speed profile. The heading row damps the approach
  // angle; without it the lateral loop (steer rate -> angle -> heading ->
  // offset) limit-cycles under the one-sample delay.
  CostWeights w;
  w.output_matrix = Eigen::MatrixXd::Zero(4, 9);
  w.output_matrix(0, 0) = 1.0;  // p_x
  w.output_matrix(1, 1) = 1.0;  // p_y
  w.output_matrix(2, 2) = 1.0;  // heading
  w.output_matrix(3, 3) = 1.0;  // v_x
  w.output_weights = Eigen::Vector4d(1.0, 1.0, 1.0, 1.0);
  w.output_ranges = Eigen::Vector4d(1.5, 1.5, 0.45, 2.0);
  w.increment_weights = Eigen::Vector2d(5.0, 5.0);
  w.increment_ranges = Eigen::Vector2d(100.0, 1.0);
  return w;
}

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::kSolved:
      return "solved";
    case QpStatus::kMaxIterations:
      return "max-iterations";
    case QpStatus::kPrimalInfeasible:
      return "primal-infeasible";
    case QpStatus::kDualInfeasible:
      return "dual-infeasible";
  }
  return "unknown";
}

QpProblem build_qp(
    const std::vector<Eigen::VectorXd>& x_guess,
    const std::vector<Eigen::VectorXd>& u_guess,
    const std::vector<Eigen::VectorXd>& reference,
    const Eigen::VectorXd& x_measured, const Eigen::VectorXd& u_latest,
    const CostWeights& weights, const std::vector<StageJacobians>& stage_lins,
    const std::vector<ConstraintLinearization>& constraint_lins) {
  const int horizon = static_cast<int>(u_guess.size());
  if (horizon < 1) {
    throw std::invalid_argument("build_qp needs at least one input stage");
  }
  if (static_cast<int>(x_guess.size()) != horizon + 1) {
    throw std::invalid_argument("state guess must have N+1 entries");
  }
  if (static_cast<int>(reference.size()) != horizon + 1) {
    throw std::invalid_argument("reference window must have N+1 entries");
  }
  if (static_cast<int>(stage_lins.size()) != horizon) {
    throw std::invalid_argument("expected one stage linearization per step");
  }
  if (!constraint_lins.empty() &&
      static_cast<int>(constraint_lins.size()) != horizon) {
    throw std::invalid_argument(
        "expected one constraint linearization per step or none");
  }

  const int n = static_cast<int>(x_measured.size());
  const int m = static_cast<int>(u_latest.size());
  weights.validate(n, m);

  const int nx_vars = n * (horizon + 1);
  const int nu_vars = m * horizon;
  const int n_vars = nx_vars + nu_vars;
  const auto x_off = [n](int i) { return n * i; };
  const auto u_off = [nx_vars, m](int i) { return nx_vars + m * i; };

  const Eigen::MatrixXd& c = weights.output_matrix;
  const Eigen::MatrixXd qn = weights.normalized_output_cost();
  const Eigen::MatrixXd rn = weights.normalized_increment_cost();
  Eigen::MatrixXd cqc = 2.0 * c.transpose() * qn * c;
  cqc = 0.5 * (cqc + cqc.transpose()).eval();  // exact symmetry

  std::vector<Eigen::Triplet<double>> h_trip;
  Eigen::VectorXd gradient = Eigen::VectorXd::Zero(n_vars);

  for (int i = 0; i <= horizon; ++i) {
    if (x_guess[i].size() != n) {
      throw std::invalid_argument("state guess dimension mismatch");
    }
    if (reference[i].size() != c.rows()) {
      throw std::invalid_argument("reference dimension != output count");
    }
    for (int row = 0; row < n; ++row) {
      for (int col = 0; col < n; ++col) {
        if (cqc(row, col) != 0.0) {
          h_trip.emplace_back(x_off(i) + row, x_off(i) + col, cqc(row, col));
        }
      }
    }
    const Eigen::VectorXd err = reference[i] - c * x_guess[i];
    gradient.segment(x_off(i), n) = -2.0 * c.transpose() * qn * err;
  }

  // Input-increment block: Delta u_i = (u_i - u_{i-1}) with u_{-1} = u_l.
  // The difference operator S is block lower bidiagonal; the dense product
  // S' R S is small (m*N square) so it is formed directly.
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(nu_vars, nu_vars);
  Eigen::VectorXd du_guess(nu_vars);
  for (int i = 0; i < horizon; ++i) {
    if (u_guess[i].size() != m) {
      throw std::invalid_argument("input guess dimension mismatch");
    }
    s.block(m * i, m * i, m, m).setIdentity();
    if (i > 0) {
      s.block(m * i, m * (i - 1), m, m) = -Eigen::MatrixXd::Identity(m, m);
      du_guess.segment(m * i, m) = u_guess[i] - u_guess[i - 1];
    } else {
      du_guess.segment(0, m) = u_guess[0] - u_latest;
    }
  }
  Eigen::MatrixXd r_all = Eigen::MatrixXd::Zero(nu_vars, nu_vars);
  for (int i = 0; i < horizon; ++i) {
    r_all.block(m * i, m * i, m, m) = rn;
  }
  Eigen::MatrixXd hu = 2.0 * s.transpose() * r_all * s;
  hu = 0.5 * (hu + hu.transpose()).eval();
  for (int row = 0; row < nu_vars; ++row) {
    for (int col = 0; col < nu_vars; ++col) {
      if (hu(row, col) != 0.0) {
        h_trip.emplace_back(nx_vars + row, nx_vars + col, hu(row, col));
      }
    }
  }
  gradient.segment(nx_vars, nu_vars) =
      2.0 * s.transpose() * (r_all * du_guess);

  // Equalities: initial-value embedding, latest-input anchor, N dynamics
  // stages, terminal input hold (last increment forced to zero).
  const int n_eq = n + m + n * horizon + m;
  std::vector<Eigen::Triplet<double>> a_trip;
  Eigen::VectorXd eq_rhs(n_eq);
  int row0 = 0;

  for (int k = 0; k < n; ++k) {
    a_trip.emplace_back(row0 + k, x_off(0) + k, 1.0);
  }
  eq_rhs.segment(row0, n) = x_measured - x_guess[0];
  row0 += n;

  for (int k = 0; k < m; ++k) {
    a_trip.emplace_back(row0 + k, u_off(0) + k, 1.0);
  }
  eq_rhs.segment(row0, m) = u_latest - u_guess[0];
  row0 += m;

  for (int i = 1; i <= horizon; ++i) {
    const StageJacobians& lin = stage_lins[i - 1];
    if (lin.a1.rows() != n || lin.a1.cols() != n || lin.b.rows() != n ||
        lin.b.cols() != m || lin.fg.size() != n) {
      throw std::invalid_argument("stage linearization dimension mismatch");
    }
    if (!lin.a1.allFinite() || !lin.b.allFinite() || !lin.fg.allFinite()) {
      throw std::runtime_error("non-finite stage linearization");
    }
    // (I - A1) dx_i - A0 dx_{i-1} - B du_{i-1} = Fg_i - xg_i
    for (int r = 0; r < n; ++r) {
      for (int col = 0; col < n; ++col) {
        const double v = (r == col ? 1.0 : 0.0) - lin.a1(r, col);
        if (v != 0.0) a_trip.emplace_back(row0 + r, x_off(i) + col, v);
        const double a0v = -lin.a0(r, col);
        if (a0v != 0.0) {
          a_trip.emplace_back(row0 + r, x_off(i - 1) + col, a0v);
        }
      }
      for (int col = 0; col < m; ++col) {
        if (lin.b(r, col) != 0.0) {
          a_trip.emplace_back(row0 + r, u_off(i - 1) + col, -lin.b(r, col));
        }
      }
    }
    eq_rhs.segment(row0, n) = lin.fg - x_guess[i];
    row0 += n;
  }

  if (horizon >= 2) {
    for (int k = 0; k < m; ++k) {
      a_trip.emplace_back(row0 + k, u_off(horizon - 1) + k, 1.0);
      a_trip.emplace_back(row0 + k, u_off(horizon - 2) + k, -1.0);
    }
    eq_rhs.segment(row0, m) = -(u_guess[horizon - 1] - u_guess[horizon - 2]);
  } else {
    for (int k = 0; k < m; ++k) {
      a_trip.emplace_back(row0 + k, u_off(0) + k, 1.0);
    }
    eq_rhs.segment(row0, m) = u_latest - u_guess[0];
  }
  row0 += m;

  // Inequalities: G_g + D dx_i + E du_{i-1} <= 0 per stage i = 1..N.
  int n_ineq = 0;
  for (const auto& lin : constraint_lins) {
    n_ineq += static_cast<int>(lin.g.size());
  }
  std::vector<Eigen::Triplet<double>> g_trip;
  Eigen::VectorXd ineq_rhs(n_ineq);
  int irow = 0;
  for (int i = 1; i <= horizon && !constraint_lins.empty(); ++i) {
    const ConstraintLinearization& lin = constraint_lins[i - 1];
    const int rows = static_cast<int>(lin.g.size());
    if (lin.dx.rows() != rows || lin.du.rows() != rows || lin.dx.cols() != n ||
        lin.du.cols() != m) {
      throw std::invalid_argument("constraint linearization dimension error");
    }
    if (!lin.g.allFinite() || !lin.dx.allFinite() || !lin.du.allFinite()) {
      throw std::runtime_error("non-finite constraint linearization");
    }
    for (int r = 0; r < rows; ++r) {
      for (int col = 0; col < n; ++col) {
        if (lin.dx(r, col) != 0.0) {
          g_trip.emplace_back(irow + r, x_off(i) + col, lin.dx(r, col));
        }
      }
      for (int col = 0; col < m; ++col) {
        if (lin.du(r, col) != 0.0) {
          g_trip.emplace_back(irow + r, u_off(i - 1) + col, lin.du(r, col));
        }
      }
    }
    ineq_rhs.segment(irow, rows) = -lin.g;
    irow += rows;
  }

  QpProblem qp;
  qp.horizon = horizon;
  qp.state_dim = n;
  qp.input_dim = m;
  qp.hessian.resize(n_vars, n_vars);
  qp.hessian.setFromTriplets(h_trip.begin(), h_trip.end());
  qp.gradient = std::move(gradient);
  qp.eq_matrix.resize(n_eq, n_vars);
  qp.eq_matrix.setFromTriplets(a_trip.begin(), a_trip.end());
  qp.eq_rhs = std::move(eq_rhs);
  qp.ineq_matrix.resize(n_ineq, n_vars);
  qp.ineq_matrix.setFromTriplets(g_trip.begin(), g_trip.end());
  qp.ineq_rhs = std::move(ineq_rhs);

  if (!qp.eq_rhs.allFinite() || !qp.gradient.allFinite() ||
      (n_ineq > 0 && !qp.ineq_rhs.allFinite())) {
    throw std::runtime_error("non-finite QP data");
  }
  return qp;
}

double KktResiduals::max() const {
  return std::max(std::max(stationarity, equality),
                  std::max(inequality, complementarity));
}

KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& sol) {
  KktResiduals out;
  Eigen::VectorXd stat = problem.hessian * sol.primal + problem.gradient;
  if (problem.eq_matrix.rows() > 0) {
    stat += problem.eq_matrix.transpose() * sol.eq_duals;
    out.equality = (problem.eq_matrix * sol.primal - problem.eq_rhs)
                       .lpNorm<Eigen::Infinity>();
  }
  if (problem.ineq_matrix.rows() > 0) {
    stat += problem.ineq_matrix.transpose() * sol.ineq_duals;
    const Eigen::VectorXd slack =
        problem.ineq_rhs - problem.ineq_matrix * sol.primal;
    out.inequality = (-slack).cwiseMax(0.0).lpNorm<Eigen::Infinity>();
    out.complementarity = std::abs(sol.ineq_duals.dot(slack));
  }
  out.stationarity = stat.lpNorm<Eigen::Infinity>();
  return out;
}

void dump_qp(const QpProblem& problem, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open QP dump file: " + path);
  }
  out.precision(17);
  auto write_sparse = [&out](const char* name,
                             const Eigen::SparseMatrix<double>& mat) {
    out << "%% matrix " << name << " coordinate real general\n"
        << mat.rows() << " " << mat.cols() << " " << mat.nonZeros() << "\n";
    for (int k = 0; k < mat.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(mat, k); it; ++it) {
        out << it.row() + 1 << " " << it.col() + 1 << " " << it.value()
            << "\n";
      }
    }
  };
  auto write_vector = [&out](const char* name, const Eigen::VectorXd& v) {
    out << "%% vector " << name << " array real\n" << v.size() << "\n";
    for (int i = 0; i < v.size(); ++i) {
      out << v[i] << "\n";
    }
  };
  write_sparse("H", problem.hessian);
  write_vector("g", problem.gradient);
  write_sparse("A", problem.eq_matrix);
  write_vector("b", problem.eq_rhs);
  write_sparse("G", problem.ineq_matrix);
  write_vector("h", problem.ineq_rhs);
}

}  // namespace rtnmpc
