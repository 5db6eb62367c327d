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

#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rtnmpc/qp.hpp"

namespace rtnmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

// Stacked constraint system with modified Ruiz equilibration: column
// scaling d over the variables, row scaling e over the constraints, and a
// scalar cost scaling. The solver iterates on the scaled data and maps
// back for termination checks and reporting.
struct ScaledProblem {
  Eigen::SparseMatrix<double> p;  // c * D P D
  Eigen::VectorXd q;              // c * D q
  Eigen::SparseMatrix<double> m;  // E M D
  Eigen::VectorXd lower;          // E l
  Eigen::VectorXd upper;          // E u
  Eigen::VectorXd d;              // variable scaling
  Eigen::VectorXd e;              // row scaling
  double cost_scale = 1.0;
  int eq_rows = 0;
  int ineq_rows = 0;
  int total_rows() const { return eq_rows + ineq_rows; }
};

Eigen::SparseMatrix<double> stack_rows(const QpProblem& p) {
  const int me = static_cast<int>(p.eq_matrix.rows());
  const int mi = static_cast<int>(p.ineq_matrix.rows());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(p.eq_matrix.nonZeros() + p.ineq_matrix.nonZeros());
  for (int k = 0; k < p.eq_matrix.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.eq_matrix, k); it;
         ++it) {
      trip.emplace_back(static_cast<int>(it.row()),
                        static_cast<int>(it.col()), it.value());
    }
  }
  for (int k = 0; k < p.ineq_matrix.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.ineq_matrix, k); it;
         ++it) {
      trip.emplace_back(me + static_cast<int>(it.row()),
                        static_cast<int>(it.col()), it.value());
    }
  }
  Eigen::SparseMatrix<double> m(me + mi, p.variable_count());
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

void column_inf_norms(const Eigen::SparseMatrix<double>& mat,
                      Eigen::VectorXd* norms) {
  for (int k = 0; k < mat.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(mat, k); it; ++it) {
      (*norms)[it.col()] = std::max((*norms)[it.col()], std::abs(it.value()));
    }
  }
}

void row_inf_norms(const Eigen::SparseMatrix<double>& mat,
                   Eigen::VectorXd* norms) {
  for (int k = 0; k < mat.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(mat, k); it; ++it) {
      (*norms)[it.row()] = std::max((*norms)[it.row()], std::abs(it.value()));
    }
  }
}

double clamp_scale(double v) { return std::clamp(v, 1e-4, 1e4); }

ScaledProblem ruiz_equilibrate(const QpProblem& problem) {
  const int n = problem.variable_count();
  ScaledProblem out;
  out.eq_rows = static_cast<int>(problem.eq_matrix.rows());
  out.ineq_rows = static_cast<int>(problem.ineq_matrix.rows());
  const int rows = out.total_rows();

  out.p = problem.hessian;
  out.q = problem.gradient;
  out.m = stack_rows(problem);
  out.d = Eigen::VectorXd::Ones(n);
  out.e = Eigen::VectorXd::Ones(rows);
  out.cost_scale = 1.0;

  for (int sweep = 0; sweep < 10; ++sweep) {
    Eigen::VectorXd col_norm = Eigen::VectorXd::Zero(n);
    column_inf_norms(out.p, &col_norm);
    column_inf_norms(out.m, &col_norm);
    Eigen::VectorXd row_norm = Eigen::VectorXd::Zero(rows);
    row_inf_norms(out.m, &row_norm);

    Eigen::VectorXd delta_d(n);
    for (int i = 0; i < n; ++i) {
      delta_d[i] = col_norm[i] > 0.0
                       ? clamp_scale(1.0 / std::sqrt(col_norm[i]))
                       : 1.0;
    }
    Eigen::VectorXd delta_e(rows);
    for (int i = 0; i < rows; ++i) {
      delta_e[i] = row_norm[i] > 0.0
                       ? clamp_scale(1.0 / std::sqrt(row_norm[i]))
                       : 1.0;
    }

    out.p = delta_d.asDiagonal() * out.p * delta_d.asDiagonal();
    out.q = delta_d.cwiseProduct(out.q);
    out.m = delta_e.asDiagonal() * out.m * delta_d.asDiagonal();
    out.d = out.d.cwiseProduct(delta_d);
    out.e = out.e.cwiseProduct(delta_e);

    // Cost normalization toward unit-size objective data.
    Eigen::VectorXd p_col = Eigen::VectorXd::Zero(n);
    column_inf_norms(out.p, &p_col);
    const double mean_p = n > 0 ? p_col.sum() / n : 0.0;
    const double gamma =
        1.0 / std::max(1e-8, std::max(mean_p, inf_norm(out.q)));
    const double gamma_clamped = clamp_scale(gamma);
    out.p *= gamma_clamped;
    out.q *= gamma_clamped;
    out.cost_scale *= gamma_clamped;
  }
  out.p.makeCompressed();
  out.m.makeCompressed();

  out.lower.resize(rows);
  out.upper.resize(rows);
  for (int i = 0; i < out.eq_rows; ++i) {
    const double b = problem.eq_rhs[i] * out.e[i];
    out.lower[i] = b;
    out.upper[i] = b;
  }
  for (int i = 0; i < out.ineq_rows; ++i) {
    const int r = out.eq_rows + i;
    out.lower[r] = -kInf;
    out.upper[r] = problem.ineq_rhs[i] * out.e[r];
  }
  return out;
}

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double primal_scale = 0.0;  // max(|Mx|, |z|) in original units
  double dual_scale = 0.0;    // max(|Px|, |q|, |M'y|)
  bool converged(double eps_prim, double eps_dual) const {
    return primal <= eps_prim * (1.0 + primal_scale) &&
           dual <= eps_dual * (1.0 + dual_scale);
  }
};

// Unscaled residuals of the scaled iterate.
Residuals compute_residuals(const QpProblem& problem, const ScaledProblem& sc,
                            const Eigen::VectorXd& x_hat,
                            const Eigen::VectorXd& z_hat,
                            const Eigen::VectorXd& y_hat) {
  Residuals out;
  const Eigen::VectorXd x = sc.d.cwiseProduct(x_hat);
  const Eigen::VectorXd y =
      sc.e.cwiseProduct(y_hat) / sc.cost_scale;
  const Eigen::VectorXd mx = sc.m * x_hat;  // = E M x
  for (int i = 0; i < mx.size(); ++i) {
    const double mx_orig = mx[i] / sc.e[i];
    const double z_orig = z_hat[i] / sc.e[i];
    out.primal = std::max(out.primal, std::abs(mx_orig - z_orig));
    out.primal_scale =
        std::max(out.primal_scale, std::max(std::abs(mx_orig),
                                            std::abs(z_orig)));
  }
  const Eigen::VectorXd px = problem.hessian * x;
  Eigen::VectorXd mty = Eigen::VectorXd::Zero(x.size());
  if (problem.eq_matrix.rows() > 0) {
    mty += problem.eq_matrix.transpose() * y.head(sc.eq_rows);
  }
  if (problem.ineq_matrix.rows() > 0) {
    mty += problem.ineq_matrix.transpose() * y.tail(sc.ineq_rows);
  }
  out.dual = inf_norm(px + problem.gradient + mty);
  out.dual_scale = std::max(
      {inf_norm(px), inf_norm(problem.gradient), inf_norm(mty)});
  return out;
}

bool primal_infeasibility(const QpProblem& problem, const ScaledProblem& sc,
                          const Eigen::VectorXd& dy_hat, double eps) {
  const Eigen::VectorXd dy = sc.e.cwiseProduct(dy_hat) / sc.cost_scale;
  const double dy_norm = inf_norm(dy);
  if (dy_norm < 1e-13) return false;
  Eigen::VectorXd mt_dy = Eigen::VectorXd::Zero(problem.variable_count());
  if (problem.eq_matrix.rows() > 0) {
    mt_dy += problem.eq_matrix.transpose() * dy.head(sc.eq_rows);
  }
  if (problem.ineq_matrix.rows() > 0) {
    mt_dy += problem.ineq_matrix.transpose() * dy.tail(sc.ineq_rows);
  }
  if (inf_norm(mt_dy) > eps * dy_norm) return false;
  double support = 0.0;
  for (int i = 0; i < sc.eq_rows; ++i) {
    support += problem.eq_rhs[i] * dy[i];
  }
  for (int i = 0; i < sc.ineq_rows; ++i) {
    const double v = dy[sc.eq_rows + i];
    if (v < -eps * dy_norm) return false;  // unbounded-below row
    if (v > 0.0) support += problem.ineq_rhs[i] * v;
  }
  return support < -eps * dy_norm;
}

bool dual_infeasibility(const QpProblem& problem, const ScaledProblem& sc,
                        const Eigen::VectorXd& dx_hat, double eps) {
  const Eigen::VectorXd dx = sc.d.cwiseProduct(dx_hat);
  const double dx_norm = inf_norm(dx);
  if (dx_norm < 1e-13) return false;
  if (inf_norm(problem.hessian * dx) > eps * dx_norm) return false;
  if (problem.gradient.dot(dx) > -eps * dx_norm) return false;
  if (problem.eq_matrix.rows() > 0) {
    if (inf_norm(problem.eq_matrix * dx) > eps * dx_norm) return false;
  }
  if (problem.ineq_matrix.rows() > 0) {
    const Eigen::VectorXd gdx = problem.ineq_matrix * dx;
    for (int i = 0; i < gdx.size(); ++i) {
      if (gdx[i] > eps * dx_norm) return false;
    }
  }
  return true;
}

struct KktFactors {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool ok = false;
};

void factor_kkt(const ScaledProblem& sc, double sigma,
                const Eigen::VectorXd& rho, KktFactors* out) {
  const int n = static_cast<int>(sc.p.rows());
  const int rows = sc.total_rows();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(sc.p.nonZeros() + 2 * sc.m.nonZeros() + n + rows);
  for (int k = 0; k < sc.p.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sc.p, k); it; ++it) {
      trip.emplace_back(static_cast<int>(it.row()),
                        static_cast<int>(it.col()), it.value());
    }
  }
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, sigma);
  for (int k = 0; k < sc.m.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sc.m, k); it; ++it) {
      trip.emplace_back(n + static_cast<int>(it.row()),
                        static_cast<int>(it.col()), it.value());
      trip.emplace_back(static_cast<int>(it.col()),
                        n + static_cast<int>(it.row()), it.value());
    }
  }
  for (int i = 0; i < rows; ++i) {
    trip.emplace_back(n + i, n + i, -1.0 / rho[i]);
  }
  Eigen::SparseMatrix<double> kkt(n + rows, n + rows);
  kkt.setFromTriplets(trip.begin(), trip.end());
  kkt.makeCompressed();
  out->lu.compute(kkt);
  out->ok = out->lu.info() == Eigen::Success;
}

struct PolishResult {
  bool ok = false;
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // stacked duals, original units
};

// Active-set KKT refinement on the original data with quasi-definite
// regularization and iterative refinement.
PolishResult polish(const QpProblem& p, const std::vector<int>& active,
                    double reg) {
  PolishResult out;
  const int n = p.variable_count();
  const int me = static_cast<int>(p.eq_matrix.rows());
  const int na = static_cast<int>(active.size());
  const int dim = n + me + na;

  std::vector<Eigen::Triplet<double>> base;
  std::vector<Eigen::Triplet<double>> regd;
  auto push = [&](int r, int c, double v) {
    base.emplace_back(r, c, v);
    regd.emplace_back(r, c, v);
  };
  for (int k = 0; k < p.hessian.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.hessian, k); it;
         ++it) {
      push(static_cast<int>(it.row()), static_cast<int>(it.col()),
           it.value());
    }
  }
  for (int k = 0; k < p.eq_matrix.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.eq_matrix, k); it;
         ++it) {
      push(n + static_cast<int>(it.row()), static_cast<int>(it.col()),
           it.value());
      push(static_cast<int>(it.col()), n + static_cast<int>(it.row()),
           it.value());
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> g_rm = p.ineq_matrix;
  for (int a = 0; a < na; ++a) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
             g_rm, active[a]);
         it; ++it) {
      push(n + me + a, static_cast<int>(it.col()), it.value());
      push(static_cast<int>(it.col()), n + me + a, it.value());
    }
  }
  for (int i = 0; i < n; ++i) regd.emplace_back(i, i, reg);
  for (int i = 0; i < me + na; ++i) regd.emplace_back(n + i, n + i, -reg);

  Eigen::SparseMatrix<double> kkt(dim, dim);
  kkt.setFromTriplets(base.begin(), base.end());
  kkt.makeCompressed();
  Eigen::SparseMatrix<double> kkt_reg(dim, dim);
  kkt_reg.setFromTriplets(regd.begin(), regd.end());
  kkt_reg.makeCompressed();

  Eigen::VectorXd rhs(dim);
  rhs.head(n) = -p.gradient;
  rhs.segment(n, me) = p.eq_rhs;
  for (int a = 0; a < na; ++a) {
    rhs[n + me + a] = p.ineq_rhs[active[a]];
  }

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(kkt_reg);
  if (lu.info() != Eigen::Success) return out;
  Eigen::VectorXd sol = lu.solve(rhs);
  for (int refine = 0; refine < 3; ++refine) {
    sol += lu.solve(rhs - kkt * sol);
  }
  if (!sol.allFinite()) return out;

  out.x = sol.head(n);
  out.y = Eigen::VectorXd::Zero(me + p.ineq_matrix.rows());
  out.y.head(me) = sol.segment(n, me);
  for (int a = 0; a < na; ++a) {
    out.y[me + active[a]] = sol[n + me + a];
  }
  out.ok = true;
  return out;
}

KktResiduals residuals_of(const QpProblem& p, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y) {
  QpSolution tmp;
  tmp.primal = x;
  tmp.eq_duals = y.head(p.eq_matrix.rows());
  tmp.ineq_duals = y.tail(p.ineq_matrix.rows());
  return kkt_residuals(p, tmp);
}

Eigen::VectorXd make_rho(const ScaledProblem& sc, double rho,
                         double eq_scale) {
  Eigen::VectorXd out(sc.total_rows());
  for (int i = 0; i < sc.eq_rows; ++i) out[i] = rho * eq_scale;
  for (int i = sc.eq_rows; i < sc.total_rows(); ++i) out[i] = rho;
  return out;
}

}  // namespace

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings,
                    const QpSolution* warm_start) {
  const auto t0 = std::chrono::steady_clock::now();

  const int n = problem.variable_count();
  if (problem.hessian.rows() != n || problem.hessian.cols() != n) {
    throw std::invalid_argument("Hessian dimension mismatch");
  }
  if (problem.eq_matrix.rows() != problem.eq_rhs.size() ||
      problem.ineq_matrix.rows() != problem.ineq_rhs.size()) {
    throw std::invalid_argument("constraint dimension mismatch");
  }

  const ScaledProblem sc = ruiz_equilibrate(problem);
  const int rows = sc.total_rows();

  const Eigen::VectorXd rho =
      make_rho(sc, settings.rho, settings.rho_eq_scale);
  KktFactors kkt;
  factor_kkt(sc, settings.sigma, rho, &kkt);
  if (!kkt.ok) {
    throw std::runtime_error("ADMM KKT factorization failed");
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows);
  if (warm_start != nullptr && warm_start->primal.size() == n &&
      warm_start->eq_duals.size() == sc.eq_rows &&
      warm_start->ineq_duals.size() == sc.ineq_rows) {
    x = warm_start->primal.cwiseQuotient(sc.d);
    for (int i = 0; i < sc.eq_rows; ++i) {
      y[i] = warm_start->eq_duals[i] * sc.cost_scale / sc.e[i];
    }
    for (int i = 0; i < sc.ineq_rows; ++i) {
      const int r = sc.eq_rows + i;
      y[r] = warm_start->ineq_duals[i] * sc.cost_scale / sc.e[r];
    }
  }
  Eigen::VectorXd z = (sc.m * x).cwiseMax(sc.lower).cwiseMin(sc.upper);

  QpSolution result;
  result.status = QpStatus::kMaxIterations;
  int iterations = 0;
  const double eps_inf = 1e-8;
  constexpr int kCheckEvery = 10;
  const double eps = std::max(settings.eps_primal, settings.eps_dual);
  // Per-component acceptance for polished candidates; the inequality rows
  // may carry much larger physical units than the gradient.
  const auto kkt_acceptable = [&](const KktResiduals& r,
                                  double dual_norm) {
    return r.stationarity <= eps * (1.0 + inf_norm(problem.gradient)) &&
           r.equality <= eps * (1.0 + inf_norm(problem.eq_rhs)) &&
           r.inequality <= eps * (1.0 + inf_norm(problem.ineq_rhs)) &&
           r.complementarity <=
               eps * (1.0 + inf_norm(problem.ineq_rhs)) *
                   std::max(1.0, dual_norm);
  };
  int next_polish_attempt = 20;
  bool early_polished = false;

  // Polishing solves the active-set KKT system exactly, so a moderately
  // accurate iterate that identifies the right active set already yields
  // the high-accuracy solution; try it as soon as the loose tolerance is
  // met and fall back to plain iteration when it misidentifies. Rows are
  // nominated by dual magnitude or small slack; nominated rows whose
  // polished multiplier comes out negative are dropped and the reduced
  // system re-solved.
  auto try_early_polish = [&](int k) {
    const Eigen::VectorXd y_orig = sc.e.cwiseProduct(y) / sc.cost_scale;
    const double y_scale =
        std::max(1.0, inf_norm(y_orig.tail(sc.ineq_rows)));
    const Eigen::VectorXd mx = sc.m * x;
    std::vector<int> active;
    for (int i = 0; i < sc.ineq_rows; ++i) {
      const int r = sc.eq_rows + i;
      const double slack = (sc.upper[r] - mx[r]) / sc.e[r];
      if (y_orig[r] > 1e-7 * y_scale ||
          slack < 1e-4 * (1.0 + std::abs(problem.ineq_rhs[i]))) {
        active.push_back(i);
      }
    }
    // Mini active-set refinement seeded by the ADMM iterate: rows the
    // candidate violates join the set, rows with negative multipliers
    // leave it.
    PolishResult pol;
    bool settled = false;
    for (int pass = 0; pass < 10 && !settled; ++pass) {
      pol = polish(problem, active, settings.polish_reg);
      if (!pol.ok) return false;
      settled = true;
      std::vector<int> next;
      std::vector<bool> in_set(sc.ineq_rows, false);
      for (int idx : active) {
        if (pol.y[sc.eq_rows + idx] >= -1e-8 * y_scale) {
          next.push_back(idx);
          in_set[idx] = true;
        } else {
          settled = false;
        }
      }
      if (sc.ineq_rows > 0) {
        const Eigen::VectorXd violation =
            problem.ineq_matrix * pol.x - problem.ineq_rhs;
        for (int i = 0; i < sc.ineq_rows; ++i) {
          if (!in_set[i] &&
              violation[i] > 1e-9 * (1.0 + std::abs(problem.ineq_rhs[i]))) {
            next.push_back(i);
            settled = false;
          }
        }
      }
      active.swap(next);
    }
    if (!settled) return false;
    const KktResiduals pol_res = residuals_of(problem, pol.x, pol.y);
    if (!kkt_acceptable(pol_res, inf_norm(pol.y.tail(sc.ineq_rows)))) {
      return false;
    }
    result.primal = pol.x;
    result.eq_duals = pol.y.head(sc.eq_rows);
    result.ineq_duals = pol.y.tail(sc.ineq_rows).cwiseMax(0.0);
    result.status = QpStatus::kSolved;
    result.polished = true;
    iterations = k;
    early_polished = true;
    return true;
  };

  Eigen::VectorXd rhs(n + rows);
  Residuals res;
  for (int k = 0; k <= settings.max_iterations; ++k) {
    const bool check_now = k % kCheckEvery == 0 || k == settings.max_iterations;
    if (check_now) {
      res = compute_residuals(problem, sc, x, z, y);
      if (res.converged(settings.eps_primal, settings.eps_dual)) {
        result.status = QpStatus::kSolved;
        iterations = k;
        break;
      }
      if (settings.polish && k >= next_polish_attempt) {
        if (try_early_polish(k)) {
          break;
        }
        next_polish_attempt = k + 100;
      }
    }
    if (k == settings.max_iterations) {
      iterations = k;
      break;
    }

    rhs.head(n) = settings.sigma * x - sc.q;
    rhs.tail(rows) = z - y.cwiseQuotient(rho);
    const Eigen::VectorXd sol = kkt.lu.solve(rhs);
    const Eigen::VectorXd x_tilde = sol.head(n);
    const Eigen::VectorXd nu = sol.tail(rows);
    const Eigen::VectorXd z_tilde = z + (nu - y).cwiseQuotient(rho);

    const double a = settings.relaxation;
    const Eigen::VectorXd x_next = a * x_tilde + (1.0 - a) * x;
    const Eigen::VectorXd z_relaxed = a * z_tilde + (1.0 - a) * z;
    const Eigen::VectorXd z_next = (z_relaxed + y.cwiseQuotient(rho))
                                       .cwiseMax(sc.lower)
                                       .cwiseMin(sc.upper);
    const Eigen::VectorXd y_next = y + rho.cwiseProduct(z_relaxed - z_next);

    if ((k + 1) % 25 == 0) {
      if (primal_infeasibility(problem, sc, y_next - y, eps_inf)) {
        result.status = QpStatus::kPrimalInfeasible;
        iterations = k + 1;
        x = x_next;
        z = z_next;
        y = y_next;
        break;
      }
      if (dual_infeasibility(problem, sc, x_next - x, eps_inf)) {
        result.status = QpStatus::kDualInfeasible;
        iterations = k + 1;
        x = x_next;
        z = z_next;
        y = y_next;
        break;
      }
    }
    x = x_next;
    z = z_next;
    y = y_next;
  }

  result.iterations = iterations;
  if (!early_polished) {
    result.primal = sc.d.cwiseProduct(x);
    const Eigen::VectorXd y_orig = sc.e.cwiseProduct(y) / sc.cost_scale;
    result.eq_duals = y_orig.head(sc.eq_rows);
    result.ineq_duals = y_orig.tail(sc.ineq_rows).cwiseMax(0.0);
  }

  if (settings.polish && !early_polished &&
      result.status != QpStatus::kPrimalInfeasible &&
      result.status != QpStatus::kDualInfeasible) {
    // Full acceptance path first; otherwise keep a polished iterate when
    // it at least improves the KKT residuals.
    if (!try_early_polish(iterations)) {
      const double y_scale = std::max(1.0, inf_norm(result.ineq_duals));
      std::vector<int> active;
      for (int i = 0; i < sc.ineq_rows; ++i) {
        if (result.ineq_duals[i] > 1e-9 * y_scale) {
          active.push_back(i);
        }
      }
      const PolishResult pol = polish(problem, active, settings.polish_reg);
      bool duals_ok = pol.ok;
      for (int idx : active) {
        if (!duals_ok) break;
        duals_ok = pol.y[sc.eq_rows + idx] >= -1e-8 * y_scale;
      }
      if (duals_ok) {
        Eigen::VectorXd y_before(rows);
        y_before.head(sc.eq_rows) = result.eq_duals;
        y_before.tail(sc.ineq_rows) = result.ineq_duals;
        const KktResiduals before =
            residuals_of(problem, result.primal, y_before);
        const KktResiduals after = residuals_of(problem, pol.x, pol.y);
        if (after.max() <= before.max()) {
          result.primal = pol.x;
          result.eq_duals = pol.y.head(sc.eq_rows);
          result.ineq_duals = pol.y.tail(sc.ineq_rows).cwiseMax(0.0);
          result.polished = true;
        }
      }
    }
  }

  result.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

}  // namespace rtnmpc
