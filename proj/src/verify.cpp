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

#include "rtnmpc/verify.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "rtnmpc/sim.hpp"
#include "rtnmpc/vehicle.hpp"

namespace rtnmpc {

namespace {

struct SuiteLog {
  bool passed = true;
  std::ostringstream text;

  void check(bool ok, const std::string& label, const std::string& detail) {
    text << (ok ? "  ok      " : "  FAILED  ") << label;
    if (!ok && !detail.empty()) {
      text << "\n            " << detail;
    }
    text << "\n";
    passed = passed && ok;
  }
};

Eigen::VectorXd random_bicycle_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  PredictionState s;
  s.px = 10.0 * uni(rng);
  s.py = 10.0 * uni(rng);
  s.yaw = 3.0 * uni(rng);
  s.vx = 8.0 + 6.0 * uni(rng);  // stays above the standstill guard
  s.vy = 1.5 * uni(rng);
  s.yaw_rate = 0.8 * uni(rng);
  const double roll = s.vx / 0.6;
  s.wheel_f = roll * (1.0 + 0.05 * uni(rng));
  s.wheel_r = roll * (1.0 + 0.05 * uni(rng));
  s.steer = 0.4 * uni(rng);
  return s.vector();
}

Eigen::VectorXd random_control(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  return Eigen::Vector2d(300.0 * uni(rng), 1.5 * uni(rng));
}

void jacobian_suite(const VerifyOptions& opt, SuiteLog* log) {
  const VehicleParams params;
  const BicycleModel model(params);
  std::mt19937_64 rng(opt.seed);

  double worst = 0.0;
  int worst_row = -1;
  int worst_col = -1;
  bool worst_in_b = false;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd x = random_bicycle_state(rng);
    const Eigen::VectorXd u = random_control(rng);
    Eigen::MatrixXd a_an;
    Eigen::MatrixXd b_an;
    model.analytic_jacobians(x, u, a_an, b_an);
    if (opt.inject_jacobian_bug) {
      a_an(3, 4) += 1e-3;
    }
    Eigen::MatrixXd a_fd;
    Eigen::MatrixXd b_fd;
    finite_difference_jacobians(model, x, u, &a_fd, &b_fd);
    for (int i = 0; i < a_an.rows(); ++i) {
      for (int j = 0; j < a_an.cols(); ++j) {
        const double err = std::abs(a_an(i, j) - a_fd(i, j)) /
                           std::max(1.0, std::abs(a_fd(i, j)));
        if (err > worst) {
          worst = err;
          worst_row = i;
          worst_col = j;
          worst_in_b = false;
        }
      }
    }
    for (int i = 0; i < b_an.rows(); ++i) {
      for (int j = 0; j < b_an.cols(); ++j) {
        const double err = std::abs(b_an(i, j) - b_fd(i, j)) /
                           std::max(1.0, std::abs(b_fd(i, j)));
        if (err > worst) {
          worst = err;
          worst_row = i;
          worst_col = j;
          worst_in_b = true;
        }
      }
    }
  }
  std::ostringstream detail;
  detail << "worst relative error " << worst << " at "
         << (worst_in_b ? "dfdu" : "dfdx") << "(" << worst_row << ", "
         << worst_col << ")";
  log->check(worst <= 1e-5,
             "bicycle analytic Jacobians vs central differences (100 states)",
             detail.str());
}

// Scalar exponential-decay model for the stiffness checks.
class ScalarDecay : public ContinuousModel {
 public:
  explicit ScalarDecay(double rate) : rate_(rate) {}
  int state_dim() const override { return 1; }
  int input_dim() const override { return 1; }
  Eigen::VectorXd derivative(const Eigen::VectorXd& x,
                             const Eigen::VectorXd&) const override {
    return rate_ * x;
  }

 private:
  double rate_;
};

void euler_suite(const VerifyOptions& opt, SuiteLog* log) {
  // Stiff scalar contract: xdot = -100 x, dt = 0.04 -> exactly 1/5.
  const ScalarDecay stiff(-100.0);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd x1 = implicit_euler_step(stiff, x0, u0, 0.04);
  log->check(std::abs(x1[0] - 0.2) <= 1e-12,
             "implicit Euler on xdot = -100x returns 0.2",
             "got " + std::to_string(x1[0]));

  // The explicit step amplifies by |1 - 4| = 3 per step.
  double explicit_x = 1.0;
  for (int k = 0; k < 20; ++k) {
    explicit_x += 0.04 * (-100.0 * explicit_x);
  }
  log->check(std::abs(explicit_x) > 1e6,
             "explicit Euler diverges on the same stiff model", "");

  // Residual contract on the bicycle model at random points.
  const VehicleParams params;
  const BicycleModel model(params);
  std::mt19937_64 rng(opt.seed + 1);
  double worst_residual = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::VectorXd x = random_bicycle_state(rng);
    const Eigen::VectorXd u = random_control(rng);
    const Eigen::VectorXd next = implicit_euler_step(model, x, u, 0.04);
    const Eigen::VectorXd residual =
        next - x - 0.04 * model.derivative(next, u);
    worst_residual =
        std::max(worst_residual, residual.lpNorm<Eigen::Infinity>());
  }
  log->check(worst_residual <= 1e-10,
             "bicycle implicit steps meet the 1e-10 residual",
             "worst residual " + std::to_string(worst_residual));
}

void qp_suite(const VerifyOptions& opt, SuiteLog* log) {
  std::mt19937_64 rng(opt.seed + 2);
  std::uniform_int_distribution<int> dim_dist(2, 6);
  std::uniform_int_distribution<int> ineq_dist(1, 8);

  double worst_gap = 0.0;
  double worst_kkt = 0.0;
  int failures = 0;
  std::string failure_detail;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim_dist(rng);
    const int ni = ineq_dist(rng);
    const QpProblem qp = random_boxy_qp(rng, n, ni);

    Eigen::VectorXd ref_primal;
    Eigen::VectorXd ref_eq;
    Eigen::VectorXd ref_ineq;
    if (!enumerate_qp_solution(qp, &ref_primal, &ref_eq, &ref_ineq)) {
      ++failures;
      failure_detail = "enumeration found no KKT point at trial " +
                       std::to_string(trial);
      continue;
    }
    const QpSolution sol = solve_qp(qp);
    if (sol.status != QpStatus::kSolved) {
      ++failures;
      failure_detail = "solver status " +
                       std::string(to_string(sol.status)) + " at trial " +
                       std::to_string(trial);
      continue;
    }
    const double gap =
        (sol.primal - ref_primal).lpNorm<Eigen::Infinity>();
    worst_gap = std::max(worst_gap, gap);
    worst_kkt = std::max(worst_kkt, kkt_residuals(qp, sol).max());
    if (gap > 1e-6) {
      ++failures;
      std::ostringstream detail;
      detail << "primal gap " << gap << " at trial " << trial << " (n=" << n
             << ", ineq=" << ni << ")";
      failure_detail = detail.str();
    }
  }
  std::ostringstream detail;
  detail << failure_detail << "; worst primal gap " << worst_gap
         << ", worst KKT residual " << worst_kkt;
  log->check(failures == 0 && worst_kkt <= 1e-6,
             "solve_qp matches active-set enumeration on 200 random QPs",
             detail.str());
}

void dynamics_suite(const VerifyOptions& opt, SuiteLog* log) {
  (void)opt;
  ScenarioConfig cfg;
  cfg.duration = 2.0;
  cfg.plant_substeps = 2000;
  const SimLog sqp_log = run_closed_loop(cfg, ControllerMode::kSqpConverged);
  log->check(!sqp_log.summary.aborted, "converged-SQP nominal segment runs",
             sqp_log.summary.abort_reason);

  // The defect of the converged guess is recomputed through the controller
  // path; here it suffices that every step solved and stayed feasible.
  bool all_solved = true;
  double worst_residual = 0.0;
  for (const SimRecord& rec : sqp_log.records) {
    all_solved = all_solved && rec.qp_status == QpStatus::kSolved;
    worst_residual = std::max(worst_residual, rec.constraint_residual);
  }
  log->check(all_solved, "every SQP step reports a solved QP", "");
  log->check(worst_residual <= 1e-5,
             "predicted constraint rows feasible at every step",
             "worst residual " + std::to_string(worst_residual));

  const BicycleModel model(cfg.vehicle);
  const VehicleStageConstraints constraints(cfg.vehicle, cfg.limits);
  ControllerConfig ccfg;
  ccfg.horizon = cfg.horizon;
  ccfg.sample_period = cfg.sample_period;
  ccfg.weights = cfg.weights;
  RtiController controller(model, &constraints, ccfg,
                           ControllerMode::kSqpConverged);
  PredictionState start;
  start.vx = 8.0;
  start.wheel_f = 8.0 / cfg.vehicle.wheel_radius;
  start.wheel_r = start.wheel_f;
  start.py = 1.0;
  controller.initialize(start.vector(), Eigen::Vector2d::Zero());
  std::vector<Eigen::VectorXd> window;
  double anchor = start.yaw;
  for (int i = 0; i <= cfg.horizon; ++i) {
    const ReferencePoint r =
        reference_point(cfg.trajectory, i * cfg.sample_period);
    const double heading =
        anchor + std::remainder(r.heading - anchor, 2.0 * M_PI);
    anchor = heading;
    window.push_back(Eigen::Vector4d(r.px, r.py, heading, r.vx));
  }
  const ControlDecision decision = controller.step(start.vector(), window);
  log->check(decision.sqp_converged && decision.dynamics_defect <= 1e-8,
             "converged SQP satisfies the stage dynamics to 1e-8",
             "defect " + std::to_string(decision.dynamics_defect));
}

}  // namespace

QpProblem random_boxy_qp(std::mt19937_64& rng, int n, int n_ineq) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      l(i, j) = gauss(rng);
    }
  }
  Eigen::MatrixXd p = l * l.transpose() +
                      0.5 * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) q[i] = gauss(rng);

  Eigen::MatrixXd g(n_ineq, n);
  for (int i = 0; i < n_ineq; ++i) {
    for (int j = 0; j < n; ++j) {
      g(i, j) = gauss(rng);
    }
  }
  // Keep a random point feasible so the problem is never empty.
  Eigen::VectorXd interior(n);
  for (int i = 0; i < n; ++i) interior[i] = 0.3 * gauss(rng);
  Eigen::VectorXd h = g * interior;
  std::uniform_real_distribution<double> slack(0.05, 1.0);
  for (int i = 0; i < n_ineq; ++i) h[i] += slack(rng);

  QpProblem qp;
  qp.hessian = p.sparseView();
  qp.gradient = q;
  qp.eq_matrix.resize(0, n);
  qp.eq_rhs.resize(0);
  qp.ineq_matrix = g.sparseView();
  qp.ineq_rhs = h;
  qp.state_dim = n;
  return qp;
}

bool enumerate_qp_solution(const QpProblem& problem, Eigen::VectorXd* primal,
                           Eigen::VectorXd* eq_duals,
                           Eigen::VectorXd* ineq_duals) {
  const int n = problem.variable_count();
  const int me = static_cast<int>(problem.eq_matrix.rows());
  const int mi = static_cast<int>(problem.ineq_matrix.rows());
  if (mi > 20) {
    throw std::invalid_argument("enumeration oracle limited to 20 rows");
  }
  const Eigen::MatrixXd p = Eigen::MatrixXd(problem.hessian);
  const Eigen::MatrixXd a = Eigen::MatrixXd(problem.eq_matrix);
  const Eigen::MatrixXd g = Eigen::MatrixXd(problem.ineq_matrix);

  bool found = false;
  double best_objective = 0.0;
  for (uint32_t mask = 0; mask < (1u << mi); ++mask) {
    std::vector<int> active;
    for (int i = 0; i < mi; ++i) {
      if (mask & (1u << i)) active.push_back(i);
    }
    const int na = static_cast<int>(active.size());
    const int dim = n + me + na;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs(dim);
    kkt.topLeftCorner(n, n) = p;
    rhs.head(n) = -problem.gradient;
    if (me > 0) {
      kkt.block(n, 0, me, n) = a;
      kkt.block(0, n, n, me) = a.transpose();
      rhs.segment(n, me) = problem.eq_rhs;
    }
    for (int k = 0; k < na; ++k) {
      kkt.block(n + me + k, 0, 1, n) = g.row(active[k]);
      kkt.block(0, n + me + k, n, 1) = g.row(active[k]).transpose();
      rhs[n + me + k] = problem.ineq_rhs[active[k]];
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd z = sol.head(n);

    bool valid = true;
    for (int k = 0; k < na && valid; ++k) {
      valid = sol[n + me + k] >= -1e-9;
    }
    if (valid && mi > 0) {
      const Eigen::VectorXd slack = problem.ineq_rhs - g * z;
      for (int i = 0; i < mi && valid; ++i) {
        valid = slack[i] >= -1e-9;
      }
    }
    if (!valid) continue;

    const double objective = 0.5 * z.dot(p * z) + problem.gradient.dot(z);
    if (!found || objective < best_objective - 1e-12) {
      found = true;
      best_objective = objective;
      *primal = z;
      if (eq_duals != nullptr) *eq_duals = sol.segment(n, me);
      if (ineq_duals != nullptr) {
        *ineq_duals = Eigen::VectorXd::Zero(mi);
        for (int k = 0; k < na; ++k) {
          (*ineq_duals)[active[k]] = std::max(0.0, sol[n + me + k]);
        }
      }
    }
  }
  return found;
}

VerifyReport run_verification(const VerifyOptions& options) {
  SuiteLog log;
  const bool all = options.suite == "all";
  bool ran_any = false;

  if (all || options.suite == "jacobian") {
    log.text << "suite jacobian\n";
    jacobian_suite(options, &log);
    ran_any = true;
  }
  if (all || options.suite == "euler") {
    log.text << "suite euler\n";
    euler_suite(options, &log);
    ran_any = true;
  }
  if (all || options.suite == "qp") {
    log.text << "suite qp\n";
    qp_suite(options, &log);
    ran_any = true;
  }
  if (all || options.suite == "dynamics") {
    log.text << "suite dynamics\n";
    dynamics_suite(options, &log);
    ran_any = true;
  }
  if (!ran_any) {
    log.passed = false;
    log.text << "unknown suite '" << options.suite
             << "' (expected all, jacobian, euler, qp or dynamics)\n";
  }

  VerifyReport report;
  report.passed = log.passed;
  log.text << (log.passed ? "verification passed" : "verification FAILED")
           << "\n";
  report.text = log.text.str();
  return report;
}

}  // namespace rtnmpc
