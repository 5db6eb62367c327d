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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "rtnmpc/qp.hpp"
#include "rtnmpc/verify.hpp"

using namespace rtnmpc;

namespace {

QpProblem tiny_qp(double hessian, double gradient) {
  QpProblem qp;
  Eigen::MatrixXd h(1, 1);
  h << hessian;
  qp.hessian = h.sparseView();
  qp.gradient = Eigen::VectorXd::Constant(1, gradient);
  qp.eq_matrix.resize(0, 1);
  qp.eq_rhs.resize(0);
  qp.ineq_matrix.resize(0, 1);
  qp.ineq_rhs.resize(0);
  return qp;
}

struct ToyWeights {
  CostWeights weights;
  int n;
  int m;
};

ToyWeights scalar_weights(double q, double rq, double rr, double ru) {
  ToyWeights out;
  out.n = 1;
  out.m = 1;
  out.weights.output_matrix = Eigen::MatrixXd::Identity(1, 1);
  out.weights.output_weights = Eigen::VectorXd::Constant(1, q);
  out.weights.output_ranges = Eigen::VectorXd::Constant(1, rq);
  out.weights.increment_weights = Eigen::VectorXd::Constant(1, rr);
  out.weights.increment_ranges = Eigen::VectorXd::Constant(1, ru);
  return out;
}

// Dense, loop-free transcription of the stacked QP: big selection and
// difference operators assembled wholesale, then multiplied out. Fully
// independent of the triplet-based builder.
struct DenseTranscription {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::MatrixXd gg;
  Eigen::VectorXd hh;
};

DenseTranscription dense_transcription(
    const std::vector<Eigen::VectorXd>& xg,
    const std::vector<Eigen::VectorXd>& ug,
    const std::vector<Eigen::VectorXd>& refs, const Eigen::VectorXd& xm,
    const Eigen::VectorXd& ul, const CostWeights& w,
    const std::vector<StageJacobians>& lins,
    const std::vector<ConstraintLinearization>& cons) {
  const int horizon = static_cast<int>(ug.size());
  const int n = static_cast<int>(xm.size());
  const int m = static_cast<int>(ul.size());
  const int nout = static_cast<int>(w.output_matrix.rows());
  const int nx = n * (horizon + 1);
  const int nu = m * horizon;

  Eigen::MatrixXd c_big = Eigen::MatrixXd::Zero(nout * (horizon + 1), nx);
  Eigen::MatrixXd q_big =
      Eigen::MatrixXd::Zero(nout * (horizon + 1), nout * (horizon + 1));
  Eigen::VectorXd err_big(nout * (horizon + 1));
  for (int i = 0; i <= horizon; ++i) {
    c_big.block(nout * i, n * i, nout, n) = w.output_matrix;
    q_big.block(nout * i, nout * i, nout, nout) = w.normalized_output_cost();
    err_big.segment(nout * i, nout) = refs[i] - w.output_matrix * xg[i];
  }
  Eigen::MatrixXd s_big = Eigen::MatrixXd::Zero(nu, nu);
  Eigen::MatrixXd r_big = Eigen::MatrixXd::Zero(nu, nu);
  Eigen::VectorXd dug(nu);
  for (int i = 0; i < horizon; ++i) {
    s_big.block(m * i, m * i, m, m).setIdentity();
    if (i > 0) {
      s_big.block(m * i, m * (i - 1), m, m) =
          -Eigen::MatrixXd::Identity(m, m);
    }
    r_big.block(m * i, m * i, m, m) = w.normalized_increment_cost();
    dug.segment(m * i, m) = ug[i] - (i > 0 ? ug[i - 1] : ul);
  }

  DenseTranscription out;
  out.h = Eigen::MatrixXd::Zero(nx + nu, nx + nu);
  out.h.topLeftCorner(nx, nx) = 2.0 * c_big.transpose() * q_big * c_big;
  out.h.bottomRightCorner(nu, nu) =
      2.0 * s_big.transpose() * r_big * s_big;
  out.g = Eigen::VectorXd::Zero(nx + nu);
  out.g.head(nx) = -2.0 * c_big.transpose() * (q_big * err_big);
  out.g.tail(nu) = 2.0 * s_big.transpose() * (r_big * dug);

  const int n_eq = n + m + n * horizon + m;
  out.a = Eigen::MatrixXd::Zero(n_eq, nx + nu);
  out.b = Eigen::VectorXd::Zero(n_eq);
  out.a.block(0, 0, n, n).setIdentity();
  out.b.head(n) = xm - xg[0];
  out.a.block(n, nx, m, m).setIdentity();
  out.b.segment(n, m) = ul - ug[0];
  for (int i = 1; i <= horizon; ++i) {
    const int row = n + m + n * (i - 1);
    out.a.block(row, n * i, n, n) =
        Eigen::MatrixXd::Identity(n, n) - lins[i - 1].a1;
    out.a.block(row, n * (i - 1), n, n) = -lins[i - 1].a0;
    out.a.block(row, nx + m * (i - 1), n, m) = -lins[i - 1].b;
    out.b.segment(row, n) = lins[i - 1].fg - xg[i];
  }
  const int hold = n + m + n * horizon;
  if (horizon >= 2) {
    out.a.block(hold, nx + m * (horizon - 1), m, m).setIdentity();
    out.a.block(hold, nx + m * (horizon - 2), m, m) =
        -Eigen::MatrixXd::Identity(m, m);
    out.b.segment(hold, m) = -(ug[horizon - 1] - ug[horizon - 2]);
  } else {
    out.a.block(hold, nx, m, m).setIdentity();
    out.b.segment(hold, m) = ul - ug[0];
  }

  int n_ineq = 0;
  for (const auto& lin : cons) n_ineq += static_cast<int>(lin.g.size());
  out.gg = Eigen::MatrixXd::Zero(n_ineq, nx + nu);
  out.hh = Eigen::VectorXd::Zero(n_ineq);
  int row = 0;
  for (int i = 1; i <= static_cast<int>(cons.size()); ++i) {
    const auto& lin = cons[i - 1];
    const int rows = static_cast<int>(lin.g.size());
    out.gg.block(row, n * i, rows, n) = lin.dx;
    out.gg.block(row, nx + m * (i - 1), rows, m) = lin.du;
    out.hh.segment(row, rows) = -lin.g;
    row += rows;
  }
  return out;
}

StageJacobians scalar_stage(double a1, double b, double fg) {
  StageJacobians out;
  out.a0 = Eigen::MatrixXd::Identity(1, 1);
  out.a1 = Eigen::MatrixXd::Constant(1, 1, a1);
  out.b = Eigen::MatrixXd::Constant(1, 1, b);
  out.fg = Eigen::VectorXd::Constant(1, fg);
  return out;
}

}  // namespace

TEST_CASE("hand-expanded three-variable QP (N = 1, scalar model)") {
  // Model xdot = a x + b u discretized implicitly: A1 = dt a, B = dt b.
  const double a = -2.0, b = 1.0, dt = 0.1;
  const double xg0 = 0.4, xg1 = 0.5, ug0 = 0.2;
  const double xm = 0.45, ul = 0.15;
  const double r0 = 0.6, r1 = 0.7;
  const ToyWeights tw = scalar_weights(2.0, 0.5, 3.0, 2.0);

  const double fg = xg0 + dt * (a * xg1 + b * ug0);
  const QpProblem qp = build_qp(
      {Eigen::VectorXd::Constant(1, xg0), Eigen::VectorXd::Constant(1, xg1)},
      {Eigen::VectorXd::Constant(1, ug0)},
      {Eigen::VectorXd::Constant(1, r0), Eigen::VectorXd::Constant(1, r1)},
      Eigen::VectorXd::Constant(1, xm), Eigen::VectorXd::Constant(1, ul),
      tw.weights, {scalar_stage(dt * a, dt * b, fg)}, {});

  const double qn = 2.0 / (0.5 * 0.5);
  const double rn = 3.0 / (2.0 * 2.0);
  const Eigen::MatrixXd h = Eigen::MatrixXd(qp.hessian);

  // Hand expansion of the cost over [dx0, dx1, du0].
  CHECK(h(0, 0) == 2.0 * qn);
  CHECK(h(1, 1) == 2.0 * qn);
  CHECK(h(2, 2) == 2.0 * rn);
  CHECK(h(0, 1) == 0.0);
  CHECK(h(0, 2) == 0.0);
  CHECK(qp.gradient[0] == -2.0 * qn * (r0 - xg0));
  CHECK(qp.gradient[1] == -2.0 * qn * (r1 - xg1));
  CHECK(qp.gradient[2] == 2.0 * rn * (ug0 - ul));

  // Equality rows: initial value, input anchor, dynamics, terminal hold.
  const Eigen::MatrixXd eq = Eigen::MatrixXd(qp.eq_matrix);
  REQUIRE(eq.rows() == 4);
  CHECK(eq(0, 0) == 1.0);
  CHECK(qp.eq_rhs[0] == xm - xg0);
  CHECK(eq(1, 2) == 1.0);
  CHECK(qp.eq_rhs[1] == ul - ug0);
  CHECK(eq(2, 0) == -1.0);
  CHECK(eq(2, 1) == 1.0 - dt * a);
  CHECK(eq(2, 2) == -dt * b);
  CHECK(qp.eq_rhs[2] == fg - xg1);
  CHECK(eq(3, 2) == 1.0);
  CHECK(qp.eq_rhs[3] == ul - ug0);
}

TEST_CASE("residual-free linearization point zeroes the right-hand sides") {
  // Constant guess at an equilibrium of xdot = 0 with constant input and
  // the reference sitting on the guess.
  const ToyWeights tw = scalar_weights(1.0, 1.0, 5.0, 1.0);
  const int horizon = 4;
  std::vector<Eigen::VectorXd> xg(horizon + 1,
                                  Eigen::VectorXd::Constant(1, 0.7));
  std::vector<Eigen::VectorXd> ug(horizon,
                                  Eigen::VectorXd::Constant(1, 0.3));
  std::vector<Eigen::VectorXd> refs(horizon + 1,
                                    Eigen::VectorXd::Constant(1, 0.7));
  std::vector<StageJacobians> lins(horizon, scalar_stage(0.0, 0.0, 0.7));

  const QpProblem qp =
      build_qp(xg, ug, refs, Eigen::VectorXd::Constant(1, 0.7),
               Eigen::VectorXd::Constant(1, 0.3), tw.weights, lins, {});
  CHECK(qp.gradient.head(horizon + 1).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(qp.eq_rhs.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("doubling output weights doubles the state blocks") {
  ToyWeights tw = scalar_weights(1.0, 1.0, 5.0, 1.0);
  std::vector<Eigen::VectorXd> xg(3, Eigen::VectorXd::Constant(1, 0.2));
  std::vector<Eigen::VectorXd> ug(2, Eigen::VectorXd::Constant(1, 0.1));
  std::vector<Eigen::VectorXd> refs(3, Eigen::VectorXd::Constant(1, 0.9));
  std::vector<StageJacobians> lins(2, scalar_stage(-0.1, 0.05, 0.2));
  const Eigen::VectorXd xm = Eigen::VectorXd::Constant(1, 0.25);
  const Eigen::VectorXd ul = Eigen::VectorXd::Constant(1, 0.0);

  const QpProblem base = build_qp(xg, ug, refs, xm, ul, tw.weights, lins, {});
  tw.weights.output_weights *= 2.0;
  const QpProblem doubled =
      build_qp(xg, ug, refs, xm, ul, tw.weights, lins, {});

  const Eigen::MatrixXd h0 = Eigen::MatrixXd(base.hessian);
  const Eigen::MatrixXd h1 = Eigen::MatrixXd(doubled.hessian);
  CHECK(h1.topLeftCorner(3, 3) == 2.0 * h0.topLeftCorner(3, 3));
  CHECK(doubled.gradient.head(3) == 2.0 * base.gradient.head(3));
  CHECK(h1(3, 3) == h0(3, 3));
}

TEST_CASE("builder matches the dense literal transcription") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int horizon : {1, 2, 3}) {
    const int n = 2;
    const int m = 1;
    CostWeights w;
    w.output_matrix = Eigen::MatrixXd::Zero(1, n);
    w.output_matrix(0, 0) = 1.0;  // selection row
    w.output_weights = Eigen::VectorXd::Constant(1, 1.5);
    w.output_ranges = Eigen::VectorXd::Constant(1, 2.0);
    w.increment_weights = Eigen::VectorXd::Constant(m, 5.0);
    w.increment_ranges = Eigen::VectorXd::Constant(m, 3.0);

    std::vector<Eigen::VectorXd> xg;
    std::vector<Eigen::VectorXd> ug;
    std::vector<Eigen::VectorXd> refs;
    std::vector<StageJacobians> lins;
    std::vector<ConstraintLinearization> cons;
    for (int i = 0; i <= horizon; ++i) {
      xg.push_back(Eigen::Vector2d(gauss(rng), gauss(rng)));
      refs.push_back(Eigen::VectorXd::Constant(1, gauss(rng)));
    }
    for (int i = 0; i < horizon; ++i) {
      ug.push_back(Eigen::VectorXd::Constant(1, gauss(rng)));
      StageJacobians lin;
      lin.a0 = Eigen::MatrixXd::Identity(n, n);
      lin.a1 = Eigen::MatrixXd::NullaryExpr(n, n,
                                            [&] { return 0.1 * gauss(rng); });
      lin.b = Eigen::MatrixXd::NullaryExpr(n, m,
                                           [&] { return 0.1 * gauss(rng); });
      lin.fg = Eigen::Vector2d(gauss(rng), gauss(rng));
      lins.push_back(lin);
      ConstraintLinearization c;
      c.g = Eigen::VectorXd::Constant(2, -1.0);
      c.dx = Eigen::MatrixXd::NullaryExpr(2, n, [&] { return gauss(rng); });
      c.du = Eigen::MatrixXd::NullaryExpr(2, m, [&] { return gauss(rng); });
      cons.push_back(c);
    }
    const Eigen::VectorXd xm = Eigen::Vector2d(gauss(rng), gauss(rng));
    const Eigen::VectorXd ul = Eigen::VectorXd::Constant(1, gauss(rng));

    const QpProblem qp = build_qp(xg, ug, refs, xm, ul, w, lins, cons);
    const DenseTranscription dense =
        dense_transcription(xg, ug, refs, xm, ul, w, lins, cons);

    CHECK((Eigen::MatrixXd(qp.hessian) - dense.h).lpNorm<Eigen::Infinity>() ==
          0.0);
    CHECK((qp.gradient - dense.g).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((Eigen::MatrixXd(qp.eq_matrix) - dense.a)
              .lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((qp.eq_rhs - dense.b).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((Eigen::MatrixXd(qp.ineq_matrix) - dense.gg)
              .lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((qp.ineq_rhs - dense.hh).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("hessian is symmetric positive semidefinite by construction") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int horizon = 3;
    CostWeights w;
    w.output_matrix = Eigen::MatrixXd::NullaryExpr(
        2, 3, [&] { return gauss(rng); });
    w.output_weights = Eigen::Vector2d(0.7, 1.3).cwiseAbs();
    w.output_ranges = Eigen::Vector2d(2.0, 4.0);
    w.increment_weights = Eigen::VectorXd::Constant(1, 5.0);
    w.increment_ranges = Eigen::VectorXd::Constant(1, 3.0);
    std::vector<Eigen::VectorXd> xg(horizon + 1, Eigen::Vector3d::Zero());
    std::vector<Eigen::VectorXd> ug(horizon, Eigen::VectorXd::Zero(1));
    std::vector<Eigen::VectorXd> refs(horizon + 1, Eigen::Vector2d::Zero());
    StageJacobians lin;
    lin.a0 = Eigen::MatrixXd::Identity(3, 3);
    lin.a1 = Eigen::MatrixXd::Zero(3, 3);
    lin.b = Eigen::MatrixXd::Zero(3, 1);
    lin.fg = Eigen::Vector3d::Zero();
    std::vector<StageJacobians> lins(horizon, lin);

    const QpProblem qp = build_qp(xg, ug, refs, Eigen::Vector3d::Zero(),
                                  Eigen::VectorXd::Zero(1), w, lins, {});
    const Eigen::MatrixXd h = Eigen::MatrixXd(qp.hessian);
    CHECK((h - h.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("solver basics") {
  SUBCASE("unconstrained parabola") {
    // min (x-1)^2 = x^2 - 2x + 1
    const QpSolution sol = solve_qp(tiny_qp(2.0, -2.0));
    CHECK(sol.status == QpStatus::kSolved);
    CHECK(sol.primal[0] == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("active bound with dual 2") {
    // min x^2 s.t. x >= 1 (row -x <= -1)
    QpProblem qp = tiny_qp(2.0, 0.0);
    Eigen::MatrixXd g(1, 1);
    g << -1.0;
    qp.ineq_matrix = g.sparseView();
    qp.ineq_rhs = Eigen::VectorXd::Constant(1, -1.0);
    const QpSolution sol = solve_qp(qp);
    CHECK(sol.status == QpStatus::kSolved);
    CHECK(sol.primal[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.ineq_duals[0] == doctest::Approx(2.0).epsilon(1e-6));
    const KktResiduals res = kkt_residuals(qp, sol);
    CHECK(res.max() <= 1e-9);
  }

  SUBCASE("obviously infeasible rows are detected") {
    QpProblem qp = tiny_qp(2.0, 0.0);
    Eigen::MatrixXd g(2, 1);
    g << 1.0, -1.0;  // x <= -1 and x >= 1
    qp.ineq_matrix = g.sparseView();
    qp.ineq_rhs = Eigen::Vector2d(-1.0, -1.0);
    const QpSolution sol = solve_qp(qp);
    CHECK(sol.status == QpStatus::kPrimalInfeasible);
  }
}

TEST_CASE("random QPs match exhaustive active-set enumeration") {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> dim(2, 6);
  std::uniform_int_distribution<int> rows(1, 8);
  for (int trial = 0; trial < 60; ++trial) {
    const QpProblem qp = random_boxy_qp(rng, dim(rng), rows(rng));
    Eigen::VectorXd ref;
    REQUIRE(enumerate_qp_solution(qp, &ref, nullptr, nullptr));
    const QpSolution sol = solve_qp(qp);
    REQUIRE(sol.status == QpStatus::kSolved);
    CHECK((sol.primal - ref).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK(kkt_residuals(qp, sol).max() <= 1e-6);
  }
}

TEST_CASE("warm start consistency") {
  std::mt19937_64 rng(99);
  const QpProblem qp = random_boxy_qp(rng, 5, 6);
  const QpSolution first = solve_qp(qp);
  REQUIRE(first.status == QpStatus::kSolved);
  const QpSolution again = solve_qp(qp, {}, &first);
  CHECK(again.status == QpStatus::kSolved);
  CHECK(again.iterations <= 5);
  CHECK((again.primal - first.primal).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("scaling the whole cost keeps the optimizer") {
  std::mt19937_64 rng(7);
  QpProblem qp = random_boxy_qp(rng, 4, 5);
  const QpSolution base = solve_qp(qp);
  QpProblem scaled = qp;
  scaled.hessian = qp.hessian * 37.0;
  scaled.gradient = qp.gradient * 37.0;
  const QpSolution after = solve_qp(scaled);
  REQUIRE(base.status == QpStatus::kSolved);
  REQUIRE(after.status == QpStatus::kSolved);
  CHECK((base.primal - after.primal).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("translation invariance of the tracked optimum") {
  // Double integrator, equality-constrained only: shifting the measured
  // state and the reference by the same feasible offset shifts the
  // optimal deviations so the absolute plan translates exactly.
  const int horizon = 4;
  const double dt = 0.1;
  CostWeights w;
  w.output_matrix = Eigen::MatrixXd::Zero(1, 2);
  w.output_matrix(0, 0) = 1.0;
  w.output_weights = Eigen::VectorXd::Constant(1, 1.0);
  w.output_ranges = Eigen::VectorXd::Constant(1, 1.0);
  w.increment_weights = Eigen::VectorXd::Constant(1, 5.0);
  w.increment_ranges = Eigen::VectorXd::Constant(1, 1.0);

  StageJacobians lin;
  lin.a0 = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd a(2, 2);
  a << 0.0, 1.0, 0.0, 0.0;
  Eigen::MatrixXd b(2, 1);
  b << 0.0, 1.0;
  lin.a1 = dt * a;
  lin.b = dt * b;

  std::vector<Eigen::VectorXd> xg(horizon + 1, Eigen::Vector2d::Zero());
  std::vector<Eigen::VectorXd> ug(horizon, Eigen::VectorXd::Zero(1));
  std::vector<StageJacobians> lins;
  for (int i = 1; i <= horizon; ++i) {
    StageJacobians stage = lin;
    stage.fg = xg[i - 1];  // F at the zero guess
    lins.push_back(stage);
  }
  std::vector<Eigen::VectorXd> refs;
  for (int i = 0; i <= horizon; ++i) {
    refs.push_back(Eigen::VectorXd::Constant(1, 0.1 * i));
  }

  const Eigen::Vector2d xm(0.05, 0.0);
  const Eigen::VectorXd ul = Eigen::VectorXd::Zero(1);
  const QpProblem qp = build_qp(xg, ug, refs, xm, ul, w, lins, {});
  const QpSolution sol = solve_qp(qp);
  REQUIRE(sol.status == QpStatus::kSolved);

  const double c = 0.37;  // pure position offset is dynamically feasible
  std::vector<Eigen::VectorXd> refs_shifted;
  for (const auto& r : refs) {
    refs_shifted.push_back(r + Eigen::VectorXd::Constant(1, c));
  }
  const Eigen::Vector2d xm_shifted = xm + Eigen::Vector2d(c, 0.0);
  const QpProblem qp2 =
      build_qp(xg, ug, refs_shifted, xm_shifted, ul, w, lins, {});
  const QpSolution sol2 = solve_qp(qp2);
  REQUIRE(sol2.status == QpStatus::kSolved);

  // State deviations shift by (c, 0) at every stage; inputs unchanged.
  for (int i = 0; i <= horizon; ++i) {
    CHECK(sol2.primal[2 * i] ==
          doctest::Approx(sol.primal[2 * i] + c).epsilon(1e-7));
    CHECK(sol2.primal[2 * i + 1] ==
          doctest::Approx(sol.primal[2 * i + 1]).scale(1.0).epsilon(1e-7));
  }
  const int ubase = 2 * (horizon + 1);
  for (int i = 0; i < horizon; ++i) {
    CHECK(sol2.primal[ubase + i] ==
          doctest::Approx(sol.primal[ubase + i]).scale(1.0).epsilon(1e-7));
  }
}

TEST_CASE("kkt residuals on hand-built optima") {
  QpProblem qp = tiny_qp(2.0, 0.0);
  Eigen::MatrixXd g(1, 1);
  g << -1.0;
  qp.ineq_matrix = g.sparseView();
  qp.ineq_rhs = Eigen::VectorXd::Constant(1, -1.0);

  QpSolution hand;
  hand.primal = Eigen::VectorXd::Constant(1, 1.0);
  hand.eq_duals.resize(0);
  hand.ineq_duals = Eigen::VectorXd::Constant(1, 2.0);
  const KktResiduals exact = kkt_residuals(qp, hand);
  CHECK(exact.stationarity <= 1e-12);
  CHECK(exact.inequality <= 1e-12);
  CHECK(exact.complementarity <= 1e-12);

  QpSolution perturbed = hand;
  perturbed.primal[0] += 1e-3;
  const KktResiduals off = kkt_residuals(qp, perturbed);
  CHECK(off.stationarity == doctest::Approx(2e-3).epsilon(1e-6));
}

TEST_CASE("qp dump writes the documented sections") {
  std::mt19937_64 rng(15);
  const QpProblem qp = random_boxy_qp(rng, 3, 2);
  const std::string path = "qp_dump_test.txt";
  dump_qp(qp, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  for (const char* section : {"matrix H", "vector g", "matrix A", "vector b",
                              "matrix G", "vector h"}) {
    CHECK(text.find(section) != std::string::npos);
  }
  std::remove(path.c_str());
}
