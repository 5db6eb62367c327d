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

#include <algorithm>
#include <cmath>
#include <random>

#include "rtnmpc/controller.hpp"
#include "rtnmpc/sim.hpp"
#include "rtnmpc/vehicle.hpp"

using namespace rtnmpc;

namespace {

class DoubleIntegrator : public ContinuousModel {
 public:
  int state_dim() const override { return 2; }
  int input_dim() const override { return 1; }
  Eigen::VectorXd derivative(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) const override {
    return Eigen::Vector2d(x[1], u[0]);
  }
};

CostWeights position_tracking_weights() {
  CostWeights w;
  w.output_matrix = Eigen::MatrixXd::Zero(1, 2);
  w.output_matrix(0, 0) = 1.0;
  w.output_weights = Eigen::VectorXd::Constant(1, 1.0);
  w.output_ranges = Eigen::VectorXd::Constant(1, 1.0);
  w.increment_weights = Eigen::VectorXd::Constant(1, 5.0);
  w.increment_ranges = Eigen::VectorXd::Constant(1, 1.0);
  return w;
}

// Dense KKT solve of the same deviation QP, written from scratch: the
// equality-constrained least-squares oracle for the linear model.
struct DenseOracle {
  Eigen::VectorXd primal;  // [dx_0..dx_N, du_0..du_{N-1}]
};

DenseOracle dense_double_integrator_oracle(
    int horizon, double dt, const Eigen::Vector2d& x_guess,
    double u_guess, const Eigen::Vector2d& x_measured, double u_latest,
    const std::vector<double>& position_refs, const CostWeights& w) {
  const int n = 2;
  const int m = 1;
  const int nx = n * (horizon + 1);
  const int nu = m * horizon;
  const int nv = nx + nu;

  const double qn = w.output_weights[0] /
                    (w.output_ranges[0] * w.output_ranges[0]);
  const double rn = w.increment_weights[0] /
                    (w.increment_ranges[0] * w.increment_ranges[0]);

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(nv, nv);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(nv);
  for (int i = 0; i <= horizon; ++i) {
    h(n * i, n * i) += 2.0 * qn;
    g[n * i] += -2.0 * qn * (position_refs[i] - x_guess[0]);
  }
  for (int i = 0; i < horizon; ++i) {
    // increment i couples du_i and du_{i-1}
    h(nx + i, nx + i) += 2.0 * rn;
    if (i > 0) {
      h(nx + i, nx + i - 1) += -2.0 * rn;
      h(nx + i - 1, nx + i) += -2.0 * rn;
      h(nx + i - 1, nx + i - 1) += 2.0 * rn;
    }
    const double dug = i == 0 ? u_guess - u_latest : 0.0;
    g[nx + i] += 2.0 * rn * dug;
    if (i > 0) g[nx + i - 1] += -2.0 * rn * 0.0;
  }

  const int n_eq = n + m + n * horizon + m;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_eq, nv);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_eq);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  b.head(2) = x_measured - x_guess;
  a(2, nx) = 1.0;
  b[2] = u_latest - u_guess;
  Eigen::Matrix2d a1;
  a1 << 0.0, dt, 0.0, 0.0;
  Eigen::Vector2d bcol(0.0, dt);
  for (int i = 1; i <= horizon; ++i) {
    const int row = 3 + n * (i - 1);
    a.block(row, n * i, 2, 2) = Eigen::Matrix2d::Identity() - a1;
    a.block(row, n * (i - 1), 2, 2) = -Eigen::Matrix2d::Identity();
    a.block(row, nx + (i - 1), 2, 1) = -bcol;
    // F_g - x_g with constant guesses
    const Eigen::Vector2d fg =
        x_guess + dt * Eigen::Vector2d(x_guess[1], u_guess);
    b.segment(row, 2) = fg - x_guess;
  }
  const int hold = 3 + n * horizon;
  a(hold, nx + horizon - 1) = 1.0;
  a(hold, nx + horizon - 2) = -1.0;
  b[hold] = 0.0;

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nv + n_eq, nv + n_eq);
  kkt.topLeftCorner(nv, nv) = h;
  kkt.topRightCorner(nv, n_eq) = a.transpose();
  kkt.bottomLeftCorner(n_eq, nv) = a;
  Eigen::VectorXd rhs(nv + n_eq);
  rhs.head(nv) = -g;
  rhs.tail(n_eq) = b;
  // The terminal hold duplicates no row here, but use a rank-revealing
  // solve anyway.
  const Eigen::VectorXd sol =
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(kkt).solve(rhs);
  DenseOracle out;
  out.primal = sol.head(nv);
  return out;
}

ControllerConfig double_integrator_config(int horizon, double dt) {
  ControllerConfig cfg;
  cfg.horizon = horizon;
  cfg.sample_period = dt;
  cfg.weights = position_tracking_weights();
  return cfg;
}

std::vector<Eigen::VectorXd> ramp_reference(int horizon, double start,
                                            double slope) {
  std::vector<Eigen::VectorXd> refs;
  for (int i = 0; i <= horizon; ++i) {
    refs.push_back(Eigen::VectorXd::Constant(1, start + slope * i));
  }
  return refs;
}

PredictionState straight_bicycle(const VehicleParams& p, double vx) {
  PredictionState s;
  s.vx = vx;
  s.wheel_f = s.wheel_r = vx / p.wheel_radius;
  return s;
}

std::vector<Eigen::VectorXd> bicycle_reference(const PredictionState& s,
                                               int horizon, double dt,
                                               double lateral) {
  std::vector<Eigen::VectorXd> refs;
  for (int i = 0; i <= horizon; ++i) {
    refs.push_back(Eigen::Vector4d(s.px + s.vx * dt * i, s.py + lateral,
                                   0.0, s.vx));
  }
  return refs;
}

}  // namespace

TEST_CASE("initialization replicates the measurement and input") {
  DoubleIntegrator model;
  RtiController ctl(model, nullptr, double_integrator_config(5, 0.1),
                    ControllerMode::kRti);
  const Eigen::Vector2d x0(0.3, -0.1);
  ctl.initialize(x0, Eigen::VectorXd::Constant(1, 0.2));
  REQUIRE(ctl.state_guess().size() == 6);
  REQUIRE(ctl.input_guess().size() == 5);
  for (const auto& x : ctl.state_guess()) {
    CHECK((x - x0).norm() == 0.0);
  }
  for (const auto& u : ctl.input_guess()) {
    CHECK(u[0] == 0.2);
  }
  CHECK(ctl.latest_input()[0] == 0.2);
}

TEST_CASE("linear exactness: RTI equals the dense oracle and converged SQP") {
  const int horizon = 6;
  const double dt = 0.1;
  DoubleIntegrator model;
  const CostWeights w = position_tracking_weights();

  const Eigen::Vector2d x_guess(0.3, -0.2);
  const double u_guess = 0.05;
  const Eigen::Vector2d x_measured(0.35, -0.15);
  std::vector<double> refs_scalar;
  for (int i = 0; i <= horizon; ++i) refs_scalar.push_back(0.5 + 0.02 * i);

  const DenseOracle oracle = dense_double_integrator_oracle(
      horizon, dt, x_guess, u_guess, x_measured, u_guess, refs_scalar, w);

  auto make = [&](ControllerMode mode) {
    RtiController ctl(model, nullptr, double_integrator_config(horizon, dt),
                      mode);
    ctl.initialize(x_guess, Eigen::VectorXd::Constant(1, u_guess));
    return ctl;
  };
  std::vector<Eigen::VectorXd> refs = ramp_reference(horizon, 0.5, 0.02);

  RtiController rti = make(ControllerMode::kRti);
  const ControlDecision rti_dec = rti.step(x_measured, refs);
  RtiController sqp = make(ControllerMode::kSqpConverged);
  const ControlDecision sqp_dec = sqp.step(x_measured, refs);

  // One RTI step solves the linear problem exactly; SQP confirms in one
  // accepted iteration.
  CHECK(sqp_dec.sqp_iterations == 1);
  CHECK(sqp_dec.sqp_converged);
  CHECK((rti_dec.input - sqp_dec.input).lpNorm<Eigen::Infinity>() <= 1e-8);

  const int nx = 2 * (horizon + 1);
  for (int i = 0; i <= horizon; ++i) {
    const Eigen::Vector2d expected =
        x_guess + oracle.primal.segment<2>(2 * i);
    CHECK((rti_dec.predicted_states[i] - expected)
              .lpNorm<Eigen::Infinity>() <= 1e-8);
  }
  const double expected_input = u_guess + oracle.primal[nx + 1];
  CHECK(rti_dec.input[0] == doctest::Approx(expected_input).epsilon(1e-9));

  // The anchored first input never moves on a delay-consistent problem.
  CHECK(rti_dec.predicted_inputs[0][0] ==
        doctest::Approx(u_guess).epsilon(1e-9));
}

TEST_CASE("zero tracking error commands no change") {
  // Guess on the reference at an equilibrium of the model: the optimum of
  // the residual-free QP with increment penalty is zero increments.
  const int horizon = 5;
  DoubleIntegrator model;
  RtiController ctl(model, nullptr, double_integrator_config(horizon, 0.1),
                    ControllerMode::kRti);
  const Eigen::Vector2d rest(0.7, 0.0);
  ctl.initialize(rest, Eigen::VectorXd::Zero(1));
  const ControlDecision dec =
      ctl.step(rest, ramp_reference(horizon, 0.7, 0.0));
  CHECK(std::abs(dec.input[0]) <= 1e-9);
}

TEST_CASE("nominal bicycle step steers toward the reference") {
  const VehicleParams p;
  const BicycleModel model(p);
  const ConstraintLimits limits;
  const VehicleStageConstraints cons(p, limits);
  ControllerConfig cfg;
  cfg.weights = CostWeights::vehicle_defaults();
  cfg.input_lower = Eigen::Vector2d(-limits.torque_max, -limits.steer_rate_max);
  cfg.input_upper = Eigen::Vector2d(limits.torque_max, limits.steer_rate_max);

  for (double offset : {1.0, -1.0}) {
    RtiController ctl(model, &cons, cfg, ControllerMode::kRti);
    const PredictionState start = straight_bicycle(p, 8.0);
    ctl.initialize(start.vector(), Eigen::Vector2d::Zero());
    // Reference displaced laterally by `offset`: expect steering toward it.
    const ControlDecision dec = ctl.step(
        start.vector(), bicycle_reference(start, cfg.horizon, 0.04, offset));
    CHECK(dec.qp_status == QpStatus::kSolved);
    CHECK(dec.input[1] * offset > 0.0);
    CHECK(dec.max_constraint_residual <= 1e-6);
  }
}

TEST_CASE("shift guess") {
  const VehicleParams p;
  const BicycleModel model(p);
  ControllerConfig cfg;
  cfg.weights = CostWeights::vehicle_defaults();
  RtiController ctl(model, nullptr, cfg, ControllerMode::kRti);

  SUBCASE("lengths are preserved") {
    const PredictionState s = straight_bicycle(p, 9.0);
    ctl.initialize(s.vector(), Eigen::Vector2d::Zero());
    ctl.shift();
    CHECK(static_cast<int>(ctl.state_guess().size()) == cfg.horizon + 1);
    CHECK(static_cast<int>(ctl.input_guess().size()) == cfg.horizon);
  }

  SUBCASE("near fixed point at a trimmed state") {
    // Straight driving with zero input decays only through drag, so one
    // shift changes the guesses by at most the per-step drag increment.
    const PredictionState s = straight_bicycle(p, 10.0);
    ctl.initialize(s.vector(), Eigen::Vector2d::Zero());
    ctl.shift();
    const Eigen::VectorXd tail = ctl.state_guess().back();
    CHECK(std::abs(tail[3] - 10.0) < 5e-3);
    CHECK(std::abs(tail[4]) < 1e-9);
  }

  SUBCASE("shifted warm start does not hurt the stage residual") {
    // A/B: after one RTI step, the shifted guess should predict the next
    // stage map at least as well as freezing the unshifted plan.
    const ConstraintLimits limits;
    const VehicleStageConstraints cons(p, limits);
    RtiController controller(model, &cons, cfg, ControllerMode::kRti);
    const PredictionState start = straight_bicycle(p, 8.0);
    controller.initialize(start.vector(), Eigen::Vector2d::Zero());

    std::vector<double> shifted_res;
    std::vector<double> frozen_res;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int step = 0; step < 9; ++step) {
      const ControlDecision dec = controller.step(
          controller.state_guess()[0] +
              0.01 * Eigen::VectorXd::Random(9),
          bicycle_reference(start, cfg.horizon, 0.04, 0.5));

      auto residual = [&](const std::vector<Eigen::VectorXd>& xs,
                          const std::vector<Eigen::VectorXd>& us) {
        double worst = 0.0;
        for (int i = 1; i <= cfg.horizon; ++i) {
          const StageJacobians lin = stage_jacobians(
              model, xs[i], xs[i - 1], us[i - 1], cfg.sample_period);
          worst = std::max(worst,
                           (lin.fg - xs[i]).lpNorm<Eigen::Infinity>());
        }
        return worst;
      };
      shifted_res.push_back(
          residual(controller.state_guess(), controller.input_guess()));
      frozen_res.push_back(
          residual(dec.predicted_states, dec.predicted_inputs));
      (void)uni;
      (void)rng;
    }
    std::sort(shifted_res.begin(), shifted_res.end());
    std::sort(frozen_res.begin(), frozen_res.end());
    CHECK(shifted_res[shifted_res.size() / 2] <=
          frozen_res[frozen_res.size() / 2] + 1e-12);
  }
}

TEST_CASE("cold versus shifted warm start") {
  const VehicleParams p;
  const BicycleModel model(p);
  const ConstraintLimits limits;
  const VehicleStageConstraints cons(p, limits);
  ControllerConfig cfg;
  cfg.weights = CostWeights::vehicle_defaults();

  std::vector<int> warm_iters;
  std::vector<int> cold_iters;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.02);
    const PredictionState start = straight_bicycle(p, 8.0);

    RtiController warm(model, &cons, cfg, ControllerMode::kRti);
    warm.initialize(start.vector(), Eigen::Vector2d::Zero());
    const auto refs = bicycle_reference(start, cfg.horizon, 0.04, 1.0);
    warm.step(start.vector(), refs);
    Eigen::VectorXd m1 = warm.state_guess()[0];
    for (int i = 0; i < 9; ++i) m1[i] += gauss(rng);
    warm_iters.push_back(warm.step(m1, refs).qp_iterations);

    RtiController cold(model, &cons, cfg, ControllerMode::kRti);
    cold.initialize(m1, Eigen::Vector2d::Zero());
    cold_iters.push_back(cold.step(m1, refs).qp_iterations);
  }
  std::sort(warm_iters.begin(), warm_iters.end());
  std::sort(cold_iters.begin(), cold_iters.end());
  CHECK(warm_iters[2] <= cold_iters[2]);
}

TEST_CASE("SQP on the bicycle model") {
  const VehicleParams p;
  const BicycleModel model(p);
  const ConstraintLimits limits;
  const VehicleStageConstraints cons(p, limits);
  ControllerConfig cfg;
  cfg.weights = CostWeights::vehicle_defaults();

  RtiController sqp(model, &cons, cfg, ControllerMode::kSqpConverged);
  const PredictionState start = straight_bicycle(p, 8.0);
  PredictionState offset = start;
  offset.py = 1.0;  // 1 m lateral error
  sqp.initialize(offset.vector(), Eigen::Vector2d::Zero());
  const ControlDecision dec = sqp.step(
      offset.vector(), bicycle_reference(start, cfg.horizon, 0.04, 0.0));

  CHECK(dec.sqp_converged);
  // Nonlinear problem from a cold start: strictly more work than RTI.
  CHECK(dec.sqp_iterations >= 2);
  // Converged stage dynamics meet the Newton-level defect.
  CHECK(dec.dynamics_defect <= 1e-8);
}

TEST_CASE("emitted inputs respect the box limits") {
  const VehicleParams p;
  const BicycleModel model(p);
  const ConstraintLimits limits;
  const VehicleStageConstraints cons(p, limits);
  ControllerConfig cfg;
  cfg.weights = CostWeights::vehicle_defaults();
  cfg.input_lower = Eigen::Vector2d(-limits.torque_max, -limits.steer_rate_max);
  cfg.input_upper = Eigen::Vector2d(limits.torque_max, limits.steer_rate_max);

  RtiController ctl(model, &cons, cfg, ControllerMode::kRti);
  const PredictionState start = straight_bicycle(p, 8.0);
  ctl.initialize(start.vector(), Eigen::Vector2d::Zero());
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  // Reference well off to the side to push the inputs into saturation.
  auto refs = bicycle_reference(start, cfg.horizon, 0.04, 5.0);
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXd m = ctl.state_guess()[0];
    m[1] += 0.05 * gauss(rng);
    m[3] = std::max(m[3] + 0.05 * gauss(rng), 1.0);
    const ControlDecision dec = ctl.step(m, refs);
    CHECK(std::abs(dec.input[0]) <= limits.torque_max + 1e-9);
    CHECK(std::abs(dec.input[1]) <= limits.steer_rate_max + 1e-9);
  }
}

TEST_CASE("solved steps keep KKT residuals below 1e-5 on a noisy run") {
  const VehicleParams p;
  const BicycleModel model(p);
  const ConstraintLimits limits;
  const VehicleStageConstraints cons(p, limits);
  ControllerConfig cfg;
  cfg.weights = CostWeights::vehicle_defaults();
  cfg.input_lower = Eigen::Vector2d(-limits.torque_max, -limits.steer_rate_max);
  cfg.input_upper = Eigen::Vector2d(limits.torque_max, limits.steer_rate_max);

  RtiController ctl(model, &cons, cfg, ControllerMode::kRti);
  PredictionState start = straight_bicycle(p, 8.0);
  start.py = 1.0;
  ctl.initialize(start.vector(), Eigen::Vector2d::Zero());

  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss(0.0, 0.05);
  int solved = 0;
  for (int k = 0; k < 60; ++k) {
    Eigen::VectorXd m = ctl.state_guess()[0];
    for (int i = 0; i < 9; ++i) m[i] += gauss(rng);
    m[3] = std::max(m[3], 1.0);
    PredictionState along = straight_bicycle(p, 8.0);
    along.px = 8.0 * 0.04 * k;
    const ControlDecision dec =
        ctl.step(m, bicycle_reference(along, cfg.horizon, 0.04, 0.0));
    if (dec.qp_status == QpStatus::kSolved && !dec.fallback) {
      ++solved;
      CHECK(dec.kkt.stationarity <= 1e-5);
      CHECK(dec.kkt.equality <= 1e-5);
      CHECK(dec.kkt.inequality <= 1e-5);
      CHECK(dec.kkt.complementarity <= 1e-5);
    }
  }
  CHECK(solved >= 55);
}

TEST_CASE("controller determinism") {
  const VehicleParams p;
  const BicycleModel model(p);
  const ConstraintLimits limits;
  const VehicleStageConstraints cons(p, limits);
  ControllerConfig cfg;
  cfg.weights = CostWeights::vehicle_defaults();

  auto run = [&]() {
    RtiController ctl(model, &cons, cfg, ControllerMode::kRti);
    const PredictionState start = straight_bicycle(p, 8.0);
    ctl.initialize(start.vector(), Eigen::Vector2d::Zero());
    std::mt19937_64 rng(42);
    std::normal_distribution<double> gauss(0.0, 0.05);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * 20);
    const auto refs = bicycle_reference(start, cfg.horizon, 0.04, 1.0);
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd m = ctl.state_guess()[0];
      for (int i = 0; i < 9; ++i) m[i] += gauss(rng);
      m[3] = std::max(m[3], 1.0);
      out.segment(2 * k, 2) = ctl.step(m, refs).input;
    }
    return out;
  };
  const Eigen::VectorXd a = run();
  const Eigen::VectorXd b = run();
  CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("reference window length is validated") {
  DoubleIntegrator model;
  RtiController ctl(model, nullptr, double_integrator_config(4, 0.1),
                    ControllerMode::kRti);
  ctl.initialize(Eigen::Vector2d::Zero(), Eigen::VectorXd::Zero(1));
  CHECK_THROWS_AS(ctl.step(Eigen::Vector2d::Zero(), ramp_reference(3, 0, 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      RtiController(model, nullptr, double_integrator_config(1, 0.1),
                    ControllerMode::kRti),
      std::invalid_argument);
}
