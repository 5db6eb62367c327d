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

#include "rtnmpc/discretize.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rtnmpc {

void ContinuousModel::analytic_jacobians(const Eigen::VectorXd&,
                                         const Eigen::VectorXd&,
                                         Eigen::MatrixXd&,
                                         Eigen::MatrixXd&) const {
  throw std::logic_error("model does not provide analytic Jacobians");
}

namespace {

void check_jacobian_finite(const Eigen::MatrixXd& jac, const char* which) {
  for (int i = 0; i < jac.rows(); ++i) {
    for (int c = 0; c < jac.cols(); ++c) {
      if (!std::isfinite(jac(i, c))) {
        std::ostringstream msg;
        msg << "non-finite " << which << " derivative at row " << i
            << ", column " << c;
        throw std::runtime_error(msg.str());
      }
    }
  }
}

}  // namespace

void finite_difference_jacobians(const ContinuousModel& model,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& u,
                                 Eigen::MatrixXd* dfdx, Eigen::MatrixXd* dfdu) {
  const int n = model.state_dim();
  const int m = model.input_dim();
  if (dfdx != nullptr) {
    dfdx->resize(n, n);
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    for (int i = 0; i < n; ++i) {
      const double h = std::max(1e-6, 1e-6 * std::abs(x[i]));
      xp[i] = x[i] + h;
      xm[i] = x[i] - h;
      dfdx->col(i) =
          (model.derivative(xp, u) - model.derivative(xm, u)) / (2.0 * h);
      xp[i] = x[i];
      xm[i] = x[i];
    }
    check_jacobian_finite(*dfdx, "state");
  }
  if (dfdu != nullptr) {
    dfdu->resize(n, m);
    Eigen::VectorXd up = u;
    Eigen::VectorXd um = u;
    for (int i = 0; i < m; ++i) {
      const double h = std::max(1e-6, 1e-6 * std::abs(u[i]));
      up[i] = u[i] + h;
      um[i] = u[i] - h;
      dfdu->col(i) =
          (model.derivative(x, up) - model.derivative(x, um)) / (2.0 * h);
      up[i] = u[i];
      um[i] = u[i];
    }
    check_jacobian_finite(*dfdu, "input");
  }
}

void model_jacobians(const ContinuousModel& model, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& u, Eigen::MatrixXd* dfdx,
                     Eigen::MatrixXd* dfdu) {
  if (model.has_analytic_jacobians()) {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    model.analytic_jacobians(x, u, a, b);
    check_jacobian_finite(a, "state");
    check_jacobian_finite(b, "input");
    if (dfdx != nullptr) *dfdx = std::move(a);
    if (dfdu != nullptr) *dfdu = std::move(b);
    return;
  }
  finite_difference_jacobians(model, x, u, dfdx, dfdu);
}

Eigen::VectorXd implicit_euler_step(const ContinuousModel& model,
                                    const Eigen::VectorXd& x_prev,
                                    const Eigen::VectorXd& u, double dt,
                                    const NewtonSettings& settings) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("implicit Euler requires dt > 0");
  }
  const int n = model.state_dim();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);

  Eigen::VectorXd x = x_prev;
  Eigen::VectorXd residual = x - x_prev - dt * model.derivative(x, u);
  double res_norm = residual.lpNorm<Eigen::Infinity>();

  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    if (res_norm <= settings.tolerance) {
      return x;
    }
    Eigen::MatrixXd dfdx;
    model_jacobians(model, x, u, &dfdx, nullptr);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(identity - dt * dfdx);
    if (!lu.isInvertible()) {
      throw std::runtime_error("singular Newton matrix in implicit Euler");
    }
    const Eigen::VectorXd delta = lu.solve(-residual);

    // Full step first; halve on residual increase.
    double step = 1.0;
    for (int h = 0; h <= settings.max_halvings; ++h) {
      const Eigen::VectorXd candidate = x + step * delta;
      const Eigen::VectorXd cand_res =
          candidate - x_prev - dt * model.derivative(candidate, u);
      const double cand_norm = cand_res.lpNorm<Eigen::Infinity>();
      if (cand_norm < res_norm || h == settings.max_halvings) {
        x = candidate;
        residual = cand_res;
        res_norm = cand_norm;
        break;
      }
      step *= 0.5;
    }
  }
  if (res_norm <= settings.tolerance) {
    return x;
  }
  std::ostringstream msg;
  msg << "implicit Euler Newton iteration did not converge: residual "
      << res_norm << " after " << settings.max_iterations << " iterations";
  throw std::runtime_error(msg.str());
}

StageJacobians stage_jacobians(const ContinuousModel& model,
                               const Eigen::VectorXd& x_guess,
                               const Eigen::VectorXd& x_prev_guess,
                               const Eigen::VectorXd& u_guess, double dt) {
  StageJacobians out;
  Eigen::MatrixXd dfdx;
  Eigen::MatrixXd dfdu;
  model_jacobians(model, x_guess, u_guess, &dfdx, &dfdu);
  const int n = model.state_dim();
  out.a0 = Eigen::MatrixXd::Identity(n, n);
  out.a1 = dt * dfdx;
  out.b = dt * dfdu;
  out.fg = x_prev_guess + dt * model.derivative(x_guess, u_guess);
  return out;
}

Eigen::VectorXd rk4_integrate(const ContinuousModel& model,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u, double dt,
                              int substeps) {
  if (substeps < 1) {
    throw std::invalid_argument("rk4_integrate requires substeps >= 1");
  }
  const double h = dt / substeps;
  Eigen::VectorXd state = x;
  for (int s = 0; s < substeps; ++s) {
    const Eigen::VectorXd k1 = model.derivative(state, u);
    const Eigen::VectorXd k2 = model.derivative(state + 0.5 * h * k1, u);
    const Eigen::VectorXd k3 = model.derivative(state + 0.5 * h * k2, u);
    const Eigen::VectorXd k4 = model.derivative(state + h * k3, u);
    state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!state.allFinite()) {
      std::ostringstream msg;
      msg << "RK4 state became non-finite at substep " << s << " of "
          << substeps;
      throw std::runtime_error(msg.str());
    }
  }
  return state;
}

}  // namespace rtnmpc
