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

#ifndef RTNMPC_VERIFY_HPP_
#define RTNMPC_VERIFY_HPP_

#include <cstdint>
#include <random>
#include <string>

#include "rtnmpc/qp.hpp"

namespace rtnmpc {

struct VerifyOptions {
  std::string suite = "all";  // all | jacobian | euler | qp | dynamics
  bool inject_jacobian_bug = false;  // fault injection for the jacobian suite
  uint64_t seed = 20260314;
};

struct VerifyReport {
  bool passed = false;
  std::string text;  // one line per check plus failure details
};

VerifyReport run_verification(const VerifyOptions& options);

/// Exhaustive active-set enumeration for small strictly convex QPs:
/// solves the KKT system of every inequality subset (equalities always
/// included) and returns the feasible optimizer with valid multipliers.
/// Independent of solve_qp; used as its oracle.
bool enumerate_qp_solution(const QpProblem& problem, Eigen::VectorXd* primal,
                           Eigen::VectorXd* eq_duals,
                           Eigen::VectorXd* ineq_duals);

/// Seeded strictly convex random QP with `n` variables and `n_ineq`
/// feasible inequality rows (no equalities).
QpProblem random_boxy_qp(std::mt19937_64& rng, int n, int n_ineq);

}  // namespace rtnmpc

#endif  // RTNMPC_VERIFY_HPP_
