/*
 Copyright 2026 The secl Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include "secl/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace secl {

/// Uncertain control-affine plant  xdot = omega(x) * theta + rho(x) * u.
///
/// `regressor` returns the n x p matrix omega(x), `input_map` the n x m
/// matrix rho(x). The drift is linear in the parameter vector, which is what
/// makes the filtered-regressor identifier applicable.
struct SystemModel {
  int n = 0;
  int m = 0;
  int p = 0;
  std::function<Matrix(const Vector&)> regressor;
  std::function<Matrix(const Vector&)> input_map;
  Vector theta_true;

  Matrix omega(const Vector& x) const {
    Matrix w = regressor(x);
    if (w.rows() != n || w.cols() != p)
      throw Error(ErrorKind::InternalConsistency, "regressor returned wrong shape");
    if (!w.allFinite()) throw Error(ErrorKind::NumericDomain, "non-finite regressor entry");
    return w;
  }

  Matrix rho(const Vector& x) const {
    Matrix g = input_map(x);
    if (g.rows() != n || g.cols() != m)
      throw Error(ErrorKind::InternalConsistency, "input map returned wrong shape");
    if (!g.allFinite()) throw Error(ErrorKind::NumericDomain, "non-finite input map entry");
    return g;
  }
};

/// Time-indexed record of one closed-loop run. Every sequence shares the
/// same grid; `triggered[k]` marks the rows where the control was recomputed.
struct TrajectoryLog {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> controls;
  std::vector<double> barrier_values;
  std::vector<double> multiplier_values;
  std::vector<Vector> theta_estimates;
  std::vector<Vector> critic_weights;
  std::vector<bool> triggered;
  std::vector<double> trigger_instants;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

inline Vector drift(const SystemModel& model, const Vector& x, const Vector& theta) {
  return model.omega(x) * theta;
}

/// The two-state benchmark: omega(x) = [[x1, x2, 0], [0, 0, x1^3]],
/// rho(x) = [0, x2]^T, theta = (-0.6, -1, 1).
inline SystemModel benchmark_system() {
  SystemModel model;
  model.n = 2;
  model.m = 1;
  model.p = 3;
  model.regressor = [](const Vector& x) {
    Matrix w(2, 3);
    w << x(0), x(1), 0.0,
         0.0, 0.0, x(0) * x(0) * x(0);
    return w;
  };
  model.input_map = [](const Vector& x) {
    Matrix g(2, 1);
    g << 0.0, x(1);
    return g;
  };
  model.theta_true = Vector(3);
  model.theta_true << -0.6, -1.0, 1.0;
  return model;
}

inline constexpr double kDivergenceNorm = 1e6;

/// One classical RK4 step with the input held constant over [t, t + dt].
inline Vector step_rk4(const SystemModel& model, const Vector& x, const Vector& u_held,
                       const Vector& theta, double dt, std::int64_t step_index = -1) {
  if (!(dt > 0.0)) throw Error(ErrorKind::ParameterDomain, "dt must be positive");
  auto f = [&](const Vector& s) -> Vector { return model.omega(s) * theta + model.rho(s) * u_held; };
  auto diverged = [&]() {
    Error err(ErrorKind::Divergence, "state left the simulation domain");
    return step_index >= 0 ? err.at_step(step_index) : err;
  };
  Vector next;
  try {
    const Vector k1 = f(x);
    const Vector k2 = f(x + 0.5 * dt * k1);
    const Vector k3 = f(x + 0.5 * dt * k2);
    const Vector k4 = f(x + dt * k3);
    next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NumericDomain) throw;
    throw diverged();
  }
  if (!next.allFinite() || next.norm() > kDivergenceNorm) throw diverged();
  return next;
}

}  // namespace secl
