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

#include "secl/dynamics.hpp"

#include <limits>
#include <optional>

namespace secl {

/// Window start for the refreshed integrals.
struct RefreshAnchor {
  double t_re = 0.0;
  Matrix Omega_at_re;
  Vector x_at_re;
  Vector rho_f_at_re;
};

/// Filtered-regressor identifier.
///
/// Omega integrates omega(x), Omega_f integrates Omega^T Omega, rho_f
/// integrates rho(x) u and Psi_f integrates Omega^T (x - x0 - rho_f). Since
/// x - x0 - rho_f = Omega theta, Psi_f = Omega_f theta and the estimate is
/// driven by the residual Psi_f - Omega_f theta_hat.
struct IdentifierState {
  Matrix Omega;
  Matrix Omega_f;
  Vector rho_f;
  Vector Psi_f;
  Vector theta_hat;
  Matrix Gamma_theta;
  double omega_f_bound = 1.0;
  bool refresh_enabled = false;
  Vector x0;
  std::optional<RefreshAnchor> anchor;
  bool frozen = false;
  int refresh_count = 0;

  static IdentifierState init(const SystemModel& model, const Vector& x0, const Vector& theta0,
                              const Matrix& Gamma_theta, double omega_f_bound, bool refresh_enabled) {
    if (!(omega_f_bound > 0.0)) throw Error(ErrorKind::ParameterDomain, "omega_f_bound must be positive");
    IdentifierState s;
    s.Omega = Matrix::Zero(model.n, model.p);
    s.Omega_f = Matrix::Zero(model.p, model.p);
    s.rho_f = Vector::Zero(model.n);
    s.Psi_f = Vector::Zero(model.p);
    s.theta_hat = theta0;
    s.Gamma_theta = Gamma_theta;
    s.omega_f_bound = omega_f_bound;
    s.refresh_enabled = refresh_enabled;
    s.x0 = x0;
    return s;
  }

  /// Regressor integral over the current window.
  Matrix window_omega() const { return anchor ? Matrix(Omega - anchor->Omega_at_re) : Omega; }

  /// x(t) - x(start) - input integral over the current window.
  Vector window_displacement(const Vector& x, const Vector& x_start) const {
    if (anchor) return x - anchor->x_at_re - (rho_f - anchor->rho_f_at_re);
    return x - x_start - rho_f;
  }
};

/// Restart the filtered integrals from time t.
inline void refresh(IdentifierState& state, double t, const Vector& x) {
  state.anchor = RefreshAnchor{t, state.Omega, x, state.rho_f};
  state.Omega_f.setZero();
  state.Psi_f.setZero();
  state.frozen = false;
  ++state.refresh_count;
}

/// One step of the four filters over [t, t + dt] with held input u. With
/// only the left-point state x this is forward Euler. When the right-point
/// state is supplied the trapezoidal rule is used, which keeps the integral
/// identity at O(dt^2). Once |Omega_f|_F exceeds the bound the filters
/// freeze, or restart from t when refresh is enabled.
inline void integrate_filters(IdentifierState& state, const SystemModel& model, const Vector& x,
                              const Vector& u, const Vector& x0, double dt, double t = 0.0,
                              const Vector* x_next = nullptr) {
  if (!(dt > 0.0)) throw Error(ErrorKind::ParameterDomain, "dt must be positive");
  if (state.Omega_f.norm() > state.omega_f_bound) {
    if (!state.refresh_enabled) {
      state.frozen = true;
      return;
    }
    refresh(state, t, x);
  }
  const Matrix win = state.window_omega();
  const Vector disp = state.window_displacement(x, x0);
  if (!x_next) {
    state.Omega_f += dt * (win.transpose() * win);
    state.Psi_f += dt * (win.transpose() * disp);
    state.Omega += dt * model.omega(x);
    state.rho_f += dt * (model.rho(x) * u);
  } else {
    state.Omega += 0.5 * dt * (model.omega(x) + model.omega(*x_next));
    state.rho_f += 0.5 * dt * ((model.rho(x) + model.rho(*x_next)) * u);
    const Matrix win1 = state.window_omega();
    const Vector disp1 = state.window_displacement(*x_next, x0);
    state.Omega_f += 0.5 * dt * (win.transpose() * win + win1.transpose() * win1);
    state.Psi_f += 0.5 * dt * (win.transpose() * disp + win1.transpose() * disp1);
  }
  state.Omega_f = 0.5 * (state.Omega_f + state.Omega_f.transpose());
}

/// Parameter update driven by Psi_f - Omega_f theta_hat, taken as a
/// backward-Euler step so the contraction holds for any dt.
inline void update_theta(IdentifierState& state, double dt) {
  const auto p = state.theta_hat.size();
  const Matrix lhs = Matrix::Identity(p, p) + dt * state.Gamma_theta * state.Omega_f;
  const Vector rhs = state.theta_hat + dt * state.Gamma_theta * state.Psi_f;
  state.theta_hat = lhs.partialPivLu().solve(rhs);
}

/// Smallest eigenvalue of Omega_f^T Omega_f.
inline double excitation_level(const IdentifierState& state) {
  if (state.Omega_f.size() == 0) return 0.0;
  const Matrix gram = state.Omega_f.transpose() * state.Omega_f;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues().minCoeff());
}

/// V_theta = 1/2 e^T Gamma_theta^-1 e with e = theta - theta_hat.
inline double parameter_lyapunov(const IdentifierState& state, const Vector& theta_true) {
  const Vector e = theta_true - state.theta_hat;
  return 0.5 * e.dot(state.Gamma_theta.ldlt().solve(e));
}

/// Contraction rate of V_theta under exact filters: 2 lambda_min(L^T Omega_f L)
/// with Gamma_theta = L L^T.
inline double identifier_rate(const IdentifierState& state) {
  if (state.Omega_f.size() == 0) return 0.0;
  const Matrix L = state.Gamma_theta.llt().matrixL();
  const Matrix S = L.transpose() * state.Omega_f * L;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
  return 2.0 * std::max(0.0, eig.eigenvalues().minCoeff());
}

/// Records the first time the excitation level exceeds a threshold.
struct ExcitationMonitor {
  double threshold = 0.1;
  std::optional<double> first_crossing;

  void observe(const IdentifierState& state, double t) {
    if (!first_crossing && excitation_level(state) > threshold) first_crossing = t;
  }
};

}  // namespace secl
