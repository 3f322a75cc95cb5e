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

#include <algorithm>
#include <cmath>
#include <functional>

namespace secl {

/// Barrier function with a linear class-K gain, the robust compensation
/// scale and the relaxation factor used by the self-triggered constraint.
struct SafetySpec {
  std::function<double(const Vector&)> barrier;
  std::function<RowVector(const Vector&)> barrier_grad;
  double alpha_gain = 1.0;
  double comp_scale = 0.0;
  double relax = 1.0;

  double alpha(double s) const { return alpha_gain * s; }

  void validate() const {
    if (!(alpha_gain > 0.0)) throw Error(ErrorKind::ParameterDomain, "alpha_gain must be positive");
    if (!(comp_scale >= 0.0)) throw Error(ErrorKind::ParameterDomain, "comp_scale must be nonnegative");
    if (!(relax > 0.0 && relax <= 1.0)) throw Error(ErrorKind::ParameterDomain, "relax must lie in (0, 1]");
  }
};

/// s(x) = |x - center|^2 - radius^2, safe outside a disc.
inline SafetySpec disc_obstacle(const Vector& center, double radius) {
  SafetySpec spec;
  spec.barrier = [center, radius](const Vector& x) { return (x - center).squaredNorm() - radius * radius; };
  spec.barrier_grad = [center](const Vector& x) -> RowVector { return 2.0 * (x - center).transpose(); };
  return spec;
}

/// s(x) = -x2^2 - x1 + 1, safe to the left of a parabola.
inline SafetySpec parabolic_wall() {
  SafetySpec spec;
  spec.barrier = [](const Vector& x) { return -x(1) * x(1) - x(0) + 1.0; };
  spec.barrier_grad = [](const Vector& x) -> RowVector {
    RowVector g(2);
    g << -1.0, -2.0 * x(1);
    return g;
  };
  return spec;
}

/// Input weight with its inverse cached. R must be symmetric positive definite.
class InputWeight {
 public:
  InputWeight() = default;
  explicit InputWeight(const Matrix& R) : R_(R) {
    if (R.rows() != R.cols() || R.rows() == 0)
      throw Error(ErrorKind::ParameterDomain, "R must be square");
    if (!R.isApprox(R.transpose(), 1e-12))
      throw Error(ErrorKind::ParameterDomain, "R must be symmetric");
    Eigen::LLT<Matrix> llt(R);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorKind::ParameterDomain, "R must be positive definite");
    R_inv_ = llt.solve(Matrix::Identity(R.rows(), R.cols()));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(R);
    norm_ = eig.eigenvalues().maxCoeff();
    inv_norm_ = 1.0 / eig.eigenvalues().minCoeff();
  }

  const Matrix& R() const { return R_; }
  const Matrix& inverse() const { return R_inv_; }
  double norm() const { return norm_; }
  double inverse_norm() const { return inv_norm_; }
  int dim() const { return static_cast<int>(R_.rows()); }

 private:
  Matrix R_;
  Matrix R_inv_;
  double norm_ = 0.0;
  double inv_norm_ = 0.0;
};

struct LieDerivatives {
  RowVector L_omega_s;  // 1 x p
  RowVector L_rho_s;    // 1 x m
};

inline LieDerivatives lie_derivatives(const SystemModel& model, const SafetySpec& spec, const Vector& x) {
  const RowVector grad = spec.barrier_grad(x);
  return {grad * model.omega(x), grad * model.rho(x)};
}

inline double compensation(const SystemModel& model, const SafetySpec& spec, const Vector& x) {
  if (spec.comp_scale == 0.0) return 0.0;
  return spec.comp_scale * lie_derivatives(model, spec, x).L_omega_s.squaredNorm();
}

/// Constraint margin with an explicit relaxation of the class-K term.
inline double margin(const SystemModel& model, const SafetySpec& spec, const Vector& x,
                     const Vector& theta_hat, const Vector& u, double relax) {
  const LieDerivatives lie = lie_derivatives(model, spec, x);
  const double xi = spec.comp_scale * lie.L_omega_s.squaredNorm();
  return lie.L_omega_s.dot(theta_hat) + lie.L_rho_s.dot(u) + relax * spec.alpha(spec.barrier(x)) - xi;
}

/// Robust constraint margin; nonnegative means u satisfies the RCBF at x.
inline double nu(const SystemModel& model, const SafetySpec& spec, const Vector& x,
                 const Vector& theta_hat, const Vector& u) {
  return margin(model, spec, x, theta_hat, u, 1.0);
}

/// Self-triggered margin, evaluated at the sampled state with the relaxed gain.
inline double nu_d(const SystemModel& model, const SafetySpec& spec, const Vector& x_sample,
                   const Vector& theta_hat, const Vector& u) {
  return margin(model, spec, x_sample, theta_hat, u, spec.relax);
}

struct MultiplierResult {
  double lambda = 0.0;
  double margin_nominal = 0.0;  // margin under the uncorrected control
  double r_s_rho = 0.0;         // grad(s) rho R^-1 rho^T grad(s)^T
  bool infeasible = false;
  Vector correction;            // R^-1 L_rho_s^T, the direction lambda scales
};

inline double degeneracy_threshold(const RowVector& grad_s, const Matrix& rho, const InputWeight& R) {
  return 1e-9 * (1.0 + grad_s.squaredNorm() * rho.squaredNorm() * R.inverse_norm());
}

/// Closed-form multiplier lambda = max(-margin(u_no) / R_srho, 0).
///
/// When the margin is negative and R_srho falls below the degeneracy
/// threshold the constraint cannot be enforced at x; the result is flagged
/// infeasible and lambda is left at zero.
inline MultiplierResult lagrange_multiplier(const SystemModel& model, const SafetySpec& spec,
                                            const Vector& x, const Vector& theta_hat,
                                            const Vector& u_no, const InputWeight& R,
                                            bool self_triggered) {
  const RowVector grad = spec.barrier_grad(x);
  const Matrix rho = model.rho(x);
  const RowVector L_rho_s = grad * rho;

  MultiplierResult out;
  out.margin_nominal = margin(model, spec, x, theta_hat, u_no, self_triggered ? spec.relax : 1.0);
  out.correction = R.inverse() * L_rho_s.transpose();
  out.r_s_rho = L_rho_s.dot(out.correction);
  if (out.margin_nominal >= 0.0) return out;
  if (out.r_s_rho <= degeneracy_threshold(grad, rho, R)) {
    out.infeasible = true;
    return out;
  }
  out.lambda = std::max(-out.margin_nominal / out.r_s_rho, 0.0);
  return out;
}

struct RobustGainInputs {
  double k1 = 1.0;
  double k3 = 1.0;
  double eta = 2.0;
  double eta_c = 1.0;
};

struct RobustGains {
  double comp_scale = 0.0;
  double alpha_gain = 0.0;
};

/// Compensation scale and class-K gain that make s - eta * V_theta a
/// barrier for an identifier with V_theta in [k1 |e|^2, .] and
/// dV_theta/dt <= -k3 V_theta.
inline RobustGains robust_gains(const RobustGainInputs& in) {
  if (!(in.k1 > 0.0) || !(in.k3 > 0.0))
    throw Error(ErrorKind::ParameterDomain, "k1 and k3 must be positive");
  if (!(in.eta_c > 0.0) || !(in.eta > in.eta_c))
    throw Error(ErrorKind::ParameterDomain, "require eta > eta_c > 0");
  return {1.0 / (4.0 * (in.eta - in.eta_c) * in.k1 * in.k3), in.eta_c * in.k3 / in.eta};
}

/// Inverse of robust_gains for given identifier bounds: the (eta, eta_c)
/// pair that reproduces a chosen (comp_scale, alpha_gain). Needs k3 > alpha_gain.
inline RobustGainInputs design_constants(double comp_scale, double alpha_gain, double k1, double k3) {
  if (!(comp_scale > 0.0) || !(alpha_gain > 0.0) || !(k1 > 0.0) || !(k3 > alpha_gain))
    throw Error(ErrorKind::ParameterDomain, "need comp_scale, alpha_gain, k1 > 0 and k3 > alpha_gain");
  const double eta = 1.0 / (4.0 * comp_scale * k1 * k3 * (1.0 - alpha_gain / k3));
  return {k1, k3, eta, alpha_gain * eta / k3};
}

}  // namespace secl
