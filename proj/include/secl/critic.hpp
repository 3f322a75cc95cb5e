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

#include "secl/safety.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <vector>

namespace secl {

/// How kernel values are scaled at each centre.
///
/// raw:               sigma_i = exp(x^T v_i) - 1.
/// center_normalized: sigma_i = exp(-c^T v_i) (exp(x^T v_i) - 1), with c the
///                    point the centres follow. Same span at every centre but
///                    O(1) magnitudes near c, which keeps the weight and
///                    covariance laws stable away from the origin.
enum class KernelScaling { raw, center_normalized };

inline constexpr double kKernelExponentLimit = 50.0;

/// State-following kernels: centre i sits at v_i(c) = c + b_i(c).
struct KernelConfig {
  std::vector<std::function<Vector(const Vector&)>> offsets;
  std::function<double(const Vector&)> shape;
  double radius = 1.0;  // bound on |b_i|
  KernelScaling scaling = KernelScaling::center_normalized;

  int L() const { return static_cast<int>(offsets.size()); }

  Vector center(int i, const Vector& c) const { return c + offsets[static_cast<std::size_t>(i)](c); }
};

/// Three kernels with offsets 0.7 phi(x) d_i, phi(x) = (x^T x + 0.01) / (1 + x^T x).
inline KernelConfig benchmark_kernels(KernelScaling scaling = KernelScaling::center_normalized) {
  KernelConfig cfg;
  cfg.shape = [](const Vector& x) {
    const double q = x.squaredNorm();
    return (q + 0.01) / (1.0 + q);
  };
  const double dirs[3][2] = {{0.0, 1.0}, {0.85, -0.6}, {-0.85, -0.6}};
  for (const auto& d : dirs) {
    Vector dir(2);
    dir << d[0], d[1];
    auto shape = cfg.shape;
    cfg.offsets.push_back([dir, shape](const Vector& x) -> Vector { return 0.7 * shape(x) * dir; });
  }
  cfg.radius = 0.7 * std::sqrt(0.85 * 0.85 + 0.6 * 0.6);
  cfg.scaling = scaling;
  return cfg;
}

struct KernelEval {
  Vector sigma;  // L
  Matrix grad;   // L x n, derivative in x_eval with centres frozen
};

inline double checked_exp(double a) {
  if (!(std::abs(a) <= kKernelExponentLimit))
    throw Error(ErrorKind::NumericDomain, "kernel exponent out of range");
  return std::exp(a);
}

inline KernelEval kernels(const KernelConfig& config, const Vector& x_eval, const Vector& x_center) {
  const int L = config.L();
  const auto n = x_eval.size();
  KernelEval out{Vector(L), Matrix(L, n)};
  for (int i = 0; i < L; ++i) {
    const Vector v = config.center(i, x_center);
    const double a = x_eval.dot(v);
    double e;
    double scale = 1.0;
    if (config.scaling == KernelScaling::raw) {
      e = checked_exp(a);
    } else {
      const double c = x_center.dot(v);
      scale = checked_exp(-c);
      checked_exp(a);
      e = std::exp(a - c);  // scale * exp(a) without the intermediate overflow
    }
    out.sigma(i) = config.scaling == KernelScaling::raw ? e - 1.0 : e - scale;
    out.grad.row(i) = e * v.transpose();
  }
  return out;
}

/// Bounded FIFO of visited states used for Bellman-error extrapolation.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 2000) : capacity_(capacity) {
    if (capacity == 0) throw Error(ErrorKind::ParameterDomain, "replay capacity must be positive");
  }

  void push(const Vector& x) {
    if (states_.size() == capacity_) states_.pop_front();
    states_.push_back(x);
  }

  std::size_t size() const { return states_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return states_.empty(); }
  const Vector& operator[](std::size_t i) const { return states_[i]; }

 private:
  std::size_t capacity_;
  std::deque<Vector> states_;
};

/// N uniform draws with replacement. Empty buffer gives an empty result.
inline std::vector<Vector> sample_replay(const ReplayBuffer& buffer, int N, std::mt19937_64& rng) {
  std::vector<Vector> out;
  if (buffer.empty() || N <= 0) return out;
  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  out.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) out.push_back(buffer[pick(rng)]);
  return out;
}

/// Where replayed Bellman errors place the kernel centres.
enum class ReplayCenter { own, current };

struct CriticState {
  Vector W_hat;
  Matrix Gamma;
  double k_c1 = 1e-3;
  double k_c2 = 1e-3;
  double beta = 2e-3;
  double norm_gain = 1.0;
  double gamma_min = 1e-3;
  double gamma_max = 1e4;
  int N = 3;
  ReplayCenter replay_center = ReplayCenter::own;
  ReplayBuffer replay{2000};
  std::mt19937_64 rng{42};
  int clamp_events = 0;

  void validate() const {
    if (W_hat.size() != Gamma.rows() || Gamma.rows() != Gamma.cols())
      throw Error(ErrorKind::ParameterDomain, "critic weight and covariance sizes disagree");
    if (!(k_c1 > 0.0) || !(k_c2 > 0.0) || !(beta > 0.0) || !(norm_gain > 0.0))
      throw Error(ErrorKind::ParameterDomain, "critic gains must be positive");
    if (!(gamma_min > 0.0) || !(gamma_max > gamma_min))
      throw Error(ErrorKind::ParameterDomain, "need 0 < gamma_min < gamma_max");
    if (N < 0) throw Error(ErrorKind::ParameterDomain, "N must be nonnegative");
  }
};

inline double value(const KernelConfig& config, const CriticState& critic, const Vector& x) {
  return critic.W_hat.dot(kernels(config, x, x).sigma);
}

/// u_no = -R^-1 rho^T grad(sigma)^T W.
inline Vector nominal_control(const SystemModel& model, const KernelConfig& config, const CriticState& critic,
                              const Vector& x, const InputWeight& R) {
  const KernelEval k = kernels(config, x, x);
  return -(R.inverse() * (model.rho(x).transpose() * (k.grad.transpose() * critic.W_hat)));
}

struct SafeControl {
  Vector u;
  Vector u_no;
  double lambda = 0.0;
  double margin_nominal = 0.0;
  bool infeasible = false;
};

/// Nominal control corrected by the closed-form multiplier. The margin is
/// the relaxed one when self_triggered is set.
inline SafeControl safe_control(const SystemModel& model, const SafetySpec& spec, const KernelConfig& config,
                                const CriticState& critic, const Vector& x, const Vector& theta_hat,
                                const InputWeight& R, bool self_triggered = false) {
  SafeControl out;
  out.u_no = nominal_control(model, config, critic, x, R);
  const MultiplierResult mult = lagrange_multiplier(model, spec, x, theta_hat, out.u_no, R, self_triggered);
  out.lambda = mult.lambda;
  out.margin_nominal = mult.margin_nominal;
  out.infeasible = mult.infeasible;
  out.u = out.u_no + mult.lambda * mult.correction;
  return out;
}

struct BellmanTerm {
  double delta = 0.0;
  Vector xi;  // grad(sigma) (omega theta_hat + rho u)
};

/// Bellman error at x with kernels centred at x_center.
inline BellmanTerm bellman_term(const SystemModel& model, const KernelConfig& config, const CriticState& critic,
                                const Vector& x, const Vector& x_center, const Vector& theta_hat,
                                const Vector& u_held, const Matrix& Q, const InputWeight& R) {
  const KernelEval k = kernels(config, x, x_center);
  const Vector f = model.omega(x) * theta_hat + model.rho(x) * u_held;
  BellmanTerm out;
  out.xi = k.grad * f;
  out.delta = critic.W_hat.dot(out.xi) + x.dot(Q * x) + 0.5 * u_held.dot(R.R() * u_held);
  return out;
}

inline double bellman_error(const SystemModel& model, const KernelConfig& config, const CriticState& critic,
                            const Vector& x, const Vector& theta_hat, const Vector& u_held, const Matrix& Q,
                            const InputWeight& R) {
  return bellman_term(model, config, critic, x, x, theta_hat, u_held, Q, R).delta;
}

/// lambda_min of k_c1 xi xi^T / iota^2 + (k_c2/N) sum xi_i xi_i^T / iota_i^2,
/// where the arguments are already normalized (xi / iota).
inline double pe_level(double k_c1, double k_c2, const Vector& xi_n, const std::vector<Vector>& replay_n) {
  Matrix S = k_c1 * xi_n * xi_n.transpose();
  if (!replay_n.empty()) {
    const double w = k_c2 / static_cast<double>(replay_n.size());
    for (const auto& r : replay_n) S += w * r * r.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues().minCoeff());
}

struct CriticStepInfo {
  double delta = 0.0;
  double pe = 0.0;
  bool clamped = false;
};

/// Symmetrize and clamp eigenvalues into [lo, hi]. Returns true if any moved.
inline bool clamp_covariance(Matrix& G, double lo, double hi) {
  G = 0.5 * (G + G.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(G);
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::InternalConsistency, "covariance eigensolve failed");
  Vector ev = eig.eigenvalues();
  if (!ev.allFinite()) throw Error(ErrorKind::InternalConsistency, "non-finite covariance");
  if (ev.minCoeff() >= lo && ev.maxCoeff() <= hi) return false;
  ev = ev.cwiseMax(lo).cwiseMin(hi);
  G = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
  G = 0.5 * (G + G.transpose());
  if (Eigen::LLT<Matrix>(G).info() != Eigen::Success)
    throw Error(ErrorKind::InternalConsistency, "covariance lost positive definiteness");
  return true;
}

/// One Euler step of the normalized least-squares weight and covariance laws
/// with N replayed Bellman errors drawn from the critic's own buffer.
inline CriticStepInfo update(CriticState& critic, const SystemModel& model, const KernelConfig& config,
                             const Vector& x, const Vector& theta_hat, const Vector& u_held, const Matrix& Q,
                             const InputWeight& R, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::ParameterDomain, "dt must be positive");
  const Matrix& G = critic.Gamma;
  auto iota = [&](const Vector& xi) { return std::sqrt(1.0 + critic.norm_gain * xi.squaredNorm()); };

  const BellmanTerm now = bellman_term(model, config, critic, x, x, theta_hat, u_held, Q, R);
  const double io = iota(now.xi);
  Vector grad_w = critic.k_c1 * now.xi * (now.delta / io);
  Matrix shrink = critic.k_c1 * now.xi * now.xi.transpose() / (io * io);

  const std::vector<Vector> draws = sample_replay(critic.replay, critic.N, critic.rng);
  std::vector<Vector> replay_n;
  if (!draws.empty()) {
    const double w = critic.k_c2 / static_cast<double>(draws.size());
    for (const auto& xr : draws) {
      const Vector& centre = critic.replay_center == ReplayCenter::own ? xr : x;
      const BellmanTerm bt = bellman_term(model, config, critic, xr, centre, theta_hat, u_held, Q, R);
      const double ir = iota(bt.xi);
      grad_w += w * bt.xi * (bt.delta / ir);
      shrink += w * bt.xi * bt.xi.transpose() / (ir * ir);
      replay_n.push_back(bt.xi / ir);
    }
  }

  CriticStepInfo info;
  info.delta = now.delta;
  info.pe = pe_level(critic.k_c1, critic.k_c2, now.xi / io, replay_n);

  const Vector dW = -(G * grad_w);
  const Matrix dG = critic.beta * G - G * shrink * G;
  critic.W_hat += dt * dW;
  critic.Gamma += dt * dG;
  info.clamped = clamp_covariance(critic.Gamma, critic.gamma_min, critic.gamma_max);
  if (info.clamped) ++critic.clamp_events;
  if (!critic.W_hat.allFinite()) throw Error(ErrorKind::Divergence, "critic weights became non-finite");
  return info;
}

}  // namespace secl
