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

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace secl {

struct TriggerParams {
  double mu = 0.5;
  double pi = 0.5;
  double lambda_min_Q = 1.0;
  double chi1 = 0.25;
  double chi2 = 0.5;
  double d_v = 1.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  std::array<double, 5> m_params{10.0, 1.0, 5.0, 5.0, 10.0};
  double R_norm = 1.0;

  /// chi1 = (1-mu)(1-pi) lambda_min(Q), chi2 = (1-mu)(1/pi - 1) lambda_min(Q).
  static TriggerParams from_mu_pi(double mu, double pi, double lambda_min_Q, double d_v, double R_norm) {
    if (!(mu > 0.0 && mu < 1.0) || !(pi > 0.0 && pi < 1.0))
      throw Error(ErrorKind::ParameterDomain, "mu and pi must lie in (0, 1)");
    if (!(lambda_min_Q > 0.0) || !(d_v > 0.0) || !(R_norm > 0.0))
      throw Error(ErrorKind::ParameterDomain, "lambda_min(Q), d_v and |R| must be positive");
    TriggerParams p;
    p.mu = mu;
    p.pi = pi;
    p.lambda_min_Q = lambda_min_Q;
    p.chi1 = (1.0 - mu) * (1.0 - pi) * lambda_min_Q;
    p.chi2 = (1.0 - mu) * (1.0 / pi - 1.0) * lambda_min_Q;
    p.d_v = d_v;
    p.R_norm = R_norm;
    return p;
  }
};

/// Event-triggered stability threshold, evaluated on the live state norm.
inline double f_v_event(const TriggerParams& p, double x_norm) {
  return x_norm * std::sqrt((1.0 - p.mu) * p.lambda_min_Q / (2.0 * p.d_v * p.d_v * p.R_norm));
}

/// Self-triggered stability threshold, a function of the sampled state only.
inline double f_v_self(const TriggerParams& p, double x_sample_norm) {
  return std::sqrt(p.chi1 * x_sample_norm * x_sample_norm / (2.0 * p.d_v * p.d_v * p.R_norm + p.chi2));
}

/// M(e) = p1 e + p2 ln(1 + p3 e / (p4 |x_sample| + p5)).
inline double m_bar(const TriggerParams& p, double e_norm, double x_sample_norm) {
  const auto& c = p.m_params;
  const double den = c[3] * x_sample_norm + c[4];
  if (!(den > 0.0)) throw Error(ErrorKind::ParameterDomain, "M bound denominator must be positive");
  return c[0] * e_norm + c[1] * std::log1p(c[2] * e_norm / den);
}

/// Inverse of m_bar in e_norm by bisection. The log term is concave and
/// below its tangent at zero, which brackets the root between
/// target / (p1 + p2 p3 / den) and target / p1.
inline double m_bar_inverse(const TriggerParams& p, double target, double x_sample_norm) {
  if (!(target >= 0.0)) throw Error(ErrorKind::ParameterDomain, "M inverse target must be nonnegative");
  if (target == 0.0) return 0.0;
  const auto& c = p.m_params;
  if (!(c[0] > 0.0)) throw Error(ErrorKind::ParameterDomain, "p1 must be positive");
  const double den = c[3] * x_sample_norm + c[4];
  double lo = target / (c[0] + c[1] * c[2] / den);
  double hi = target / c[0];
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (m_bar(p, mid, x_sample_norm) < target) lo = mid;
    else hi = mid;
  }
  const double flo = std::abs(m_bar(p, lo, x_sample_norm) - target);
  const double fhi = std::abs(m_bar(p, hi, x_sample_norm) - target);
  return flo <= fhi ? lo : hi;
}

/// Self-triggered safety threshold. Uses the sampled margin nu_d when it
/// exceeds (1 - gamma) alpha(s), otherwise that floor, which stays positive
/// while s(x_sample) > 0.
inline double f_s_self(const SystemModel& model, const SafetySpec& spec, const TriggerParams& p,
                       const Vector& x_sample, const Vector& theta_hat, const Vector& u_held) {
  const double s = spec.barrier(x_sample);
  if (s < 0.0) throw Error(ErrorKind::SafetyViolation, "sampled state outside the safe set");
  const double margin = nu_d(model, spec, x_sample, theta_hat, u_held);
  const double floor = (1.0 - spec.relax) * spec.alpha(s);
  return m_bar_inverse(p, margin >= floor ? margin : floor, x_sample.norm());
}

/// Lower bound on the time for |x - x_sample| to grow from 0 to e_bound.
inline double safe_period(const TriggerParams& p, double e_bound, double x_sample_norm) {
  const double rate = p.l1 + p.l2;
  const double base = p.l1 * x_sample_norm + p.l3;
  if (!(rate > 0.0) || !(base > 0.0))
    throw Error(ErrorKind::ParameterDomain, "safe period needs l1 + l2 > 0 and l1 |x| + l3 > 0");
  return std::log1p(rate * e_bound / base) / rate;
}

/// Lipschitz-based M bound: c_e e + c_T T(e), with
/// c_e = d1 |theta| + d2 |u_d| + d3 k3 eta_c / eta and
/// c_T = (eta - eta_c) k1 k3^2 |theta_err|^2.
struct TheoreticalMBound {
  double d1 = 0.0, d2 = 0.0, d3 = 0.0;
  double theta_bound = 0.0;
  double u_bound = 0.0;
  double theta_err_bound = 0.0;
  RobustGainInputs gains;

  double operator()(const TriggerParams& p, double e_norm, double x_sample_norm) const {
    const double ce = d1 * theta_bound + d2 * u_bound + d3 * gains.k3 * gains.eta_c / gains.eta;
    const double cT = (gains.eta - gains.eta_c) * gains.k1 * gains.k3 * gains.k3 * theta_err_bound * theta_err_bound;
    return ce * e_norm + cT * safe_period(p, e_norm, x_sample_norm);
  }
};

enum class TriggerMode { monitor, period };

/// Quantities frozen at the last sampling instant.
struct TriggerState {
  double t_j = 0.0;
  Vector x_sample;
  Vector theta_at_sample;
  Vector u_held;
  double lambda_held = 0.0;
  double nu_d_at_sample = 0.0;
  double threshold_v = 0.0;
  double threshold_s = 0.0;
  double next_time = 0.0;  // period mode only
  long trigger_count = 0;
  double min_interval = std::numeric_limits<double>::infinity();

  double threshold() const { return std::min(threshold_v, threshold_s); }

  /// Book-keeping for a new sampling instant.
  void record(double t) {
    if (trigger_count > 0) min_interval = std::min(min_interval, t - t_j);
    t_j = t;
    ++trigger_count;
  }
};

/// Strict comparison of the sampling error against the frozen thresholds.
inline bool should_trigger(const TriggerState& state, const TriggerParams&, const Vector& x_now) {
  return (x_now - state.x_sample).norm() > state.threshold();
}

}  // namespace secl
