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

#include "secl/critic.hpp"
#include "secl/identifier.hpp"
#include "secl/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace secl {

enum class Preset { obstacle, selftrig, custom };
enum class Mode { time_triggered, self_triggered };
enum class Variant { u1_baseline_cbf, u2_rcbf_filter, u3_rcbf_embedded };
enum class BarrierKind { disc, parabola };

inline const char* to_string(Preset p) {
  switch (p) {
    case Preset::obstacle: return "obstacle";
    case Preset::selftrig: return "selftrig";
    case Preset::custom: return "custom";
  }
  return "custom";
}

inline const char* to_string(Mode m) {
  return m == Mode::time_triggered ? "time_triggered" : "self_triggered";
}

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::u1_baseline_cbf: return "u1";
    case Variant::u2_rcbf_filter: return "u2";
    case Variant::u3_rcbf_embedded: return "u3";
  }
  return "u3";
}

inline const char* to_string(TriggerMode m) { return m == TriggerMode::monitor ? "monitor" : "period"; }

inline const char* to_string(BarrierKind b) { return b == BarrierKind::disc ? "disc" : "parabola"; }

/// Everything a closed-loop run depends on. Gains are grouped the way the
/// modules consume them; matrices that are scaled identities in both
/// presets are stored as full matrices so custom configs can override them.
struct ExperimentConfig {
  Preset preset = Preset::custom;
  Mode mode = Mode::time_triggered;
  Variant variant = Variant::u3_rcbf_embedded;
  double dt = 1e-3;
  double horizon = 15.0;
  Vector x0;
  Matrix Q;
  Matrix R;
  std::uint64_t seed = 42;
  bool strict_infeasibility = false;

  // safety
  BarrierKind barrier = BarrierKind::disc;
  Vector barrier_center;
  double barrier_radius = 1.0;
  double alpha_gain = 1.0;
  double comp_scale = 0.0;
  double relax = 1.0;

  // identifier
  Vector theta0;
  Matrix Gamma_theta;
  double omega_f_bound = 10.0;
  bool refresh = false;
  double excitation_threshold = 0.1;

  // critic
  Vector W0;
  Matrix Gamma0;
  double k_c1 = 1e-3;
  double k_c2 = 1e-3;
  double beta = 2e-3;
  double norm_gain = 1.0;
  double gamma_min = 1e-3;
  double gamma_max = 1e4;
  int replay_count = 3;
  int replay_capacity = 2000;
  KernelScaling kernel_scaling = KernelScaling::center_normalized;
  ReplayCenter replay_center = ReplayCenter::own;
  bool gate_learning = false;  // learn only at sampling instants

  // trigger
  TriggerMode trigger_mode = TriggerMode::monitor;
  double mu = 0.5;
  double pi = 0.5;
  double d_v = 1.0;
  std::array<double, 5> m_params{10.0, 1.0, 5.0, 5.0, 10.0};
  std::optional<double> l1, l2, l3;  // estimated per sample when unset

  std::int64_t steps() const { return static_cast<std::int64_t>(std::llround(horizon / dt)); }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::ParameterDomain, "dt must be positive");
    if (!(horizon >= 0.0) || !std::isfinite(horizon))
      throw Error(ErrorKind::ParameterDomain, "horizon must be nonnegative");
    if (std::abs(static_cast<double>(steps()) * dt - horizon) > 1e-9 * std::max(1.0, horizon))
      throw Error(ErrorKind::ParameterDomain, "horizon must be a multiple of dt");
    if (x0.size() != 2) throw Error(ErrorKind::ParameterDomain, "x0 must have 2 entries");
    if (Q.rows() != 2 || Q.cols() != 2) throw Error(ErrorKind::ParameterDomain, "Q must be 2 x 2");
    if (!Q.isApprox(Q.transpose(), 1e-12) || Eigen::LLT<Matrix>(Q).info() != Eigen::Success)
      throw Error(ErrorKind::ParameterDomain, "Q must be symmetric positive definite");
    if (R.rows() != 1 || R.cols() != 1) throw Error(ErrorKind::ParameterDomain, "R must be 1 x 1");
    if (theta0.size() != 3) throw Error(ErrorKind::ParameterDomain, "theta0 must have 3 entries");
    if (Gamma_theta.rows() != 3 || Gamma_theta.cols() != 3 ||
        Eigen::LLT<Matrix>(Gamma_theta).info() != Eigen::Success)
      throw Error(ErrorKind::ParameterDomain, "Gamma_theta must be 3 x 3 positive definite");
    if (W0.size() != 3 || Gamma0.rows() != 3 || Gamma0.cols() != 3)
      throw Error(ErrorKind::ParameterDomain, "critic needs 3 weights and a 3 x 3 covariance");
    if (barrier == BarrierKind::disc && (barrier_center.size() != 2 || !(barrier_radius > 0.0)))
      throw Error(ErrorKind::ParameterDomain, "disc barrier needs a 2-d centre and positive radius");
    if (replay_capacity < 1 || replay_count < 0)
      throw Error(ErrorKind::ParameterDomain, "replay capacity must be positive and count nonnegative");
    if (!(omega_f_bound > 0.0) || !(excitation_threshold > 0.0))
      throw Error(ErrorKind::ParameterDomain, "identifier bounds must be positive");
  }
};

inline ExperimentConfig base_config() {
  ExperimentConfig c;
  c.Q = Matrix::Identity(2, 2);
  c.R = Matrix::Identity(1, 1);
  c.theta0 = Vector::Zero(3);
  c.Gamma_theta = 100.0 * Matrix::Identity(3, 3);
  c.W0 = Vector::Constant(3, 0.1);
  c.Gamma0 = 10.0 * Matrix::Identity(3, 3);
  return c;
}

/// Obstacle avoidance, time-triggered, full pipeline.
inline ExperimentConfig obstacle_preset() {
  ExperimentConfig c = base_config();
  c.preset = Preset::obstacle;
  c.x0 = Vector(2);
  c.x0 << -2.0, -3.0;
  c.barrier = BarrierKind::disc;
  c.barrier_center = Vector(2);
  c.barrier_center << -0.5, -1.5;
  c.barrier_radius = 1.0;
  c.alpha_gain = 8.0;
  c.comp_scale = 1.0 / 5.0;
  c.relax = 1.0;
  c.omega_f_bound = 20.0;
  c.refresh = false;
  c.k_c1 = 1e-3;
  c.k_c2 = 1e-3;
  c.beta = 2e-3;
  c.mode = Mode::time_triggered;
  return c;
}

/// Parabolic wall, self-triggered sampling.
inline ExperimentConfig selftrig_preset() {
  ExperimentConfig c = base_config();
  c.preset = Preset::selftrig;
  c.x0 = Vector(2);
  c.x0 << -3.2, -1.0;
  c.barrier = BarrierKind::parabola;
  c.alpha_gain = 6.0;
  c.comp_scale = 1.0 / 1.2;
  c.relax = 0.8;
  c.omega_f_bound = 10.0;
  c.refresh = true;
  c.k_c1 = 1e-4;
  c.k_c2 = 1e-4;
  c.beta = 1e-4;
  c.mode = Mode::self_triggered;
  return c;
}

inline ExperimentConfig preset_config(Preset p) {
  switch (p) {
    case Preset::obstacle: return obstacle_preset();
    case Preset::selftrig: return selftrig_preset();
    case Preset::custom: break;
  }
  return obstacle_preset();
}

/// Barrier and gains actually used by the controller. u1 drops the
/// compensation term; time-triggered runs use the unrelaxed constraint.
inline SafetySpec effective_safety(const ExperimentConfig& c) {
  SafetySpec spec = c.barrier == BarrierKind::disc ? disc_obstacle(c.barrier_center, c.barrier_radius)
                                                    : parabolic_wall();
  spec.alpha_gain = c.alpha_gain;
  spec.comp_scale = c.variant == Variant::u1_baseline_cbf ? 0.0 : c.comp_scale;
  spec.relax = c.mode == Mode::self_triggered ? c.relax : 1.0;
  spec.validate();
  return spec;
}

inline TriggerParams trigger_params(const ExperimentConfig& c) {
  Eigen::SelfAdjointEigenSolver<Matrix> eq(c.Q, Eigen::EigenvaluesOnly);
  TriggerParams p = TriggerParams::from_mu_pi(c.mu, c.pi, eq.eigenvalues().minCoeff(), c.d_v, InputWeight(c.R).norm());
  p.m_params = c.m_params;
  if (c.l1) p.l1 = *c.l1;
  if (c.l2) p.l2 = *c.l2;
  if (c.l3) p.l3 = *c.l3;
  return p;
}

struct IntervalConstants {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
};

/// l1 = sup |omega(x) theta_hat| / |x|, l2 = d_v sup |rho|, l3 = sup |rho| u_max,
/// all sampled on a polar grid of the disc of the given radius.
inline IntervalConstants estimate_interval_constants(const SystemModel& model, const Vector& theta_hat,
                                                     double radius, double d_v, double u_max) {
  IntervalConstants out;
  double rho_sup = 0.0;
  constexpr int kRings = 12;
  constexpr int kRays = 32;
  for (int r = 1; r <= kRings; ++r) {
    const double rad = radius * r / kRings;
    for (int a = 0; a < kRays; ++a) {
      const double ang = 2.0 * std::numbers::pi * a / kRays;
      Vector x(2);
      x << rad * std::cos(ang), rad * std::sin(ang);
      out.l1 = std::max(out.l1, (model.omega(x) * theta_hat).norm() / rad);
      rho_sup = std::max(rho_sup, model.rho(x).norm());
    }
  }
  out.l2 = d_v * rho_sup;
  out.l3 = rho_sup * u_max;
  return out;
}

struct RunMetrics {
  double cost = 0.0;
  double min_barrier = std::numeric_limits<double>::infinity();
  long trigger_count = 0;
  double min_inter_event = std::numeric_limits<double>::infinity();
  double final_theta_error = 0.0;  // infinity norm
  Vector final_weights;
  Vector final_theta;
  Vector final_state;
  long infeasibility_events = 0;
  long gamma_clamp_events = 0;
  long safety_violation_events = 0;
  int refresh_count = 0;
  std::optional<double> excitation_time;
  double pe_infimum = std::numeric_limits<double>::infinity();  // over t >= 1 s
  double max_slackness = 0.0;  // |lambda nu(u)| / (1 + |nu(u_no)|) at sampling instants
  std::int64_t steps = 0;
};

/// Per-step quantities not in the trajectory log.
struct RunDiagnostics {
  std::vector<double> v_theta;      // 1/2 e^T Gamma_theta^-1 e with the true parameter
  std::vector<double> identifier_rate;
  std::vector<double> threshold;    // frozen sampling-error threshold (self-triggered)
  std::vector<double> sample_error; // |x - x_sample|
  std::vector<double> slackness;    // per sampling instant
  std::vector<Vector> nominal_controls;
};

struct RunResult {
  ExperimentConfig config;
  TrajectoryLog log;
  RunMetrics metrics;
  RunDiagnostics diagnostics;
};

/// Trapezoidal integral of x^T Q x + 1/2 u^T R u over the logged grid.
inline double cost(const TrajectoryLog& log, const Matrix& Q, const Matrix& R) {
  if (log.empty()) throw Error(ErrorKind::Usage, "empty trajectory");
  auto l = [&](std::size_t k) {
    const Vector& x = log.states[k];
    const Vector& u = log.controls[k];
    return x.dot(Q * x) + 0.5 * u.dot(R * u);
  };
  double total = 0.0;
  for (std::size_t k = 1; k < log.size(); ++k)
    total += 0.5 * (log.times[k] - log.times[k - 1]) * (l(k - 1) + l(k));
  return total;
}

namespace detail {

/// Closed-loop state shared by the steps of one run.
struct Loop {
  const ExperimentConfig& cfg;
  SystemModel model = benchmark_system();
  SafetySpec spec;
  KernelConfig kcfg;
  InputWeight R;
  TriggerParams tparams;
  IdentifierState ident;
  CriticState critic;
  TriggerState trig;
  Vector u_no_held;
  RunMetrics metrics;
  RunDiagnostics diag;
  double u_max = 0.0;
  bool self_triggered = false;

  explicit Loop(const ExperimentConfig& c) : cfg(c) {
    spec = effective_safety(c);
    kcfg = benchmark_kernels(c.kernel_scaling);
    R = InputWeight(c.R);
    tparams = trigger_params(c);
    self_triggered = c.mode == Mode::self_triggered;
    ident = IdentifierState::init(model, c.x0, c.theta0, c.Gamma_theta, c.omega_f_bound, c.refresh);
    critic.W_hat = c.W0;
    critic.Gamma = c.Gamma0;
    critic.k_c1 = c.k_c1;
    critic.k_c2 = c.k_c2;
    critic.beta = c.beta;
    critic.norm_gain = c.norm_gain;
    critic.gamma_min = c.gamma_min;
    critic.gamma_max = c.gamma_max;
    critic.N = c.replay_count;
    critic.replay_center = c.replay_center;
    critic.replay = ReplayBuffer(static_cast<std::size_t>(c.replay_capacity));
    critic.rng.seed(c.seed);
    critic.validate();
  }

  /// Recompute control, multiplier and thresholds from the sample x at t.
  void sample(const Vector& x, double t, std::int64_t k) {
    const SafeControl sc = safe_control(model, spec, kcfg, critic, x, ident.theta_hat, R, self_triggered);
    if (sc.infeasible) {
      ++metrics.infeasibility_events;
      if (cfg.strict_infeasibility)
        throw Error(ErrorKind::Infeasible, "safety constraint cannot be enforced", k);
    }
    trig.record(t);
    trig.x_sample = x;
    trig.theta_at_sample = ident.theta_hat;
    trig.u_held = sc.u;
    trig.lambda_held = sc.lambda;
    u_no_held = sc.u_no;
    u_max = std::max(u_max, sc.u.norm());

    const double m_corr = margin(model, spec, x, ident.theta_hat, sc.u, spec.relax);
    trig.nu_d_at_sample = m_corr;
    const double slack = std::abs(sc.lambda * m_corr) / (1.0 + std::abs(sc.margin_nominal));
    diag.slackness.push_back(slack);
    metrics.max_slackness = std::max(metrics.max_slackness, slack);

    if (!self_triggered) return;
    const double xn = x.norm();
    trig.threshold_v = f_v_self(tparams, xn);
    try {
      trig.threshold_s = f_s_self(model, spec, tparams, x, ident.theta_hat, sc.u);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SafetyViolation) throw;
      ++metrics.safety_violation_events;
      trig.threshold_s = 0.0;
    }
    if (cfg.trigger_mode == TriggerMode::period) {
      TriggerParams p = tparams;
      if (!cfg.l1 || !cfg.l2 || !cfg.l3) {
        const IntervalConstants lc =
            estimate_interval_constants(model, ident.theta_hat, 1.5 * cfg.x0.norm(), cfg.d_v, u_max);
        if (!cfg.l1) p.l1 = lc.l1;
        if (!cfg.l2) p.l2 = lc.l2;
        if (!cfg.l3) p.l3 = lc.l3;
      }
      const double T = std::min(safe_period(p, trig.threshold_v, xn), safe_period(p, trig.threshold_s, xn));
      trig.next_time = t + T;
    }
  }

  bool due(const Vector& x, double t) const {
    if (!self_triggered) return true;
    if (cfg.trigger_mode == TriggerMode::period) return t >= trig.next_time - 1e-12;
    return should_trigger(trig, tparams, x);
  }
};

}  // namespace detail

/// Closed-loop simulation on the grid t_k = k dt, k = 0..horizon/dt.
///
/// Row k logs the state, the control held over [t_k, t_k+1) and the
/// estimates after the step-k updates. Each step advances the plant under
/// the true parameter, integrates the identifier at the left point, pushes
/// the new state to replay, updates the critic with the held control and
/// then resamples if due. The final grid point is logged but never sampled.
inline RunResult run(const ExperimentConfig& config) {
  config.validate();
  RunResult res;
  res.config = config;
  detail::Loop loop(config);
  const auto K = config.steps();
  const double dt = config.dt;
  TrajectoryLog& log = res.log;
  RunMetrics& m = loop.metrics;
  ExcitationMonitor excite{config.excitation_threshold, std::nullopt};

  Vector x = config.x0;
  bool triggered = true;
  try {
    loop.sample(x, 0.0, 0);
  } catch (const Error& e) {
    if (e.step()) throw;
    throw e.at_step(0);
  }

  auto record = [&](std::int64_t k) {
    const double t = static_cast<double>(k) * dt;
    const double s = loop.spec.barrier(x);
    log.times.push_back(t);
    log.states.push_back(x);
    log.controls.push_back(loop.trig.u_held);
    log.barrier_values.push_back(s);
    log.multiplier_values.push_back(loop.trig.lambda_held);
    log.theta_estimates.push_back(loop.ident.theta_hat);
    log.critic_weights.push_back(loop.critic.W_hat);
    log.triggered.push_back(triggered);
    if (triggered) log.trigger_instants.push_back(t);
    res.diagnostics.v_theta.push_back(parameter_lyapunov(loop.ident, loop.model.theta_true));
    res.diagnostics.identifier_rate.push_back(identifier_rate(loop.ident));
    res.diagnostics.threshold.push_back(loop.self_triggered ? loop.trig.threshold() : 0.0);
    res.diagnostics.sample_error.push_back((x - loop.trig.x_sample).norm());
    res.diagnostics.nominal_controls.push_back(loop.u_no_held);
    m.min_barrier = std::min(m.min_barrier, s);
  };

  for (std::int64_t k = 0;; ++k) {
    record(k);
    if (k == K) break;
    const double t = static_cast<double>(k) * dt;
    try {
      const Vector x_next = step_rk4(loop.model, x, loop.trig.u_held, loop.model.theta_true, dt, k);
      const bool learn = !config.gate_learning || triggered;
      if (learn) {
        integrate_filters(loop.ident, loop.model, x, loop.trig.u_held, config.x0, dt, t, &x_next);
        update_theta(loop.ident, dt);
      }
      x = x_next;
      excite.observe(loop.ident, t + dt);
      if (learn) {
        loop.critic.replay.push(x);
        const Vector& u_learn =
            config.variant == Variant::u2_rcbf_filter ? loop.u_no_held : loop.trig.u_held;
        const CriticStepInfo ci = update(loop.critic, loop.model, loop.kcfg, x, loop.ident.theta_hat, u_learn,
                                         config.Q, loop.R, dt);
        if (t + dt >= 1.0) m.pe_infimum = std::min(m.pe_infimum, ci.pe);
      }
      triggered = k + 1 < K && loop.due(x, t + dt);
      if (triggered) loop.sample(x, t + dt, k + 1);
    } catch (const Error& e) {
      if (e.step()) throw;
      throw e.at_step(k);
    }
  }

  m.cost = cost(log, config.Q, config.R);
  m.trigger_count = loop.trig.trigger_count;
  m.min_inter_event = loop.trig.min_interval;
  m.final_theta = loop.ident.theta_hat;
  m.final_theta_error = (loop.ident.theta_hat - loop.model.theta_true).cwiseAbs().maxCoeff();
  m.final_weights = loop.critic.W_hat;
  m.final_state = x;
  m.gamma_clamp_events = loop.critic.clamp_events;
  m.refresh_count = loop.ident.refresh_count;
  m.excitation_time = excite.first_crossing;
  m.steps = K;
  res.metrics = m;
  return res;
}

/// Runs independent experiments concurrently; results keep input order.
inline std::vector<RunResult> run_all(const std::vector<ExperimentConfig>& configs) {
  std::vector<std::future<RunResult>> jobs;
  jobs.reserve(configs.size());
  for (const auto& c : configs) jobs.push_back(std::async(std::launch::async, [c] { return run(c); }));
  std::vector<RunResult> out;
  out.reserve(configs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

struct ComparisonEntry {
  std::string label;
  RunMetrics metrics;
};

struct ComparisonReport {
  std::vector<ComparisonEntry> entries;
  std::optional<double> reduction_factor;  // time-triggered count / self-triggered count
};

/// Controller variants for the obstacle preset, sampling modes otherwise.
inline std::vector<std::pair<std::string, ExperimentConfig>> comparison_set(const ExperimentConfig& base) {
  std::vector<std::pair<std::string, ExperimentConfig>> out;
  if (base.preset == Preset::selftrig) {
    for (Mode md : {Mode::time_triggered, Mode::self_triggered}) {
      ExperimentConfig c = base;
      c.mode = md;
      out.emplace_back(to_string(md), c);
    }
  } else {
    for (Variant v : {Variant::u1_baseline_cbf, Variant::u2_rcbf_filter, Variant::u3_rcbf_embedded}) {
      ExperimentConfig c = base;
      c.variant = v;
      out.emplace_back(to_string(v), c);
    }
  }
  return out;
}

inline ComparisonReport compare(const std::vector<std::pair<std::string, ExperimentConfig>>& set,
                                std::vector<RunResult>* results = nullptr) {
  std::vector<ExperimentConfig> configs;
  for (const auto& [label, c] : set) configs.push_back(c);
  std::vector<RunResult> runs = run_all(configs);
  ComparisonReport rep;
  std::optional<long> tt, st;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    rep.entries.push_back({set[i].first, runs[i].metrics});
    if (configs[i].mode == Mode::time_triggered) tt = runs[i].metrics.trigger_count;
    else st = runs[i].metrics.trigger_count;
  }
  if (tt && st && *st > 0) rep.reduction_factor = static_cast<double>(*tt) / static_cast<double>(*st);
  if (results) *results = std::move(runs);
  return rep;
}

}  // namespace secl
