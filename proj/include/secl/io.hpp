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

#include "secl/sim.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

namespace secl {

using json = nlohmann::json;

/// Shortest-safe text form with 17 significant digits.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

/// t, x1..xn, u1..um, s, lambda, theta1..thetap, W1..WL, triggered
inline void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log) {
  if (log.empty()) throw Error(ErrorKind::Usage, "empty trajectory");
  const auto n = log.states.front().size();
  const auto m = log.controls.front().size();
  const auto p = log.theta_estimates.front().size();
  const auto L = log.critic_weights.front().size();
  os << "t";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x" << i;
  for (Eigen::Index i = 1; i <= m; ++i) os << ",u" << i;
  os << ",s,lambda";
  for (Eigen::Index i = 1; i <= p; ++i) os << ",theta" << i;
  for (Eigen::Index i = 1; i <= L; ++i) os << ",W" << i;
  os << ",triggered\n";
  auto vec = [&os](const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << format_number(v(i));
  };
  for (std::size_t k = 0; k < log.size(); ++k) {
    os << format_number(log.times[k]);
    vec(log.states[k]);
    vec(log.controls[k]);
    os << ',' << format_number(log.barrier_values[k]) << ',' << format_number(log.multiplier_values[k]);
    vec(log.theta_estimates[k]);
    vec(log.critic_weights[k]);
    os << ',' << (log.triggered[k] ? 1 : 0) << '\n';
  }
}

inline json to_json_vector(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json to_json_matrix(const Matrix& M) {
  json a = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) a.push_back(to_json_vector(M.row(r).transpose()));
  return a;
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json metrics_to_json(const RunMetrics& m) {
  json j;
  j["cost"] = m.cost;
  j["min_barrier"] = m.min_barrier;
  j["trigger_count"] = m.trigger_count;
  j["min_inter_event"] = finite_or_null(m.min_inter_event);
  j["final_theta_error"] = m.final_theta_error;
  j["final_theta"] = to_json_vector(m.final_theta);
  j["final_weights"] = to_json_vector(m.final_weights);
  j["final_state"] = to_json_vector(m.final_state);
  j["infeasibility_events"] = m.infeasibility_events;
  j["gamma_clamp_events"] = m.gamma_clamp_events;
  j["safety_violation_events"] = m.safety_violation_events;
  j["refresh_count"] = m.refresh_count;
  j["excitation_time"] = m.excitation_time ? json(*m.excitation_time) : json(nullptr);
  j["pe_infimum"] = finite_or_null(m.pe_infimum);
  j["max_slackness"] = m.max_slackness;
  j["steps"] = m.steps;
  return j;
}

inline json report_to_json(const ComparisonReport& rep) {
  json j;
  json runs = json::object();
  for (const auto& e : rep.entries) runs[e.label] = metrics_to_json(e.metrics);
  j["runs"] = runs;
  j["reduction_factor"] = rep.reduction_factor ? json(*rep.reduction_factor) : json(nullptr);
  return j;
}

// ---- config files -------------------------------------------------------

inline Preset parse_preset(const std::string& s) {
  if (s == "obstacle") return Preset::obstacle;
  if (s == "selftrig") return Preset::selftrig;
  if (s == "custom") return Preset::custom;
  throw Error(ErrorKind::Usage, "unknown preset '" + s + "'");
}

inline Mode parse_mode(const std::string& s) {
  if (s == "time_triggered") return Mode::time_triggered;
  if (s == "self_triggered") return Mode::self_triggered;
  throw Error(ErrorKind::Usage, "unknown mode '" + s + "'");
}

inline Variant parse_variant(const std::string& s) {
  if (s == "u1" || s == "u1_baseline_cbf") return Variant::u1_baseline_cbf;
  if (s == "u2" || s == "u2_rcbf_filter") return Variant::u2_rcbf_filter;
  if (s == "u3" || s == "u3_rcbf_embedded") return Variant::u3_rcbf_embedded;
  throw Error(ErrorKind::Usage, "unknown variant '" + s + "'");
}

inline TriggerMode parse_trigger_mode(const std::string& s) {
  if (s == "monitor") return TriggerMode::monitor;
  if (s == "period") return TriggerMode::period;
  throw Error(ErrorKind::Usage, "unknown trigger mode '" + s + "'");
}

inline bool parse_on_off(const std::string& s) {
  if (s == "on") return true;
  if (s == "off") return false;
  throw Error(ErrorKind::Usage, "expected on or off, got '" + s + "'");
}

namespace detail {

inline Vector json_vector(const json& j, const std::string& key) {
  if (!j.is_array()) throw Error(ErrorKind::Usage, key + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorKind::Usage, key + " must be an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

/// Nested rows, or a number meaning that multiple of the identity.
inline Matrix json_matrix(const json& j, const std::string& key, Eigen::Index dim) {
  if (j.is_number()) return j.get<double>() * Matrix::Identity(dim, dim);
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::Usage, key + " must be a number or nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Matrix M;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vector row = json_vector(j[static_cast<std::size_t>(r)], key);
    if (r == 0) M.resize(rows, row.size());
    if (row.size() != M.cols()) throw Error(ErrorKind::Usage, key + " rows differ in length");
    M.row(r) = row.transpose();
  }
  return M;
}

inline double json_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw Error(ErrorKind::Usage, key + " must be a number");
  return j.get<double>();
}

inline std::string json_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw Error(ErrorKind::Usage, key + " must be a string");
  return j.get<std::string>();
}

inline bool json_bool(const json& j, const std::string& key) {
  if (!j.is_boolean()) throw Error(ErrorKind::Usage, key + " must be true or false");
  return j.get<bool>();
}

inline int json_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw Error(ErrorKind::Usage, key + " must be an integer");
  return j.get<int>();
}

}  // namespace detail

/// Builds a config from a JSON object. Missing keys come from the named
/// preset (obstacle when absent); unknown keys are rejected.
inline ExperimentConfig config_from_json(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw Error(ErrorKind::Usage, "config must be a JSON object");
  Preset preset = Preset::obstacle;
  if (j.contains("preset")) preset = parse_preset(json_string(j.at("preset"), "preset"));
  ExperimentConfig c = preset_config(preset);
  c.preset = preset;

  for (const auto& [key, v] : j.items()) {
    if (key == "preset") continue;
    else if (key == "mode") c.mode = parse_mode(json_string(v, key));
    else if (key == "variant") c.variant = parse_variant(json_string(v, key));
    else if (key == "dt") c.dt = json_number(v, key);
    else if (key == "horizon") c.horizon = json_number(v, key);
    else if (key == "x0") c.x0 = json_vector(v, key);
    else if (key == "Q") c.Q = json_matrix(v, key, 2);
    else if (key == "R") c.R = json_matrix(v, key, 1);
    else if (key == "seed") {
      if (!v.is_number_unsigned()) throw Error(ErrorKind::Usage, "seed must be a nonnegative integer");
      c.seed = v.get<std::uint64_t>();
    }
    else if (key == "strict_infeasibility") c.strict_infeasibility = json_bool(v, key);
    else if (key == "barrier") {
      const std::string b = json_string(v, key);
      if (b == "disc") c.barrier = BarrierKind::disc;
      else if (b == "parabola") c.barrier = BarrierKind::parabola;
      else throw Error(ErrorKind::Usage, "unknown barrier '" + b + "'");
    }
    else if (key == "barrier_center") c.barrier_center = json_vector(v, key);
    else if (key == "barrier_radius") c.barrier_radius = json_number(v, key);
    else if (key == "alpha_gain") c.alpha_gain = json_number(v, key);
    else if (key == "comp_scale") c.comp_scale = json_number(v, key);
    else if (key == "relax") c.relax = json_number(v, key);
    else if (key == "theta0") c.theta0 = json_vector(v, key);
    else if (key == "Gamma_theta") c.Gamma_theta = json_matrix(v, key, 3);
    else if (key == "omega_f_bound") c.omega_f_bound = json_number(v, key);
    else if (key == "refresh") c.refresh = json_bool(v, key);
    else if (key == "excitation_threshold") c.excitation_threshold = json_number(v, key);
    else if (key == "W0") c.W0 = json_vector(v, key);
    else if (key == "Gamma0") c.Gamma0 = json_matrix(v, key, 3);
    else if (key == "k_c1") c.k_c1 = json_number(v, key);
    else if (key == "k_c2") c.k_c2 = json_number(v, key);
    else if (key == "beta") c.beta = json_number(v, key);
    else if (key == "norm_gain") c.norm_gain = json_number(v, key);
    else if (key == "gamma_min") c.gamma_min = json_number(v, key);
    else if (key == "gamma_max") c.gamma_max = json_number(v, key);
    else if (key == "replay_count") c.replay_count = json_int(v, key);
    else if (key == "replay_capacity") c.replay_capacity = json_int(v, key);
    else if (key == "kernel_scaling") {
      const std::string s = json_string(v, key);
      if (s == "raw") c.kernel_scaling = KernelScaling::raw;
      else if (s == "center_normalized") c.kernel_scaling = KernelScaling::center_normalized;
      else throw Error(ErrorKind::Usage, "unknown kernel_scaling '" + s + "'");
    }
    else if (key == "replay_center") {
      const std::string s = json_string(v, key);
      if (s == "own") c.replay_center = ReplayCenter::own;
      else if (s == "current") c.replay_center = ReplayCenter::current;
      else throw Error(ErrorKind::Usage, "unknown replay_center '" + s + "'");
    }
    else if (key == "gate_learning") c.gate_learning = json_bool(v, key);
    else if (key == "trigger_mode") c.trigger_mode = parse_trigger_mode(json_string(v, key));
    else if (key == "mu") c.mu = json_number(v, key);
    else if (key == "pi") c.pi = json_number(v, key);
    else if (key == "d_v") c.d_v = json_number(v, key);
    else if (key == "m_params") {
      const Vector p = json_vector(v, key);
      if (p.size() != 5) throw Error(ErrorKind::Usage, "m_params needs 5 entries");
      for (int i = 0; i < 5; ++i) c.m_params[static_cast<std::size_t>(i)] = p(i);
    }
    else if (key == "l1") c.l1 = json_number(v, key);
    else if (key == "l2") c.l2 = json_number(v, key);
    else if (key == "l3") c.l3 = json_number(v, key);
    else throw Error(ErrorKind::Usage, "unknown config key '" + key + "'");
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Usage, "cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Usage, std::string("malformed config: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace secl
