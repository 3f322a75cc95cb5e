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

// secl: run presets, write trajectories, compare controller variants.

#include "secl/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace secl;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitInfeasible = 4;

struct Flags {
  std::string preset_pos;
  std::string preset;
  std::string config;
  std::string variant;
  std::string mode;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string trigger_mode;
  std::string refresh;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("preset_name", f.preset_pos, "Preset name (obstacle, selftrig)");
  cmd->add_option("--preset", f.preset, "Preset name (obstacle, selftrig)");
  cmd->add_option("--config", f.config, "JSON config file; overrides the preset")->check(CLI::ExistingFile);
  cmd->add_option("--variant", f.variant, "Controller variant: u1, u2, u3");
  cmd->add_option("--mode", f.mode, "time_triggered or self_triggered");
  cmd->add_option("--dt", f.dt, "Integration step in seconds");
  cmd->add_option("--horizon", f.horizon, "Simulated time in seconds");
  cmd->add_option("--seed", f.seed, "Replay sampling seed (default 42)");
  cmd->add_option("--out-dir", f.out_dir, "Output directory");
  cmd->add_option("--trigger-mode", f.trigger_mode, "monitor or period");
  cmd->add_option("--refresh", f.refresh, "Identifier refresh: on or off");
}

ExperimentConfig resolve(const Flags& f) {
  if (!f.preset_pos.empty() && !f.preset.empty() && f.preset_pos != f.preset)
    throw Error(ErrorKind::Usage, "conflicting presets '" + f.preset_pos + "' and '" + f.preset + "'");
  const std::string preset = !f.preset.empty() ? f.preset : f.preset_pos;
  if (preset.empty() && f.config.empty()) throw Error(ErrorKind::Usage, "need a preset or --config");

  json j = json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Usage, std::string("malformed config: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::Usage, "config must be a JSON object");
  }
  if (!preset.empty() && !j.contains("preset")) j["preset"] = preset;
  ExperimentConfig c = config_from_json(j);

  if (!f.variant.empty()) c.variant = parse_variant(f.variant);
  if (!f.mode.empty()) c.mode = parse_mode(f.mode);
  if (f.dt) c.dt = *f.dt;
  if (f.horizon) c.horizon = *f.horizon;
  if (f.seed) c.seed = *f.seed;
  if (!f.trigger_mode.empty()) c.trigger_mode = parse_trigger_mode(f.trigger_mode);
  if (!f.refresh.empty()) c.refresh = parse_on_off(f.refresh);

  if (!(c.horizon > 0.0)) throw Error(ErrorKind::Usage, "horizon must be positive: empty trajectory");
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Usage, e.detail());
  }
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Usage, "cannot write " + path.string());
  out << text;
}

void write_csv(const fs::path& path, const TrajectoryLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Usage, "cannot write " + path.string());
  write_trajectory_csv(out, log);
}

json describe(const ExperimentConfig& c) {
  return {{"preset", to_string(c.preset)},
          {"mode", to_string(c.mode)},
          {"variant", to_string(c.variant)},
          {"trigger_mode", to_string(c.trigger_mode)},
          {"refresh", c.refresh},
          {"dt", c.dt},
          {"horizon", c.horizon},
          {"seed", c.seed}};
}

int cmd_run(const Flags& f) {
  const ExperimentConfig c = resolve(f);
  const RunResult r = run(c);
  fs::create_directories(f.out_dir);
  write_csv(fs::path(f.out_dir) / "trajectory.csv", r.log);
  json j = metrics_to_json(r.metrics);
  j["config"] = describe(c);
  write_text(fs::path(f.out_dir) / "metrics.json", j.dump(2) + "\n");
  std::cout << "cost " << format_number(r.metrics.cost) << "  min_barrier " << format_number(r.metrics.min_barrier)
            << "  triggers " << r.metrics.trigger_count << "  theta_error "
            << format_number(r.metrics.final_theta_error) << "\n";
  return 0;
}

int cmd_compare(const Flags& f) {
  const ExperimentConfig base = resolve(f);
  const auto set = comparison_set(base);
  std::vector<RunResult> runs;
  const ComparisonReport rep = compare(set, &runs);
  fs::create_directories(f.out_dir);
  for (std::size_t i = 0; i < runs.size(); ++i)
    write_csv(fs::path(f.out_dir) / ("trajectory_" + set[i].first + ".csv"), runs[i].log);
  json j = report_to_json(rep);
  j["config"] = describe(base);
  write_text(fs::path(f.out_dir) / "comparison.json", j.dump(2) + "\n");
  for (const auto& e : rep.entries)
    std::cout << e.label << ": cost " << format_number(e.metrics.cost) << "  min_barrier "
              << format_number(e.metrics.min_barrier) << "  triggers " << e.metrics.trigger_count << "\n";
  if (rep.reduction_factor) std::cout << "reduction " << format_number(*rep.reduction_factor) << "x\n";
  return 0;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Usage:
    case ErrorKind::ParameterDomain: return kExitUsage;
    case ErrorKind::Divergence:
    case ErrorKind::NumericDomain: return kExitDivergence;
    case ErrorKind::Infeasible:
    case ErrorKind::SafetyViolation: return kExitInfeasible;
    case ErrorKind::InternalConsistency: return 1;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety-embedded critic learning simulator"};
  app.require_subcommand(1);
  Flags run_flags, cmp_flags;
  auto* run_cmd = app.add_subcommand("run", "Simulate one configuration");
  auto* cmp_cmd = app.add_subcommand("compare", "Run the variant or sampling-mode comparison for a preset");
  add_common(run_cmd, run_flags);
  add_common(cmp_cmd, cmp_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_flags);
    return cmd_compare(cmp_flags);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
