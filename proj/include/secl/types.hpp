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

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace secl {

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorKind {
  NumericDomain,
  Divergence,
  ParameterDomain,
  Infeasible,
  SafetyViolation,
  InternalConsistency,
  Usage,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NumericDomain: return "numeric-domain";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::ParameterDomain: return "parameter-domain";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::SafetyViolation: return "safety-violation";
    case ErrorKind::InternalConsistency: return "internal-consistency";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

/// Library error. Carries the simulation step index when raised inside a run.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string detail, std::optional<std::int64_t> step = std::nullopt)
      : std::runtime_error(format(kind, detail, step)), kind_(kind), detail_(std::move(detail)), step_(step) {}

  ErrorKind kind() const { return kind_; }
  const std::string& detail() const { return detail_; }
  std::optional<std::int64_t> step() const { return step_; }

  Error at_step(std::int64_t step) const { return Error(kind_, detail_, step); }

 private:
  static std::string format(ErrorKind kind, const std::string& detail, std::optional<std::int64_t> step) {
    std::string msg = std::string(to_string(kind)) + ": " + detail;
    if (step) msg += " (step " + std::to_string(*step) + ")";
    return msg;
  }

  ErrorKind kind_;
  std::string detail_;
  std::optional<std::int64_t> step_;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace secl
