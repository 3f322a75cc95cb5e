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

// Runs the obstacle preset with each controller variant and prints a
// short summary, then writes the full-pipeline trajectory to stdout as CSV
// when given --csv.

#include "secl/io.hpp"

#include <cstring>
#include <iostream>

int main(int argc, char** argv) {
  using namespace secl;
  const bool csv = argc > 1 && std::strcmp(argv[1], "--csv") == 0;

  const auto set = comparison_set(obstacle_preset());
  std::vector<RunResult> runs;
  const ComparisonReport rep = compare(set, &runs);

  if (csv) {
    write_trajectory_csv(std::cout, runs.back().log);
    return 0;
  }
  for (const auto& e : rep.entries) {
    std::cout << e.label << "\n"
              << "  cost          " << format_number(e.metrics.cost) << "\n"
              << "  min barrier   " << format_number(e.metrics.min_barrier) << "\n"
              << "  theta error   " << format_number(e.metrics.final_theta_error) << "\n";
  }
  return 0;
}
