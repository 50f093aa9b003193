#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "hslab/runner/config.hpp"
#include "hslab/runner/report.hpp"

namespace hslab::runner {

struct Command {
  std::string name;
  std::string summary;
  std::string tables;  // CSV files and their columns, shown in --help
  std::function<void(const ExperimentConfig&, Report&)> body;
};

const std::vector<Command>& commands();

/// Runs the configured command. Numerical failures become failed checks;
/// an invalid config throws ConfigError.
Report run(const ExperimentConfig& cfg);

/// Library operations ("module::op") invoked by commands since the last reset.
std::set<std::string> operations_used();
void reset_operations();

struct Criterion {
  int id;
  std::string title;
  std::vector<Check> checks;
  bool pass() const;
};

/// The twelve acceptance criteria at their fixed tolerances.
std::vector<Criterion> acceptance(int threads = 1);

}  // namespace hslab::runner
