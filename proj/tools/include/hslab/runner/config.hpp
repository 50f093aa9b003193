#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hslab/error.hpp"
#include "hslab/geometry.hpp"

namespace hslab::runner {

/// Rejected configuration; `path` points into the JSON document ("$.a_grid").
struct ConfigError : InvalidArgument {
  ConfigError(std::string path, const std::string& what)
      : InvalidArgument(path + ": " + what), path(std::move(path)) {}
  std::string path;
};

struct ExperimentConfig {
  std::string command;
  int n = 4;
  double s = 1.0;
  std::string manifold = "sphere:1";  // as given; resolved into `model`
  ManifoldSpec model{};
  std::optional<double> a;
  std::optional<std::vector<double>> a_grid;
  std::vector<double> mu_ladder;
  double delta = 1.0;
  std::optional<double> tol;  // overrides every check tolerance when set
  double gap = 1e-3;          // relative threshold gap for sweeps
  double grid_step = 0.01;    // ln θ spacing of the radial grid
  std::string out;            // report directory; empty prints only
  std::uint64_t seed = 20240611;
  std::size_t samples = 200000;
  int threads = 1;
};

/// "0.5:2.5:0.1" (inclusive range) or "0.5,1,1.5". An empty string is an empty grid.
std::vector<double> parse_grid(const std::string& text, const std::string& path);

/// sphere[:R], torus[:side radius], perturbed[:cubic], or a JSON model file.
ManifoldSpec parse_manifold(const std::string& text, int n, const std::string& path);

/// Keys mirror the long flag names with '-' replaced by '_'. Grids may be arrays
/// or grid strings. Unknown keys and out-of-range values throw ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

ExperimentConfig load_config(const std::string& file);

}  // namespace hslab::runner
