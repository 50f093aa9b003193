#include "hslab/runner/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hslab::runner {

namespace {

using nlohmann::json;

double to_number(const std::string& text, const std::string& path) {
  double v = 0;
  const char* b = text.data();
  const char* e = b + text.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  const auto [end, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || end != e || b == e) throw ConfigError(path, "not a number: '" + text + "'");
  if (!std::isfinite(v)) throw ConfigError(path, "not finite: '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "not finite");
  return x;
}

long long integer(const json& v, const std::string& path) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(path, "expected an integer");
  return v.get<long long>();
}

std::string string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> grid(const json& v, const std::string& path) {
  if (v.is_string()) return parse_grid(v.get<std::string>(), path);
  if (!v.is_array()) throw ConfigError(path, "expected an array or a grid string");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

ManifoldKind kind_from(const std::string& k, const std::string& path) {
  if (k == "sphere") return ManifoldKind::Sphere;
  if (k == "torus") return ManifoldKind::Torus;
  if (k == "custom" || k == "perturbed") return ManifoldKind::Custom;
  throw ConfigError(path, "unknown manifold kind '" + k + "'");
}

}  // namespace

std::vector<double> parse_grid(const std::string& text, const std::string& path) {
  std::vector<double> out;
  if (text.find_first_not_of(' ') == std::string::npos) return out;
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError(path, "range grid needs start:stop:step");
    const double a = to_number(parts[0], path), b = to_number(parts[1], path), h = to_number(parts[2], path);
    if (h <= 0) throw ConfigError(path, "grid step must be positive");
    if (b < a) throw ConfigError(path, "grid stop precedes start");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / h + 1e-9)) + 1;
    if (count > 100000) throw ConfigError(path, "grid has more than 100000 points");
    for (std::size_t i = 0; i < count; ++i) out.push_back(a + static_cast<double>(i) * h);
    return out;
  }
  for (const auto& item : split(text, ',')) out.push_back(to_number(item, path));
  return out;
}

ManifoldSpec parse_manifold(const std::string& text, int n, const std::string& path) {
  ManifoldSpec spec;
  spec.n = n;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const bool arg = colon != std::string::npos;
  const double value = arg ? to_number(text.substr(colon + 1), path) : 0.0;
  if (head == "sphere") {
    spec.kind = ManifoldKind::Sphere;
    if (arg) spec.radius = value;
  } else if (head == "torus") {
    spec.kind = ManifoldKind::Torus;
    if (arg) spec.radius = value;
  } else if (head == "perturbed") {
    spec.kind = ManifoldKind::Custom;
    if (arg) spec.cubic = value;
  } else {
    std::ifstream in(text);
    if (!in) throw ConfigError(path, "neither a model name nor a readable file: '" + text + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(path, std::string("model file is not JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError(path, "model file must hold an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string p = path + "." + it.key();
      if (it.key() == "kind") spec.kind = kind_from(string(*it, p), p);
      else if (it.key() == "n") {
        if (integer(*it, p) != n) throw ConfigError(p, "model dimension differs from n");
      } else if (it.key() == "radius") spec.radius = number(*it, p);
      else if (it.key() == "delta") spec.delta = number(*it, p);
      else if (it.key() == "cubic") spec.cubic = number(*it, p);
      else throw ConfigError(p, "unknown key");
    }
    if (!j.contains("kind")) throw ConfigError(path + ".kind", "missing");
  }
  if (!(spec.radius > 0)) throw ConfigError(path, "radius must be positive");
  if (!(spec.delta > 0)) throw ConfigError(path, "chart radius must be positive");
  return spec;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("$", "expected an object");
  ExperimentConfig c;
  bool chart_delta = false;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const std::string p = "$." + k;
    const json& v = *it;
    if (k == "command") c.command = string(v, p);
    else if (k == "n") c.n = static_cast<int>(integer(v, p));
    else if (k == "s") c.s = number(v, p);
    else if (k == "manifold") c.manifold = string(v, p);
    else if (k == "a") c.a = number(v, p);
    else if (k == "a_grid") c.a_grid = grid(v, p);
    else if (k == "mu_ladder") c.mu_ladder = grid(v, p);
    else if (k == "delta") {
      c.delta = number(v, p);
      chart_delta = true;
    } else if (k == "tol") c.tol = number(v, p);
    else if (k == "gap") c.gap = number(v, p);
    else if (k == "grid_step") c.grid_step = number(v, p);
    else if (k == "out") c.out = string(v, p);
    else if (k == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw ConfigError(p, "expected a nonnegative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (k == "samples") {
      const long long m = integer(v, p);
      if (m < 100) throw ConfigError(p, "need at least 100 samples");
      c.samples = static_cast<std::size_t>(m);
    } else if (k == "threads") c.threads = static_cast<int>(integer(v, p));
    else throw ConfigError(p, "unknown key");
  }
  if (c.n < 3 || c.n > kMaxDim) throw ConfigError("$.n", "must lie in [3, " + std::to_string(kMaxDim) + "]");
  if (!(c.s >= 0 && c.s < 2)) throw ConfigError("$.s", "must lie in [0, 2)");
  if (!(c.delta > 0)) throw ConfigError("$.delta", "must be positive");
  if (c.tol && !(*c.tol > 0)) throw ConfigError("$.tol", "must be positive");
  if (!(c.gap > 0 && c.gap < 1)) throw ConfigError("$.gap", "must lie in (0, 1)");
  if (!(c.grid_step > 0 && c.grid_step <= 0.2)) throw ConfigError("$.grid_step", "must lie in (0, 0.2]");
  if (c.threads < 1) throw ConfigError("$.threads", "must be at least 1");
  if (c.a_grid) {
    if (c.a_grid->empty()) throw ConfigError("$.a_grid", "empty grid");
    for (std::size_t i = 1; i < c.a_grid->size(); ++i)
      if (!((*c.a_grid)[i] > (*c.a_grid)[i - 1]))
        throw ConfigError("$.a_grid[" + std::to_string(i) + "]", "grid must be strictly increasing");
  }
  if (j.contains("mu_ladder") && c.mu_ladder.empty()) throw ConfigError("$.mu_ladder", "empty ladder");
  for (std::size_t i = 0; i < c.mu_ladder.size(); ++i) {
    const std::string p = "$.mu_ladder[" + std::to_string(i) + "]";
    if (!(c.mu_ladder[i] > 0 && c.mu_ladder[i] < 1)) throw ConfigError(p, "must lie in (0, 1)");
    if (i > 0 && !(c.mu_ladder[i] < c.mu_ladder[i - 1])) throw ConfigError(p, "ladder must be strictly decreasing");
  }
  c.model = parse_manifold(c.manifold, c.n, "$.manifold");
  if (!chart_delta && c.model.kind != ManifoldKind::Torus) c.model.delta = std::min(c.model.delta, c.model.radius);
  if (chart_delta) c.model.delta = c.delta;
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j = json::object();
  j["command"] = c.command;
  j["n"] = c.n;
  j["s"] = c.s;
  j["manifold"] = c.manifold;
  if (c.a) j["a"] = *c.a;
  if (c.a_grid) j["a_grid"] = *c.a_grid;
  if (!c.mu_ladder.empty()) j["mu_ladder"] = c.mu_ladder;
  j["delta"] = c.delta;
  if (c.tol) j["tol"] = *c.tol;
  j["gap"] = c.gap;
  j["grid_step"] = c.grid_step;
  if (!c.out.empty()) j["out"] = c.out;
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["threads"] = c.threads;
  return j;
}

ExperimentConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("$", "cannot read config file '" + file + "'");
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("config is not JSON: ") + e.what());
  }
}

}  // namespace hslab::runner
