#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "hslab/runner/commands.hpp"

using namespace hslab::runner;
using nlohmann::json;

namespace {

struct Flags {
  std::optional<int> n;
  std::optional<double> s, a, delta, tol, gap, grid_step;
  std::optional<std::string> manifold, a_grid, mu_ladder, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<int> threads;

  void attach(CLI::App* app) {
    app->add_option("--n", n, "dimension n >= 3");
    app->add_option("--s", s, "singularity exponent 0 <= s < 2");
    app->add_option("--manifold", manifold, "sphere[:R] | torus[:R] | perturbed[:cubic] | model JSON file");
    app->add_option("--a", a, "constant potential (solve), start potential (ladders) or h (mass)");
    app->add_option("--a-grid", a_grid, "start:stop:step or comma list");
    app->add_option("--mu-ladder", mu_ladder, "decreasing blow-up scales, e.g. 1e-1,1e-2,1e-3");
    app->add_option("--delta", delta, "ball radius for Pohozaev terms and chart radius of the model");
    app->add_option("--tol", tol, "override every check tolerance");
    app->add_option("--gap", gap, "relative threshold gap for sweeps");
    app->add_option("--grid-step", grid_step, "ln(theta) spacing of the radial grid");
    app->add_option("--out", out, "directory for JSON and CSV reports");
    app->add_option("--seed", seed, "Monte Carlo and randomized-test seed");
    app->add_option("--samples", samples, "Monte Carlo sample count");
    app->add_option("--threads", threads, "worker threads for sweeps and ladders");
  }

  void merge(json& j) const {
    auto put = [&](const char* k, const auto& v) {
      if (v) j[k] = *v;
    };
    put("n", n);
    put("s", s);
    put("manifold", manifold);
    put("a", a);
    put("a_grid", a_grid);
    put("mu_ladder", mu_ladder);
    put("delta", delta);
    put("tol", tol);
    put("gap", gap);
    put("grid_step", grid_step);
    put("out", out);
    put("seed", seed);
    put("samples", samples);
    put("threads", threads);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hardy-Sobolev threshold experiments"};
  app.require_subcommand(0, 1);
  std::string config_file;
  app.add_option("--config", config_file, "JSON config mirroring the flags (flags take precedence)");
  std::map<std::string, Flags> flags;
  for (const auto& c : commands()) {
    auto* sc = app.add_subcommand(c.name, c.summary);
    sc->footer("Tables: " + c.tables);
    flags[c.name].attach(sc);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    json j = json::object();
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ConfigError("$", "cannot read config file '" + config_file + "'");
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("config is not JSON: ") + e.what());
      }
      if (!j.is_object()) throw ConfigError("$", "expected an object");
    }
    const auto subs = app.get_subcommands();
    if (!subs.empty()) {
      j["command"] = subs.front()->get_name();
      flags[subs.front()->get_name()].merge(j);
    }
    if (!j.contains("command")) throw ConfigError("$.command", "no command given");
    const auto cfg = config_from_json(j);
    const auto report = run(cfg);
    std::cout << summary(report);
    if (cfg.command == "acceptance")
      for (const auto& row : report.tables.front().rows)
        std::cout << "criterion " << row[0].dump() << " (" << row[1].get<std::string>() << "): "
                  << (row[4].get<bool>() ? "PASS" : "FAIL") << '\n';
    if (!cfg.out.empty()) write_report(report, cfg.out);
    std::fprintf(stderr, "%s: %s in %.2f s\n", cfg.command.c_str(), report.passed() ? "pass" : "FAIL", report.seconds);
    return report.passed() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error at %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
