#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hslab::runner {

struct Check {
  std::string name;
  double value = 0;
  double target = 0;
  double tolerance = 0;
  std::string kind;  // "abs", "rel", "max", "min" or "holds"
  bool pass = false;
  std::string note;
};

/// |value − target| ≤ tol.
Check close(std::string name, double value, double target, double tol);
/// |value − target| ≤ tol·|target|.
Check relative(std::string name, double value, double target, double tol);
/// value ≤ bound.
Check at_most(std::string name, double value, double bound);
/// value > bound.
Check above(std::string name, double value, double bound);
Check holds(std::string name, bool ok, std::string note = {});
/// A check whose computation threw.
Check failed(std::string name, const std::string& what);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
};

struct Report {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::vector<Check> checks;
  std::vector<Table> tables;
  nlohmann::json values = nlohmann::json::object();
  double seconds = 0;

  bool passed() const;
  void add(Check c) { checks.push_back(std::move(c)); }
  Table& table(std::string name, std::vector<std::string> columns);
};

/// The report without timing, so identical configs give identical bytes.
nlohmann::json report_json(const Report& r);
std::string csv(const Table& t);

/// Writes <dir>/<command>.json, one <command>_<table>.csv per table and the
/// wall time to <dir>/<command>.timing.json.
void write_report(const Report& r, const std::filesystem::path& dir);

/// One line per check: "PASS name value target tol".
std::string summary(const Report& r);

}  // namespace hslab::runner
