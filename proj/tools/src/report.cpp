#include "hslab/runner/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "hslab/error.hpp"

namespace hslab::runner {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string cell(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number()) return fmt(v.get<double>());
  if (v.is_null()) return "nan";
  return v.dump();
}

// JSON has no NaN; non-finite numbers become null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

}  // namespace

Check close(std::string name, double value, double target, double tol) {
  return {std::move(name), value, target, tol, "abs", std::abs(value - target) <= tol, {}};
}

Check relative(std::string name, double value, double target, double tol) {
  return {std::move(name), value, target, tol, "rel", std::abs(value - target) <= tol * std::abs(target), {}};
}

Check at_most(std::string name, double value, double bound) {
  return {std::move(name), value, bound, 0.0, "max", value <= bound, {}};
}

Check above(std::string name, double value, double bound) {
  return {std::move(name), value, bound, 0.0, "min", value > bound, {}};
}

Check holds(std::string name, bool ok, std::string note) {
  return {std::move(name), ok ? 1.0 : 0.0, 1.0, 0.0, "holds", ok, std::move(note)};
}

Check failed(std::string name, const std::string& what) {
  return {std::move(name), std::nan(""), std::nan(""), 0.0, "holds", false, what};
}

bool Report::passed() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

Table& Report::table(std::string name, std::vector<std::string> columns) {
  tables.push_back({std::move(name), std::move(columns), {}});
  return tables.back();
}

json report_json(const Report& r) {
  json j = json::object();
  j["command"] = r.command;
  j["config"] = r.config;
  j["passed"] = r.passed();
  json checks = json::array();
  for (const auto& c : r.checks) {
    json e = {{"name", c.name}, {"value", num(c.value)}, {"target", num(c.target)},
              {"tolerance", c.tolerance}, {"kind", c.kind}, {"pass", c.pass}};
    if (!c.note.empty()) e["note"] = c.note;
    checks.push_back(e);
  }
  j["checks"] = checks;
  j["values"] = r.values;
  json tables = json::array();
  for (const auto& t : r.tables) {
    json rows = json::array();
    for (const auto& row : t.rows) {
      json o = json::object();
      for (std::size_t i = 0; i < t.columns.size() && i < row.size(); ++i) {
        const auto& v = row[i];
        o[t.columns[i]] = (v.is_number_float() && !std::isfinite(v.get<double>())) ? json(nullptr) : v;
      }
      rows.push_back(o);
    }
    tables.push_back({{"name", t.name}, {"rows", rows}});
  }
  j["tables"] = tables;
  return j;
}

std::string csv(const Table& t) {
  std::string s;
  for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
  s += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + cell(row[i]);
    s += '\n';
  }
  return s;
}

void write_report(const Report& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / (r.command + ".json"), report_json(r).dump(2) + "\n");
  for (const auto& t : r.tables) write_file(dir / (r.command + "_" + t.name + ".csv"), csv(t));
  write_file(dir / (r.command + ".timing.json"), json{{"command", r.command}, {"seconds", r.seconds}}.dump(2) + "\n");
}

std::string summary(const Report& r) {
  std::string s;
  for (const auto& c : r.checks) {
    s += (c.pass ? "PASS " : "FAIL ") + c.name + "  value=" + short_fmt(c.value);
    if (c.kind != "holds") s += " target=" + short_fmt(c.target);
    if (c.kind == "abs" || c.kind == "rel") s += " tol=" + short_fmt(c.tolerance) + " (" + c.kind + ")";
    else if (c.kind == "max") s += " (upper bound)";
    else if (c.kind == "min") s += " (strict lower bound)";
    if (!c.note.empty()) s += "  [" + c.note + "]";
    s += '\n';
  }
  return s;
}

}  // namespace hslab::runner
