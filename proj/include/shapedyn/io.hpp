#pragma once

// Run configuration (JSON), CSV output with shortest round-trip doubles, and
// JSON reports.

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shapedyn/checks.hpp"
#include "shapedyn/dynamics_absolute.hpp"
#include "shapedyn/error.hpp"
#include "shapedyn/integrate.hpp"
#include "shapedyn/potential.hpp"
#include "shapedyn/shape_reduced.hpp"

namespace shapedyn::io {

using json = nlohmann::json;

/// Raised for unreadable or invalid configuration documents.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw ConfigError("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << format_double(v[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct RunConfig {
  MassVector masses;
  std::optional<MassVector> reduced_masses;  // compare only
  PotentialSpec potential;
  IntegratorConfig integrator;
  double duration = 1.0;
  std::optional<AbsoluteState> absolute;
  std::optional<ShapeState3> shape;
};

namespace detail {
inline double number(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  if (!j[key].is_number()) throw ConfigError(std::string("key '") + key + "' must be a number");
  return j[key].get<double>();
}

inline double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

inline Points vectors(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) throw ConfigError(std::string("key '") + key + "' must be an array");
  Points out;
  for (const auto& v : j[key]) {
    if (!v.is_array() || v.size() != 3) throw ConfigError(std::string("entries of '") + key + "' must be 3-vectors");
    Vec3 x;
    for (int k = 0; k < 3; ++k) {
      if (!v[static_cast<std::size_t>(k)].is_number()) throw ConfigError("vector components must be numbers");
      x[k] = v[static_cast<std::size_t>(k)].get<double>();
    }
    out.push_back(x);
  }
  return out;
}

inline MassVector masses(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) throw ConfigError(std::string("key '") + key + "' must be an array");
  std::vector<double> m;
  for (const auto& v : j[key]) {
    if (!v.is_number()) throw ConfigError("masses must be numbers");
    m.push_back(v.get<double>());
  }
  try {
    return MassVector(std::move(m));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}
}  // namespace detail

inline RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  RunConfig c;
  c.masses = detail::masses(j, "masses");
  if (j.contains("reduced_masses")) c.reduced_masses = detail::masses(j, "reduced_masses");
  c.duration = detail::number(j, "duration");
  if (!(c.duration >= 0.0)) throw ConfigError("duration must be nonnegative");

  if (j.contains("potential")) {
    const auto& p = j["potential"];
    if (!p.is_object()) throw ConfigError("'potential' must be an object");
    const std::string kind = p.value("kind", "mnt");
    if (kind == "mnt") c.potential.kind = PotentialKind::Mnt;
    else if (kind == "newton") c.potential.kind = PotentialKind::Newton;
    else if (kind == "free") c.potential.kind = PotentialKind::Free;
    else throw ConfigError("unknown potential kind '" + kind + "'");
    c.potential.coupling = detail::number_or(p, "coupling", 1.0);
  }

  if (j.contains("integrator")) {
    const auto& in = j["integrator"];
    if (!in.is_object()) throw ConfigError("'integrator' must be an object");
    const std::string method = in.value("method", "rk45");
    if (method == "rk45") c.integrator.method = Method::Rk45;
    else if (method == "rk4") c.integrator.method = Method::Rk4;
    else throw ConfigError("unknown integrator method '" + method + "'");
    c.integrator.step = detail::number_or(in, "step", c.integrator.step);
    c.integrator.rtol = detail::number_or(in, "rtol", c.integrator.rtol);
    c.integrator.atol = detail::number_or(in, "atol", c.integrator.atol);
    c.integrator.output_interval = detail::number_or(in, "output_interval", c.integrator.output_interval);
    c.integrator.max_step = detail::number_or(in, "max_step", c.integrator.max_step);
    if (!(c.integrator.max_step >= 0.0)) throw ConfigError("max_step must be nonnegative");
    const double ms = detail::number_or(in, "max_steps", static_cast<double>(c.integrator.max_steps));
    if (!(ms >= 1.0)) throw ConfigError("max_steps must be positive");
    c.integrator.max_steps = static_cast<std::size_t>(ms);
    if (!(c.integrator.step > 0.0) || !(c.integrator.rtol > 0.0) || !(c.integrator.atol > 0.0) ||
        !(c.integrator.output_interval >= 0.0))
      throw ConfigError("integrator step and tolerances must be positive");
  }

  const bool has_abs = j.contains("initial_absolute");
  const bool has_shape = j.contains("initial_shape");
  if (has_abs == has_shape) throw ConfigError("exactly one of 'initial_absolute' and 'initial_shape' is required");
  if (has_abs) {
    const auto& a = j["initial_absolute"];
    AbsoluteState s;
    s.config.x = detail::vectors(a, "positions");
    s.vel = detail::vectors(a, "velocities");
    if (s.config.size() != c.masses.size() || s.vel.size() != c.masses.size())
      throw ConfigError("positions and velocities must have one entry per mass");
    c.absolute = s;
  } else {
    const auto& a = j["initial_shape"];
    if (!a.is_object()) throw ConfigError("'initial_shape' must be an object");
    ShapeState3 s;
    s.s1 = detail::number(a, "s1");
    s.s2 = detail::number(a, "s2");
    s.lambda = detail::number_or(a, "lambda", 1.0);
    s.s1dot = detail::number_or(a, "s1dot", 0.0);
    s.s2dot = detail::number_or(a, "s2dot", 0.0);
    s.lamdot = detail::number_or(a, "lamdot", 0.0);
    if (a.contains("L")) {
      const auto& l = a["L"];
      if (!l.is_array() || l.size() != 3) throw ConfigError("'L' must be a 3-vector");
      for (int k = 0; k < 3; ++k) {
        if (!l[static_cast<std::size_t>(k)].is_number()) throw ConfigError("'L' components must be numbers");
        s.L[k] = l[static_cast<std::size_t>(k)].get<double>();
      }
    }
    if (!(s.lambda > 0.0)) throw ConfigError("lambda must be positive");
    c.shape = s;
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

inline json to_json(const CheckReport& r) {
  json results = json::array();
  for (const auto& x : r.results)
    results.push_back({{"name", x.name},
                       {"samples", x.samples},
                       {"value", x.value},
                       {"max_violation", x.max_violation},
                       {"tolerance", x.tolerance},
                       {"pass", x.pass}});
  return {{"suite", r.suite}, {"results", results}, {"pass", r.pass()}};
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

}  // namespace shapedyn::io
