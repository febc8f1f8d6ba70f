#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsecert/common.hpp"
#include "tsecert/field.hpp"
#include "tsecert/scenario.hpp"

namespace tsecert {

struct Sample {
  double x = 0.0;    // meters
  double t = 0.0;    // seconds
  double rho = 0.0;  // veh/m

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Fixed-detector layout: full time series at a set of grid columns.
struct SensorPlan {
  std::vector<int> columns;   // strictly increasing grid column indices

  // `count` sensors at columns round(i * (nx-1) / (count-1)), endpoints included.
  static SensorPlan evenly_spaced(int nx, int count = 30) {
    if (count < 1) throw ConfigError("sensor plan: count must be >= 1");
    if (count > nx) throw ConfigError("sensor plan: more sensors than grid columns");
    SensorPlan plan;
    plan.columns.reserve(count);
    const double denom = count > 1 ? count - 1.0 : 1.0;
    for (int i = 0; i < count; ++i) {
      int c = static_cast<int>(std::llround(i * (nx - 1) / denom));
      if (plan.columns.empty() || c != plan.columns.back()) plan.columns.push_back(c);
    }
    return plan;
  }

  void validate(int nx) const {
    if (columns.empty()) throw ConfigError("sensor plan: no columns");
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] < 0 || columns[i] >= nx)
        throw ConfigError("sensor plan: column " + std::to_string(columns[i]) + " outside [0, " +
                          std::to_string(nx - 1) + "]");
      if (i > 0 && columns[i] <= columns[i - 1])
        throw ConfigError("sensor plan: columns not strictly increasing at index " + std::to_string(i));
    }
  }
};

// Every grid point in x-major order (x outer, t inner).
inline std::vector<Sample> full_grid(const DensityField& field) {
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(field.nx) * field.nt);
  for (int i = 0; i < field.nx; ++i)
    for (int j = 0; j < field.nt; ++j) out.push_back({field.xs[i], field.ts[j], field.rho(i, j)});
  return out;
}

// All time steps at each sensor column, sensor-major, time ascending.
inline std::vector<Sample> sensor_samples(const DensityField& field, const SensorPlan& plan) {
  plan.validate(field.nx);
  std::vector<Sample> out;
  out.reserve(plan.columns.size() * field.nt);
  for (int c : plan.columns)
    for (int j = 0; j < field.nt; ++j) out.push_back({field.xs[c], field.ts[j], field.rho(c, j)});
  return out;
}

// `count` distinct grid points drawn with a seeded generator, emitted in
// x-major grid order. Sensitivity-check alternative to fixed sensors.
inline std::vector<Sample> random_samples(const DensityField& field, int count, std::uint64_t seed) {
  const long total = static_cast<long>(field.nx) * field.nt;
  if (count < 1 || count > total)
    throw ConfigError("random_samples: count must be in [1, " + std::to_string(total) + "]");
  std::vector<long> idx(total);
  for (long k = 0; k < total; ++k) idx[k] = k;
  std::mt19937_64 gen(seed);
  for (long k = 0; k < count; ++k) {
    long pick = k + static_cast<long>(gen() % static_cast<std::uint64_t>(total - k));
    std::swap(idx[k], idx[pick]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::vector<Sample> out;
  out.reserve(count);
  for (long k : idx) {
    int i = static_cast<int>(k / field.nt), j = static_cast<int>(k % field.nt);
    out.push_back({field.xs[i], field.ts[j], field.rho(i, j)});
  }
  return out;
}

/// Grid and scenario metadata stored next to a sample file; enough to
/// reconstruct the ScenarioSpec that produced the field.
struct DatasetMeta {
  double length_m = 0, horizon_s = 0, dx_m = 0, dt_s = 0, vf = 0, rho_max = 0;
  PiecewiseConstantFn initial_density, upstream_flow, downstream_flow;
  int nx = 0, nt = 0;

  static DatasetMeta from_scenario(const ScenarioSpec& s) {
    return {s.length_m, s.horizon_s, s.dx_m,  s.dt_s,         s.diagram.vf, s.diagram.rho_max,
            s.initial_density, s.upstream_flow, s.downstream_flow, s.nx(),       s.nt()};
  }

  ScenarioSpec to_scenario() const {
    ScenarioSpec s;
    s.length_m = length_m;
    s.horizon_s = horizon_s;
    s.dx_m = dx_m;
    s.dt_s = dt_s;
    s.initial_density = initial_density;
    s.upstream_flow = upstream_flow;
    s.downstream_flow = downstream_flow;
    s.diagram = FundamentalDiagram{vf, rho_max};
    s.validate();
    if (nx != s.nx() || nt != s.nt())
      throw ConfigError("dataset metadata: stored grid " + std::to_string(nx) + "x" + std::to_string(nt) +
                        " does not match steps (expect " + std::to_string(s.nx()) + "x" +
                        std::to_string(s.nt()) + ")");
    return s;
  }
};

struct Dataset {
  std::vector<Sample> samples;
  DatasetMeta meta;
  std::uint64_t content_hash = 0;   // FNV-1a of the sample file bytes
};

namespace detail {

inline nlohmann::json piecewise_to_json(const PiecewiseConstantFn& f) {
  return nlohmann::json{{"breakpoints", f.breakpoints()}, {"values", f.values()}};
}

// Accepts {"breakpoints": [...], "values": [...]} or a list of
// {"from": a, "to": b, "value": v} pieces; the list form checks adjacency.
inline PiecewiseConstantFn piecewise_from_json(const nlohmann::json& j, const std::string& label) {
  if (j.is_array()) {
    std::vector<double> bp, vals;
    for (const auto& piece : j) {
      if (!piece.contains("from") || !piece.contains("to") || !piece.contains("value"))
        throw ConfigError(label + ": each piece needs from/to/value");
      double from = piece.at("from").get<double>();
      double to = piece.at("to").get<double>();
      double value = piece.at("value").get<double>();
      if (bp.empty()) {
        bp.push_back(from);
      } else if (std::abs(bp.back() - from) > 1e-9) {
        throw ConfigError(label + ": " + (from > bp.back() ? "gap" : "overlap") +
                          " between piece ending at " + format_g17(bp.back()) +
                          " and piece starting at " + format_g17(from));
      }
      bp.push_back(to);
      vals.push_back(value);
    }
    return PiecewiseConstantFn(bp, vals, label);
  }
  if (!j.contains("breakpoints") || !j.contains("values"))
    throw ConfigError(label + ": expected breakpoints/values or a piece list");
  return PiecewiseConstantFn(j.at("breakpoints").get<std::vector<double>>(),
                             j.at("values").get<std::vector<double>>(), label);
}

}  // namespace detail

inline nlohmann::json meta_to_json(const DatasetMeta& m) {
  return nlohmann::json{{"length_m", m.length_m},
                        {"horizon_s", m.horizon_s},
                        {"dx_m", m.dx_m},
                        {"dt_s", m.dt_s},
                        {"vf", m.vf},
                        {"rho_max", m.rho_max},
                        {"initial_density", detail::piecewise_to_json(m.initial_density)},
                        {"upstream_flow", detail::piecewise_to_json(m.upstream_flow)},
                        {"downstream_flow", detail::piecewise_to_json(m.downstream_flow)},
                        {"nx", m.nx},
                        {"nt", m.nt}};
}

inline DatasetMeta meta_from_json(const nlohmann::json& j) {
  DatasetMeta m;
  try {
    m.length_m = j.at("length_m").get<double>();
    m.horizon_s = j.at("horizon_s").get<double>();
    m.dx_m = j.at("dx_m").get<double>();
    m.dt_s = j.at("dt_s").get<double>();
    m.vf = j.at("vf").get<double>();
    m.rho_max = j.at("rho_max").get<double>();
    m.initial_density = detail::piecewise_from_json(j.at("initial_density"), "initial_density");
    m.upstream_flow = detail::piecewise_from_json(j.at("upstream_flow"), "upstream_flow");
    m.downstream_flow = detail::piecewise_from_json(j.at("downstream_flow"), "downstream_flow");
    m.nx = j.at("nx").get<int>();
    m.nt = j.at("nt").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset metadata: ") + e.what());
  }
  return m;
}

// Writes <prefix>.csv (header x,t,rho, one %.17g triple per line, LF) and
// <prefix>.meta.json. Returns the FNV-1a hash of the csv lines, matching the
// content_hash computed by read_dataset.
inline std::uint64_t write_dataset(const std::vector<Sample>& samples, const DatasetMeta& meta,
                                   const std::filesystem::path& prefix) {
  std::filesystem::path csv_path = prefix;
  csv_path += ".csv";
  std::filesystem::path meta_path = prefix;
  meta_path += ".meta.json";

  std::string buf;
  buf.reserve(samples.size() * 48 + 16);
  buf += "x,t,rho";
  std::uint64_t hash = fnv1a64(buf);
  buf += '\n';
  char line[128];
  for (const Sample& s : samples) {
    int len = std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g", s.x, s.t, s.rho);
    hash = fnv1a64(std::string_view(line, static_cast<std::size_t>(len)), hash);
    buf.append(line, static_cast<std::size_t>(len));
    buf += '\n';
  }
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + csv_path.string());
    out << buf;
  }
  {
    std::ofstream out(meta_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + meta_path.string());
    out << meta_to_json(meta).dump(2) << "\n";
  }
  return hash;
}

namespace detail {

inline double parse_field(const std::string& text, std::size_t line_no, const char* name) {
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || end != text.c_str() + text.size())
    throw ParseError("dataset line " + std::to_string(line_no) + ": field '" + name +
                     "' is not a number: '" + text + "'");
  return v;
}

inline void check_on_grid(double value, double step, double span, std::size_t line_no, const char* name) {
  double k = value / step;
  if (value < -1e-9 || value > span + 1e-9 || std::abs(k - std::llround(k)) > 1e-6)
    throw ParseError("dataset line " + std::to_string(line_no) + ": " + name + " = " + format_g17(value) +
                     " is not on the scenario grid");
}

}  // namespace detail

// Reads <prefix>.csv + <prefix>.meta.json, validating every sample against
// the grid and density bounds.
inline Dataset read_dataset(const std::filesystem::path& prefix) {
  std::filesystem::path csv_path = prefix;
  csv_path += ".csv";
  std::filesystem::path meta_path = prefix;
  meta_path += ".meta.json";

  if (!std::filesystem::exists(meta_path))
    throw ParseError("metadata not found: " + meta_path.string());
  std::ifstream meta_in(meta_path, std::ios::binary);
  nlohmann::json meta_json;
  try {
    meta_in >> meta_json;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("dataset metadata " + meta_path.string() + ": " + e.what());
  }

  Dataset d;
  d.meta = meta_from_json(meta_json);
  d.meta.to_scenario();   // full validation incl. grid consistency

  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw ParseError("dataset not found: " + csv_path.string());

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("dataset " + csv_path.string() + ": empty file");
  d.content_hash = fnv1a64(line);
  if (line != "x,t,rho")
    throw ParseError("dataset line 1: expected header 'x,t,rho', got '" + line + "'");

  while (std::getline(in, line)) {
    ++line_no;
    d.content_hash = fnv1a64(line, d.content_hash);
    if (line.empty()) continue;
    std::size_t c1 = line.find(',');
    std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw ParseError("dataset line " + std::to_string(line_no) + ": expected 3 comma-separated fields");
    Sample s;
    s.x = detail::parse_field(line.substr(0, c1), line_no, "x");
    s.t = detail::parse_field(line.substr(c1 + 1, c2 - c1 - 1), line_no, "t");
    s.rho = detail::parse_field(line.substr(c2 + 1), line_no, "rho");
    detail::check_on_grid(s.x, d.meta.dx_m, d.meta.length_m, line_no, "x");
    detail::check_on_grid(s.t, d.meta.dt_s, d.meta.horizon_s, line_no, "t");
    if (s.rho < 0.0 || s.rho > d.meta.rho_max)
      throw ParseError("dataset line " + std::to_string(line_no) + ": rho = " + format_g17(s.rho) +
                       " outside [0, " + format_g17(d.meta.rho_max) + "]");
    d.samples.push_back(s);
  }
  return d;
}

// Rebuilds the full grid field; requires every grid point exactly once.
inline DensityField field_from_dataset(const Dataset& d) {
  ScenarioSpec spec = d.meta.to_scenario();
  DensityField f;
  f.nx = d.meta.nx;
  f.nt = d.meta.nt;
  f.xs = spec.xs();
  f.ts = spec.ts();
  f.scenario = spec;
  f.rho.setConstant(f.nx, f.nt, -1.0);
  if (d.samples.size() != static_cast<std::size_t>(f.nx) * f.nt)
    throw ConfigError("dataset has " + std::to_string(d.samples.size()) + " samples, expected full grid of " +
                      std::to_string(static_cast<long>(f.nx) * f.nt));
  for (const Sample& s : d.samples) {
    int i = static_cast<int>(std::llround(s.x / d.meta.dx_m));
    int j = static_cast<int>(std::llround(s.t / d.meta.dt_s));
    if (f.rho(i, j) >= 0.0) throw ConfigError("dataset repeats grid point (" + format_g17(s.x) + ", " + format_g17(s.t) + ")");
    f.rho(i, j) = s.rho;
  }
  return f;
}

}  // namespace tsecert
