#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tsecert/common.hpp"
#include "tsecert/fundamental_diagram.hpp"
#include "tsecert/piecewise.hpp"

namespace tsecert {

enum class BoundarySide { upstream, downstream };

/// One road segment with piecewise-constant initial density and prescribed
/// boundary flows, plus the grid the ground-truth fields are sampled on.
struct ScenarioSpec {
  double length_m = 1000.0;
  double horizon_s = 50.0;
  double dx_m = 2.0;
  double dt_s = 0.1;
  PiecewiseConstantFn initial_density;   // veh/m over [0, length_m]
  PiecewiseConstantFn upstream_flow;     // veh/s over [0, horizon_s]
  PiecewiseConstantFn downstream_flow;   // veh/s over [0, horizon_s]
  FundamentalDiagram diagram;

  int nx() const { return static_cast<int>(std::llround(length_m / dx_m)) + 1; }
  int nt() const { return static_cast<int>(std::llround(horizon_s / dt_s)) + 1; }
  double x_at(int i) const { return i * dx_m; }
  double t_at(int j) const { return j * dt_s; }

  std::vector<double> xs() const {
    std::vector<double> v(nx());
    for (int i = 0; i < nx(); ++i) v[i] = x_at(i);
    return v;
  }
  std::vector<double> ts() const {
    std::vector<double> v(nt());
    for (int j = 0; j < nt(); ++j) v[j] = t_at(j);
    return v;
  }

  void validate() const {
    diagram.validate();
    if (!(length_m > 0.0)) throw ConfigError("scenario: length must be > 0");
    if (!(horizon_s > 0.0)) throw ConfigError("scenario: horizon must be > 0");
    if (!(dx_m > 0.0)) throw ConfigError("scenario: dx must be > 0");
    if (!(dt_s > 0.0)) throw ConfigError("scenario: dt must be > 0");
    check_divides(dx_m, length_m, "dx", "length");
    check_divides(dt_s, horizon_s, "dt", "horizon");
    check_cover(initial_density, 0.0, length_m);
    check_cover(upstream_flow, 0.0, horizon_s);
    check_cover(downstream_flow, 0.0, horizon_s);
    for (std::size_t i = 0; i < initial_density.piece_count(); ++i) {
      auto p = initial_density.piece(i);
      if (p.value > diagram.rho_max)
        throw ConfigError("scenario: initial density " + format_g17(p.value) + " on [" +
                          format_g17(p.begin) + ", " + format_g17(p.end) + "] exceeds rho_max " +
                          format_g17(diagram.rho_max));
    }
  }

 private:
  static void check_divides(double step, double span, const char* step_name, const char* span_name) {
    double k = span / step;
    if (std::abs(k - std::llround(k)) > 1e-9)
      throw ConfigError(std::string("scenario: ") + step_name + " = " + format_g17(step) +
                        " does not divide " + span_name + " = " + format_g17(span));
  }
  static void check_cover(const PiecewiseConstantFn& f, double lo, double hi) {
    if (std::abs(f.domain_begin() - lo) > 1e-9 || std::abs(f.domain_end() - hi) > 1e-9)
      throw ConfigError(f.label() + ": pieces cover [" + format_g17(f.domain_begin()) + ", " +
                        format_g17(f.domain_end()) + "] instead of [" + format_g17(lo) + ", " +
                        format_g17(hi) + "]");
  }
};

/// The reference scenario: 1000 m road, 50 s horizon, 2 m / 0.1 s grid,
/// three-piece initial density and three-piece boundary flows, jam density
/// 0.15 veh/m. Only the free-flow speed varies between environments.
inline ScenarioSpec reference_scenario(double vf) {
  if (!(vf > 0.0)) throw ConfigError("reference_scenario: vf must be > 0, got " + format_g17(vf));
  ScenarioSpec s;
  s.length_m = 1000.0;
  s.horizon_s = 50.0;
  s.dx_m = 2.0;
  s.dt_s = 0.1;
  s.initial_density = PiecewiseConstantFn({0.0, 200.0, 500.0, 1000.0}, {0.13, 0.06, 0.03}, "initial_density");
  s.upstream_flow = PiecewiseConstantFn({0.0, 20.0, 40.0, 50.0}, {0.4, 0.01, 0.2}, "upstream_flow");
  s.downstream_flow = PiecewiseConstantFn({0.0, 30.0, 35.0, 50.0}, {0.3, 0.0, 0.1}, "downstream_flow");
  s.diagram = FundamentalDiagram{vf, 0.15};
  s.validate();
  return s;
}

// Cumulative count at t = 0: N(x, 0) = -integral of the initial density,
// normalized so N(0, 0) = 0.
inline double initial_count(const ScenarioSpec& spec, double x) {
  return -spec.initial_density.integral_to(x);
}

// Cumulative count along a boundary. Upstream: integral of the inflow.
// Downstream: anchored at initial_count(length) so the corner values agree.
inline double boundary_count(const ScenarioSpec& spec, BoundarySide side, double t) {
  if (side == BoundarySide::upstream) return spec.upstream_flow.integral_to(t);
  return initial_count(spec, spec.length_m) + spec.downstream_flow.integral_to(t);
}

}  // namespace tsecert
