#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

#include "tsecert/common.hpp"
#include "tsecert/field.hpp"
#include "tsecert/scenario.hpp"

namespace tsecert {

struct GodunovConfig {
  ScenarioSpec spec;
  double cfl_safety = 0.9;   // marching step = cfl_safety * dx / vf or tighter

  void validate() const {
    spec.validate();
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
      throw ConfigError("godunov: cfl_safety must be in (0, 1], got " + format_g17(cfl_safety));
  }
};

// Sending capacity of the upstream state.
inline double demand(const FundamentalDiagram& fd, double rho) {
  return fd.flux(std::min(rho, fd.critical_density()));
}

// Receiving capacity of the downstream state.
inline double supply(const FundamentalDiagram& fd, double rho) {
  return fd.flux(std::max(rho, fd.critical_density()));
}

// Riemann interface flux for the concave diagram: min(demand(L), supply(R)).
inline double godunov_flux(const FundamentalDiagram& fd, double rho_left, double rho_right) {
  return std::min(demand(fd, rho_left), supply(fd, rho_right));
}

/// Simulation output plus the bookkeeping the conservation checks need.
struct GodunovResult {
  DensityField field;
  double initial_mass = 0.0;    // veh on the road at t = 0
  double final_mass = 0.0;      // veh on the road at the horizon
  double inflow_total = 0.0;    // realized boundary inflow integral
  double outflow_total = 0.0;   // realized boundary outflow integral
  double max_step_defect = 0.0; // worst per-step |mass change - flux balance|
  int steps = 0;
};

/// First-order finite-volume marching with demand/supply interface fluxes.
/// The internal step comes from the CFL bound; states are linearly
/// interpolated in time onto the scenario grid, and cell averages are
/// averaged onto the grid nodes.
inline GodunovResult godunov_simulate(const GodunovConfig& cfg) {
  cfg.validate();
  const ScenarioSpec& spec = cfg.spec;
  const FundamentalDiagram& fd = spec.diagram;
  const int cells = spec.nx() - 1;
  const double dx = spec.dx_m;

  double max_step = cfg.cfl_safety * dx / fd.vf;
  if (!(max_step > 0.0)) throw ConfigError("godunov: CFL bound gives a nonpositive step");
  const int steps = static_cast<int>(std::ceil(spec.horizon_s / max_step));
  const double dt = spec.horizon_s / steps;

  // Cell averages of the initial density (exact for piecewise-constant data).
  std::vector<double> rho(cells);
  for (int i = 0; i < cells; ++i) {
    double a = i * dx, b = (i + 1) * dx;
    rho[i] = (spec.initial_density.integral_to(b) - spec.initial_density.integral_to(a)) / dx;
  }

  GodunovResult out;
  out.steps = steps;
  for (double v : rho) out.initial_mass += v * dx;

  DensityField& field = out.field;
  field.nx = spec.nx();
  field.nt = spec.nt();
  field.xs = spec.xs();
  field.ts = spec.ts();
  field.scenario = spec;
  field.rho.resize(field.nx, field.nt);

  auto cells_to_nodes = [&](const std::vector<double>& c, int j) {
    field.rho(0, j) = c[0];
    for (int i = 1; i < cells; ++i) field.rho(i, j) = 0.5 * (c[i - 1] + c[i]);
    field.rho(cells, j) = c[cells - 1];
  };

  std::vector<double> prev = rho;
  std::vector<double> flux(cells + 1);
  double mass = out.initial_mass;
  int next_output = 0;
  double t = 0.0;

  // Record outputs that fall in (t_prev, t_now], interpolating between the
  // bracketing marching states.
  std::vector<double> blend(cells);
  auto emit_outputs = [&](double t_prev, double t_now) {
    while (next_output < field.nt && field.ts[next_output] <= t_now + 1e-12) {
      double target = field.ts[next_output];
      double w = (target - t_prev) / (t_now - t_prev);
      w = std::clamp(w, 0.0, 1.0);
      for (int i = 0; i < cells; ++i) blend[i] = (1.0 - w) * prev[i] + w * rho[i];
      cells_to_nodes(blend, next_output);
      ++next_output;
    }
  };

  cells_to_nodes(rho, 0);
  next_output = 1;

  for (int k = 0; k < steps; ++k) {
    double t_next = (k + 1) * dt;
    // Prescribed boundary flows bound the cumulative counts, matching the
    // relaxed-sense conditions of the variational solver: flow a boundary
    // could not serve earlier stays outstanding instead of evaporating, and
    // the realized flux only ever caps it at what the adjacent cell can
    // accept or send.
    double up_quota = spec.upstream_flow.integral_to(std::min(t_next, spec.horizon_s)) -
                      out.inflow_total;
    double down_quota = spec.downstream_flow.integral_to(std::min(t_next, spec.horizon_s)) -
                        out.outflow_total;
    flux[0] = std::min(up_quota / dt, supply(fd, rho[0]));
    for (int i = 1; i < cells; ++i) flux[i] = godunov_flux(fd, rho[i - 1], rho[i]);
    flux[cells] = std::min(down_quota / dt, demand(fd, rho[cells - 1]));

    prev.swap(rho);
    double lambda = dt / dx;
    for (int i = 0; i < cells; ++i) rho[i] = prev[i] - lambda * (flux[i + 1] - flux[i]);

    double mass_next = 0.0;
    for (double v : rho) mass_next += v * dx;
    double defect = std::abs((mass_next - mass) - (flux[0] - flux[cells]) * dt);
    out.max_step_defect = std::max(out.max_step_defect, defect);
    mass = mass_next;
    out.inflow_total += flux[0] * dt;
    out.outflow_total += flux[cells] * dt;

    emit_outputs(t, t_next);
    t = t_next;
  }
  out.final_mass = mass;
  return out;
}

inline DensityField godunov_density(const GodunovConfig& cfg) { return godunov_simulate(cfg).field; }

}  // namespace tsecert
