#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <tsecert/godunov.hpp>
#include <tsecert/laxhopf.hpp>

using namespace tsecert;

namespace {

// Pure Riemann problem with boundary flows matched to the outer states, so
// the only feature is the shock between them.
ScenarioSpec riemann_scenario(double rho_left, double rho_right) {
  ScenarioSpec s;
  s.length_m = 1000.0;
  s.horizon_s = 50.0;
  s.dx_m = 2.0;
  s.dt_s = 0.1;
  s.diagram = FundamentalDiagram{25.0, 0.15};
  s.initial_density =
      PiecewiseConstantFn({0.0, 500.0, 1000.0}, {rho_left, rho_right}, "initial_density");
  s.upstream_flow =
      PiecewiseConstantFn({0.0, 50.0}, {s.diagram.flux(rho_left)}, "upstream_flow");
  s.downstream_flow =
      PiecewiseConstantFn({0.0, 50.0}, {s.diagram.flux(rho_right)}, "downstream_flow");
  s.validate();
  return s;
}

}  // namespace

TEST_CASE("interface flux follows the demand and supply of the states") {
  FundamentalDiagram fd;   // vf = 25, rho_max = 0.15
  CHECK(godunov_flux(fd, 0.0, 0.0) == 0.0);
  CHECK(godunov_flux(fd, fd.critical_density(), 0.0) == Catch::Approx(0.9375).margin(1e-15));
  CHECK(godunov_flux(fd, 0.03, 0.13) == Catch::Approx(fd.flux(0.13)).margin(1e-15));
  // Transonic rarefaction: flux passes through the sonic point.
  CHECK(godunov_flux(fd, 0.13, 0.03) == Catch::Approx(fd.capacity()).margin(1e-15));
  CHECK(demand(fd, 0.13) == Catch::Approx(fd.capacity()).margin(1e-15));
  CHECK(supply(fd, 0.03) == Catch::Approx(fd.capacity()).margin(1e-15));
}

TEST_CASE("shock between two states travels at the jump speed") {
  const double rho_l = 0.03, rho_r = 0.13;
  GodunovConfig cfg{riemann_scenario(rho_l, rho_r)};
  const FundamentalDiagram& fd = cfg.spec.diagram;
  GodunovResult r = godunov_simulate(cfg);
  CHECK(r.steps == 695);   // ceil(50 * 25 / (0.9 * 2))

  double speed = (fd.flux(rho_r) - fd.flux(rho_l)) / (rho_r - rho_l);
  CHECK(speed == Catch::Approx(-5.0 / 3.0).margin(1e-12));
  double mid = 0.5 * (rho_l + rho_r);
  for (int j : {100, 250, 500}) {
    double t = r.field.ts[j];
    int front = 0;
    while (front < r.field.nx && r.field.rho(front, j) < mid) ++front;
    REQUIRE(front < r.field.nx);
    CHECK(std::abs(r.field.xs[front] - (500.0 + speed * t)) <= 6.0);
  }
}

TEST_CASE("mass bookkeeping telescopes exactly") {
  for (double vf : {25.0, 10.0}) {
    GodunovConfig cfg{reference_scenario(vf)};
    GodunovResult r = godunov_simulate(cfg);
    CHECK(r.max_step_defect <= 1e-10);
    CHECK(r.final_mass ==
          Catch::Approx(r.initial_mass + r.inflow_total - r.outflow_total).margin(1e-8));
    CHECK(r.initial_mass == Catch::Approx(59.0).margin(1e-9));
  }
}

TEST_CASE("uniform state with matched boundary flows stays put") {
  ScenarioSpec s;
  s.diagram = FundamentalDiagram{25.0, 0.15};
  s.initial_density = PiecewiseConstantFn({0.0, 1000.0}, {0.05}, "initial_density");
  double q = s.diagram.flux(0.05);
  s.upstream_flow = PiecewiseConstantFn({0.0, 50.0}, {q}, "upstream_flow");
  s.downstream_flow = PiecewiseConstantFn({0.0, 50.0}, {q}, "downstream_flow");
  DensityField f = godunov_density(GodunovConfig{s});
  CHECK((f.rho.array() - 0.05).abs().maxCoeff() <= 1e-9);
}

TEST_CASE("density stays within the physical range under infeasible inflow") {
  // At vf = 10 the prescribed inflow rate exceeds capacity on [0, 20] s, so
  // the boundary backs up; the unserved remainder keeps discharging and the
  // full quota is in by the horizon.
  GodunovResult r = godunov_simulate(GodunovConfig{reference_scenario(10.0)});
  CHECK(r.field.rho.minCoeff() >= 0.0);
  CHECK(r.field.rho.maxCoeff() <= 0.15);
  double prescribed = r.field.scenario.upstream_flow.total_integral();
  CHECK(r.inflow_total <= prescribed + 1e-9);
  CHECK(r.inflow_total == Catch::Approx(prescribed).margin(1e-9));

  // Truncated to the congested window the cap is strict: the upstream cell
  // stays at or above critical density for all of [0, 20] s, so the realized
  // inflow must fall well short of the 8 veh prescribed there.
  ScenarioSpec short_spec = r.field.scenario;
  short_spec.horizon_s = 20.0;
  short_spec.upstream_flow = PiecewiseConstantFn({0.0, 20.0}, {0.4});
  short_spec.downstream_flow = PiecewiseConstantFn({0.0, 20.0}, {0.3});
  GodunovResult capped = godunov_simulate(GodunovConfig{short_spec});
  CHECK(capped.inflow_total < 8.0 - 0.5);
}

TEST_CASE("marching result agrees with the variational solver") {
  ScenarioSpec s = reference_scenario(25.0);
  DensityField god = godunov_density(GodunovConfig{s});
  DensityField var = recover_density(solve_moskowitz(s));
  CHECK(relative_l1(god, var) < 0.02);
}

TEST_CASE("marching is deterministic") {
  GodunovConfig cfg{reference_scenario(25.0)};
  DensityField a = godunov_density(cfg);
  DensityField b = godunov_density(cfg);
  CHECK(a.rho == b.rho);
}

TEST_CASE("config validation rejects a bad safety factor") {
  GodunovConfig cfg{reference_scenario(25.0)};
  cfg.cfl_safety = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.cfl_safety = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
