#include <catch2/catch_amalgamated.hpp>

#include <string>

#include <tsecert/scenario.hpp>

using namespace tsecert;

static std::string thrown_message(void (*fn)()) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST_CASE("piecewise lookup respects half-open pieces") {
  PiecewiseConstantFn f({0.0, 2.0, 5.0}, {1.0, 3.0});
  CHECK(f.value_at(0.0) == 1.0);
  CHECK(f.value_at(1.999) == 1.0);
  CHECK(f.value_at(2.0) == 3.0);       // breakpoint belongs to the right piece
  CHECK(f.value_at(5.0) == 3.0);       // last piece closed on the right
  CHECK(f.piece_count() == 2);
  CHECK(f.piece(1).begin == 2.0);
  CHECK(f.piece(1).cumulative_at_begin == 2.0);
}

TEST_CASE("piecewise integral matches a Riemann sum") {
  PiecewiseConstantFn f({0.0, 1.0, 4.0, 10.0}, {2.0, 0.5, 1.25});
  for (double s : {0.0, 0.3, 1.0, 2.7, 4.0, 9.2, 10.0}) {
    double riemann = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      double mid = s * (i + 0.5) / n;
      if (s > 0) riemann += f.value_at(mid) * (s / n);
    }
    CHECK(f.integral_to(s) == Catch::Approx(riemann).margin(1e-3));
  }
  CHECK(f.total_integral() == Catch::Approx(2.0 + 1.5 + 7.5).margin(1e-12));
}

TEST_CASE("piecewise constructor validation names the problem") {
  CHECK_THROWS_AS(PiecewiseConstantFn({0.0}, {}), ConfigError);
  CHECK_THROWS_AS(PiecewiseConstantFn({0.0, 1.0}, {1.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(PiecewiseConstantFn({0.0, 1.0, 1.0}, {1.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(PiecewiseConstantFn({0.0, 2.0, 1.0}, {1.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(PiecewiseConstantFn({0.0, 1.0}, {-0.5}), ConfigError);

  std::string msg = thrown_message([] { PiecewiseConstantFn({0.0, 1.0}, {-0.5}, "inflow"); });
  CHECK(msg.find("inflow") != std::string::npos);
  CHECK(msg.find("-0.5") != std::string::npos);
  CHECK(msg.find("[0, 1]") != std::string::npos);
}

TEST_CASE("piecewise rejects coordinates outside the domain") {
  PiecewiseConstantFn f({0.0, 5.0}, {1.0});
  CHECK_THROWS_AS(f.value_at(-0.001), std::domain_error);
  CHECK_THROWS_AS(f.value_at(5.001), std::domain_error);
  CHECK_THROWS_AS(f.integral_to(-1.0), std::domain_error);
}

TEST_CASE("reference scenario grid and counts") {
  ScenarioSpec s = reference_scenario(25.0);
  CHECK(s.nx() == 501);
  CHECK(s.nt() == 501);
  CHECK(s.x_at(100) == 200.0);
  CHECK(s.t_at(500) == 50.0);
  CHECK(s.xs().size() == 501);
  CHECK(s.ts().front() == 0.0);

  CHECK(initial_count(s, 0.0) == 0.0);
  CHECK(initial_count(s, 200.0) == Catch::Approx(-26.0).margin(1e-12));
  CHECK(initial_count(s, 1000.0) == Catch::Approx(-59.0).margin(1e-12));
  CHECK(boundary_count(s, BoundarySide::upstream, 20.0) == Catch::Approx(8.0).margin(1e-12));
  CHECK(boundary_count(s, BoundarySide::upstream, 50.0) == Catch::Approx(8.0 + 0.2 + 2.0).margin(1e-12));
  CHECK(boundary_count(s, BoundarySide::downstream, 50.0) == Catch::Approx(-48.5).margin(1e-12));
  CHECK(boundary_count(s, BoundarySide::downstream, 0.0) == Catch::Approx(-59.0).margin(1e-12));
}

TEST_CASE("reference scenario is valid for every sweep speed") {
  for (double vf : {5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0})
    CHECK_NOTHROW(reference_scenario(vf).validate());
  CHECK_THROWS_AS(reference_scenario(0.0), ConfigError);
  CHECK_THROWS_AS(reference_scenario(-3.0), ConfigError);
}

TEST_CASE("scenario validation catches grid and coverage mismatches") {
  ScenarioSpec s = reference_scenario(25.0);
  s.dx_m = 3.0;   // 1000 / 3 is not an integer
  CHECK_THROWS_AS(s.validate(), ConfigError);

  s = reference_scenario(25.0);
  s.dt_s = 0.7;
  CHECK_THROWS_AS(s.validate(), ConfigError);

  s = reference_scenario(25.0);
  s.length_m = 900.0;   // pieces still cover [0, 1000]
  std::string msg;
  try {
    s.validate();
  } catch (const ConfigError& e) {
    msg = e.what();
  }
  CHECK(msg.find("initial_density") != std::string::npos);
  CHECK(msg.find("1000") != std::string::npos);

  s = reference_scenario(25.0);
  s.initial_density = PiecewiseConstantFn({0.0, 1000.0}, {0.2}, "initial_density");
  CHECK_THROWS_AS(s.validate(), ConfigError);   // above jam density
}

TEST_CASE("boundary count is monotone in time") {
  ScenarioSpec s = reference_scenario(10.0);
  double prev_up = boundary_count(s, BoundarySide::upstream, 0.0);
  double prev_dn = boundary_count(s, BoundarySide::downstream, 0.0);
  for (int j = 1; j <= 500; ++j) {
    double t = j * 0.1;
    double up = boundary_count(s, BoundarySide::upstream, t);
    double dn = boundary_count(s, BoundarySide::downstream, t);
    CHECK(up >= prev_up - 1e-12);
    CHECK(dn >= prev_dn - 1e-12);
    prev_up = up;
    prev_dn = dn;
  }
}
