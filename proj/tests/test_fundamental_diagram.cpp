#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <tsecert/fundamental_diagram.hpp>

using tsecert::ConfigError;
using tsecert::FundamentalDiagram;

TEST_CASE("defaults and anchor values") {
  FundamentalDiagram fd;
  CHECK(fd.vf == 25.0);
  CHECK(fd.rho_max == 0.15);
  CHECK(fd.speed(0.0) == 25.0);
  CHECK(fd.speed(fd.rho_max) == 0.0);
  CHECK(fd.flux(0.0) == 0.0);
  CHECK(fd.flux(fd.rho_max) == 0.0);
  CHECK(fd.critical_density() == Catch::Approx(0.075).margin(1e-15));
  CHECK(fd.capacity() == Catch::Approx(0.9375).margin(1e-15));
  CHECK(fd.flux(fd.critical_density()) == Catch::Approx(fd.capacity()).margin(1e-15));
}

TEST_CASE("characteristic speed endpoints and sign") {
  FundamentalDiagram fd;
  CHECK(fd.char_speed(0.0) == fd.vf);
  CHECK(fd.char_speed(fd.rho_max) == -fd.vf);
  CHECK(fd.char_speed(fd.critical_density()) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("flux equals density times speed") {
  FundamentalDiagram fd{31.0, 0.2};
  for (int i = 0; i <= 100; ++i) {
    double rho = fd.rho_max * i / 100.0;
    CHECK(fd.flux(rho) == rho * fd.speed(rho));
  }
}

TEST_CASE("characteristic speed matches the flux derivative") {
  FundamentalDiagram fd{17.0, 0.11};
  const double h = 1e-7;
  for (int i = 1; i < 40; ++i) {
    double rho = fd.rho_max * i / 40.0;
    double fd_slope = (fd.flux_unchecked(rho + h) - fd.flux_unchecked(rho - h)) / (2 * h);
    CHECK(fd.char_speed(rho) == Catch::Approx(fd_slope).margin(1e-6));
  }
}

TEST_CASE("flux is concave") {
  FundamentalDiagram fd;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> pick(0.0, fd.rho_max);
  for (int k = 0; k < 200; ++k) {
    double a = pick(gen), b = pick(gen);
    CHECK(fd.flux(0.5 * (a + b)) >= 0.5 * (fd.flux(a) + fd.flux(b)) - 1e-14);
  }
}

TEST_CASE("transform matches a brute-force Legendre scan") {
  FundamentalDiagram fd;
  // R(u) = max over rho of [flux(rho) - rho * u]
  for (int k = 0; k <= 50; ++k) {
    double u = -fd.vf + 2.0 * fd.vf * k / 50.0;
    double scan = -1e300;
    for (int i = 0; i <= 2000; ++i) {
      double rho = fd.rho_max * i / 2000.0;
      scan = std::max(scan, fd.flux(rho) - rho * u);
    }
    double closed = fd.legendre(u);
    CHECK(closed >= scan - 1e-12);            // scan only samples candidates
    CHECK(closed <= scan + 1e-6);             // and is dense enough to be tight
  }
}

TEST_CASE("transform endpoints") {
  FundamentalDiagram fd;
  CHECK(fd.legendre(fd.vf) == 0.0);
  CHECK(fd.legendre(-fd.vf) == Catch::Approx(fd.rho_max * fd.vf).margin(1e-12));
  CHECK(fd.legendre(0.0) == Catch::Approx(fd.capacity()).margin(1e-15));
}

TEST_CASE("domain guards") {
  FundamentalDiagram fd;
  CHECK_THROWS_AS(fd.flux(-1e-9), std::domain_error);
  CHECK_THROWS_AS(fd.flux(fd.rho_max + 1e-9), std::domain_error);
  CHECK_THROWS_AS(fd.speed(-0.01), std::domain_error);
  CHECK_THROWS_AS(fd.char_speed(0.16), std::domain_error);
  CHECK_THROWS_AS(fd.legendre(fd.vf + 1e-9), std::domain_error);
  CHECK_THROWS_AS(fd.legendre(-fd.vf - 1e-9), std::domain_error);
  CHECK_NOTHROW(fd.flux_unchecked(-0.3));    // residual stencils need the extension
}

TEST_CASE("validation rejects unusable parameters") {
  CHECK_THROWS_AS((FundamentalDiagram{0.0, 0.15}).validate(), ConfigError);
  CHECK_THROWS_AS((FundamentalDiagram{-5.0, 0.15}).validate(), ConfigError);
  CHECK_THROWS_AS((FundamentalDiagram{25.0, 0.0}).validate(), ConfigError);
  CHECK_THROWS_AS((FundamentalDiagram{25.0, -0.1}).validate(), ConfigError);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((FundamentalDiagram{nan, 0.15}).validate(), ConfigError);
  CHECK_NOTHROW((FundamentalDiagram{45.0, 0.15}).validate());
}
