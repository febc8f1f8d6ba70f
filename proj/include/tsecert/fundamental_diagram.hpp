#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "tsecert/common.hpp"

namespace tsecert {

/// Greenshields speed-density closure v(rho) = vf * (1 - rho/rho_max)
/// together with the convex transform of its flux used by the variational
/// solver. All quantities are SI: meters, seconds, vehicles.
struct FundamentalDiagram {
  double vf = 25.0;        // free-flow speed, m/s
  double rho_max = 0.15;   // jam density, veh/m

  void validate() const {
    if (!(vf > 0.0)) throw ConfigError("fundamental diagram: vf must be > 0, got " + format_g17(vf));
    if (!(rho_max > 0.0))
      throw ConfigError("fundamental diagram: rho_max must be > 0, got " + format_g17(rho_max));
  }

  double critical_density() const { return 0.5 * rho_max; }

  // Maximum flow vf*rho_max/4, attained at rho_max/2.
  double capacity() const { return 0.25 * vf * rho_max; }

  double speed(double rho) const {
    check_density(rho);
    return speed_unchecked(rho);
  }

  // q(rho) = rho * v(rho); concave parabola vanishing at 0 and rho_max.
  double flux(double rho) const {
    check_density(rho);
    return flux_unchecked(rho);
  }

  // Characteristic (kinematic wave) speed q'(rho) = vf * (1 - 2 rho/rho_max).
  double char_speed(double rho) const {
    check_density(rho);
    return vf * (1.0 - 2.0 * rho / rho_max);
  }

  // Legendre transform of the flux restricted to observer speeds inside the
  // characteristic cone: R(u) = sup_rho [q(rho) - u*rho] = rho_max*(vf-u)^2/(4 vf).
  // The sup is attained in [0, rho_max] exactly for u in [-vf, vf].
  double legendre(double u) const {
    if (u < -vf || u > vf)
      throw std::domain_error("legendre transform: observer speed " + format_g17(u) +
                              " outside [-vf, vf] = [-" + format_g17(vf) + ", " + format_g17(vf) + "]");
    double d = vf - u;
    return rho_max * d * d / (4.0 * vf);
  }

  // Polynomial extension of the flux, no domain check. Used for residuals of
  // raw model predictions that may leave [0, rho_max] slightly.
  double flux_unchecked(double rho) const { return rho * speed_unchecked(rho); }

  double speed_unchecked(double rho) const { return vf * (1.0 - rho / rho_max); }

 private:
  void check_density(double rho) const {
    if (rho < 0.0 || rho > rho_max)
      throw std::domain_error("density " + format_g17(rho) + " outside [0, rho_max] = [0, " +
                              format_g17(rho_max) + "]");
  }
};

}  // namespace tsecert
