#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "tsecert/common.hpp"
#include "tsecert/scenario.hpp"

namespace tsecert {

/// Gridded density field rho(x, t). values(i, j) is the density at
/// (xs[i], ts[j]); columns are spatial profiles at a fixed time.
struct DensityField {
  int nx = 0, nt = 0;
  std::vector<double> xs, ts;
  Eigen::MatrixXd rho;   // nx x nt
  ScenarioSpec scenario;
};

/// Gridded flow field q(x, t), same layout.
struct FlowField {
  int nx = 0, nt = 0;
  std::vector<double> xs, ts;
  Eigen::MatrixXd q;   // nx x nt
  ScenarioSpec scenario;
};

inline bool grids_match(const DensityField& a, const DensityField& b, double tol = 1e-9) {
  if (a.nx != b.nx || a.nt != b.nt) return false;
  for (int i = 0; i < a.nx; ++i)
    if (std::abs(a.xs[i] - b.xs[i]) > tol) return false;
  for (int j = 0; j < a.nt; ++j)
    if (std::abs(a.ts[j] - b.ts[j]) > tol) return false;
  return true;
}

// sum |a - b| / sum |b|; b is the reference field.
inline double relative_l1(const DensityField& a, const DensityField& b) {
  if (!grids_match(a, b)) throw ConfigError("relative_l1: fields are on different grids");
  double num = (a.rho - b.rho).cwiseAbs().sum();
  double den = b.rho.cwiseAbs().sum();
  if (den == 0.0) throw NumericError("relative_l1: reference field is identically zero");
  return num / den;
}

}  // namespace tsecert
