#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tsecert/common.hpp"
#include "tsecert/field.hpp"
#include "tsecert/scenario.hpp"

namespace tsecert {

/// Moskowitz cumulative-count surface N(x, t): q = dN/dt, rho = -dN/dx,
/// normalized so N(0, 0) = 0. values(i, j) = N(xs[i], ts[j]).
struct MoskowitzField {
  int nx = 0, nt = 0;
  std::vector<double> xs, ts;
  Eigen::MatrixXd values;   // nx x nt
  ScenarioSpec scenario;
};

namespace detail {

// One affine piece of a value condition, reduced to the data the variational
// formula needs. Initial pieces live on the t = 0 line, boundary pieces on
// the x = 0 or x = L line.
struct InitialPiece {
  double a, b;        // foot interval in x
  double density;     // -slope of N along the piece
  double count_at_a;  // N(a, 0)
};

struct BoundaryPiece {
  double ta, tb;       // foot interval in t
  double flow;         // slope of N along the boundary
  double count_at_ta;  // N at the piece start
};

// Legendre transform without the domain guard; candidate speeds are clamped
// into [-vf, vf] before evaluation, so the formula is always valid.
inline double transform_cost(const FundamentalDiagram& fd, double u) {
  double d = fd.vf - u;
  return fd.rho_max * d * d / (4.0 * fd.vf);
}

// Component solution for an initial piece at (x, t), t > 0: the objective
// f(u) = N(foot) + t * R(u) with foot = x - u*t is convex in u, so the
// minimum over the admissible cone is attained at the stationary point
// char_speed(density) clamped into the admissible interval. Interval
// endpoints are evaluated too (they are the cone edges or piece-end feet).
inline double initial_component(const InitialPiece& p, const FundamentalDiagram& fd, double x, double t) {
  double u_lo = std::max(-fd.vf, (x - p.b) / t);
  double u_hi = std::min(fd.vf, (x - p.a) / t);
  if (u_lo > u_hi) return std::numeric_limits<double>::infinity();
  auto value = [&](double u) {
    double foot = x - u * t;
    return p.count_at_a - p.density * (foot - p.a) + t * transform_cost(fd, u);
  };
  double best = std::min(value(u_lo), value(u_hi));
  double u_star = fd.vf * (1.0 - 2.0 * p.density / fd.rho_max);
  if (u_star > u_lo && u_star < u_hi) best = std::min(best, value(u_star));
  return best;
}

// Component solution for a boundary piece at (x, t). `offset` is the signed
// distance from the boundary (x for upstream, x - L downstream), so the
// characteristic speed from foot time tau is u = offset / (t - tau). The
// objective is convex in tau (perspective of the convex transform), and the
// interior stationary point has |u*| = vf * sqrt(1 - flow/capacity).
inline double boundary_component(const BoundaryPiece& p, const FundamentalDiagram& fd, double offset,
                                 double t, bool upstream) {
  double tau_lo = p.ta;
  double tau_hi = std::min(p.tb, t - std::abs(offset) / fd.vf);
  if (tau_lo > tau_hi) return std::numeric_limits<double>::infinity();
  auto value = [&](double tau) {
    double along = p.count_at_ta + p.flow * (tau - p.ta);
    double elapsed = t - tau;
    if (elapsed <= 0.0) return along;
    double u = std::clamp(offset / elapsed, -fd.vf, fd.vf);
    return along + elapsed * transform_cost(fd, u);
  };
  double best = std::min(value(tau_lo), value(tau_hi));
  double ratio = 1.0 - p.flow / fd.capacity();
  if (ratio > 0.0 && offset != 0.0) {
    double u_star = fd.vf * std::sqrt(ratio);
    if (!upstream) u_star = -u_star;
    double tau_star = t - offset / u_star;
    if (tau_star > tau_lo && tau_star < tau_hi) best = std::min(best, value(tau_star));
  }
  return best;
}

}  // namespace detail

/// Solves the scenario by the variational (Lax-Hopf) formula: at every grid
/// point, N is the minimum over all value-condition components of
/// [condition value at the foot point + elapsed * R(characteristic speed)].
/// Conditions act as upper bounds, so infeasible prescribed boundary flows
/// are automatically capped at the realized (entropy) flux.
inline MoskowitzField solve_moskowitz(const ScenarioSpec& spec) {
  spec.validate();
  const FundamentalDiagram& fd = spec.diagram;
  const double length = spec.length_m;

  std::vector<detail::InitialPiece> init;
  for (std::size_t i = 0; i < spec.initial_density.piece_count(); ++i) {
    auto p = spec.initial_density.piece(i);
    init.push_back({p.begin, p.end, p.value, -p.cumulative_at_begin});
  }
  std::vector<detail::BoundaryPiece> up, down;
  const double count_at_length = initial_count(spec, length);
  for (std::size_t i = 0; i < spec.upstream_flow.piece_count(); ++i) {
    auto p = spec.upstream_flow.piece(i);
    up.push_back({p.begin, p.end, p.value, p.cumulative_at_begin});
  }
  for (std::size_t i = 0; i < spec.downstream_flow.piece_count(); ++i) {
    auto p = spec.downstream_flow.piece(i);
    down.push_back({p.begin, p.end, p.value, count_at_length + p.cumulative_at_begin});
  }

  MoskowitzField field;
  field.nx = spec.nx();
  field.nt = spec.nt();
  field.xs = spec.xs();
  field.ts = spec.ts();
  field.scenario = spec;
  field.values.resize(field.nx, field.nt);

  auto solve_point = [&](double x, double t) {
    if (t <= 0.0) return initial_count(spec, x);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : init) best = std::min(best, detail::initial_component(p, fd, x, t));
    for (const auto& p : up) best = std::min(best, detail::boundary_component(p, fd, x, t, true));
    for (const auto& p : down)
      best = std::min(best, detail::boundary_component(p, fd, x - length, t, false));
    return best;
  };

  const int nx = field.nx, nt = field.nt;
  parallel_for(nx, [&](long lo, long hi) {
    for (long i = lo; i < hi; ++i)
      for (int j = 0; j < nt; ++j) field.values(i, j) = solve_point(field.xs[i], field.ts[j]);
  });
  return field;
}

/// rho = -dN/dx by central differences (one-sided at the edges), clamped to
/// [0, rho_max] to absorb O(dx) differencing noise at shocks.
inline DensityField recover_density(const MoskowitzField& m) {
  DensityField f;
  f.nx = m.nx;
  f.nt = m.nt;
  f.xs = m.xs;
  f.ts = m.ts;
  f.scenario = m.scenario;
  f.rho.resize(m.nx, m.nt);
  const double dx = m.scenario.dx_m;
  const double rho_max = m.scenario.diagram.rho_max;
  for (int j = 0; j < m.nt; ++j) {
    f.rho(0, j) = -(m.values(1, j) - m.values(0, j)) / dx;
    for (int i = 1; i + 1 < m.nx; ++i)
      f.rho(i, j) = -(m.values(i + 1, j) - m.values(i - 1, j)) / (2.0 * dx);
    f.rho(m.nx - 1, j) = -(m.values(m.nx - 1, j) - m.values(m.nx - 2, j)) / dx;
  }
  f.rho = f.rho.cwiseMax(0.0).cwiseMin(rho_max);
  return f;
}

/// q = dN/dt by central differences (one-sided at the edges), clamped to
/// [0, capacity].
inline FlowField recover_flow(const MoskowitzField& m) {
  FlowField f;
  f.nx = m.nx;
  f.nt = m.nt;
  f.xs = m.xs;
  f.ts = m.ts;
  f.scenario = m.scenario;
  f.q.resize(m.nx, m.nt);
  const double dt = m.scenario.dt_s;
  for (int i = 0; i < m.nx; ++i) {
    f.q(i, 0) = (m.values(i, 1) - m.values(i, 0)) / dt;
    for (int j = 1; j + 1 < m.nt; ++j)
      f.q(i, j) = (m.values(i, j + 1) - m.values(i, j - 1)) / (2.0 * dt);
    f.q(i, m.nt - 1) = (m.values(i, m.nt - 1) - m.values(i, m.nt - 2)) / dt;
  }
  f.q = f.q.cwiseMax(0.0).cwiseMin(m.scenario.diagram.capacity());
  return f;
}

}  // namespace tsecert
