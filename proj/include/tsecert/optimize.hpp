#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tsecert/common.hpp"

namespace tsecert {

/// f(x) with gradient written into the second argument.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct TrainConfig {
  int adam_iters = 15000;
  int lbfgs_iters = 50000;
  double adam_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int lbfgs_memory = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  double convergence_tol = 1e-9;   // stop when the gradient norm drops below

  static TrainConfig full() { return {}; }
  static TrainConfig desk() {
    TrainConfig c;
    c.adam_iters = 2000;
    c.lbfgs_iters = 3000;
    return c;
  }

  void validate() const {
    if (adam_iters < 0 || lbfgs_iters < 0) throw ConfigError("train config: iteration counts must be >= 0");
    if (adam_lr <= 0 || adam_eps <= 0) throw ConfigError("train config: adam_lr and adam_eps must be > 0");
    if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1)
      throw ConfigError("train config: betas must lie in [0, 1)");
    if (lbfgs_memory < 1) throw ConfigError("train config: lbfgs_memory must be >= 1");
    if (!(0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1))
      throw ConfigError("train config: need 0 < c1 < c2 < 1");
    if (convergence_tol < 0) throw ConfigError("train config: convergence_tol must be >= 0");
  }
};

struct TraceRow {
  std::string phase;
  long iteration = 0;       // strictly increasing within a phase
  double loss = 0.0;
  double grad_norm = 0.0;
  double seconds = 0.0;     // wall clock since training start; not deterministic
};

struct TrainTrace {
  std::vector<TraceRow> rows;
  std::string status;       // completed | converged-early | line-search-failure
  long function_evals = 0;
  long wolfe_violations = 0;
  double best_loss = std::numeric_limits<double>::infinity();
};

/// Training blew up; carries the trace accumulated before the abort.
struct TrainAbort : NumericError {
  TrainTrace trace;
  TrainAbort(const std::string& what, TrainTrace t) : NumericError(what), trace(std::move(t)) {}
};

inline void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "phase,iteration,loss,grad_norm,seconds\n";
  char line[160];
  for (const TraceRow& r : trace.rows) {
    std::snprintf(line, sizeof(line), "%s,%ld,%.17g,%.17g,%.6f\n", r.phase.c_str(), r.iteration, r.loss,
                  r.grad_norm, r.seconds);
    out << line;
  }
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_s(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Lowest finite loss seen at any evaluation point, and where.
struct BestPoint {
  double f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x;

  void offer(double fv, const Eigen::VectorXd& xv) {
    if (std::isfinite(fv) && fv < f) {
      f = fv;
      x = xv;
    }
  }
};

}  // namespace detail

/// Full-batch Adam with bias correction. Returns true if the gradient norm
/// dropped below cfg.convergence_tol before the budget ran out.
inline bool adam(const Objective& obj, Eigen::VectorXd& x, int iters, const TrainConfig& cfg,
                 TrainTrace& trace, detail::BestPoint& best, detail::Clock::time_point start) {
  const long n = x.size();
  Eigen::VectorXd g(n);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n), v = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < iters; ++k) {
    double f = obj(x, g);
    ++trace.function_evals;
    if (!std::isfinite(f) || !g.allFinite())
      throw TrainAbort("adam: non-finite loss or gradient at iteration " + std::to_string(k), trace);
    best.offer(f, x);
    double gn = g.norm();
    trace.rows.push_back({"adam", k, f, gn, detail::elapsed_s(start)});
    if (gn <= cfg.convergence_tol) return true;
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, k + 1);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, k + 1);
    x.array() -= cfg.adam_lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_eps);
  }
  return false;
}

namespace detail {

struct ProbeResult {
  double f = std::numeric_limits<double>::infinity();
  double d = 0.0;           // directional derivative g.p
  Eigen::VectorXd x, g;
};

struct LineSearchResult {
  bool ok = false;          // strong Wolfe point found
  double alpha = 0.0;
  ProbeResult at;
};

/// Strong-Wolfe line search (bracket then zoom). Non-finite trial values are
/// treated as infinitely bad, which steers the bracket back toward 0.
class LineSearch {
 public:
  LineSearch(const Objective& obj, const Eigen::VectorXd& x0, const Eigen::VectorXd& p, double f0,
             double d0, const TrainConfig& cfg, TrainTrace& trace, BestPoint& best)
      : obj_(obj), x0_(x0), p_(p), f0_(f0), d0_(d0), cfg_(cfg), trace_(trace), best_(best) {}

  LineSearchResult run(double alpha_init) {
    double a_prev = 0.0, f_prev = f0_, d_prev = d0_;
    double a = alpha_init;
    ProbeResult prev;   // only valid when a_prev > 0
    for (int j = 0; j < 20; ++j) {
      ProbeResult cur = probe(a);
      if (cur.f > f0_ + cfg_.wolfe_c1 * a * d0_ || (j > 0 && cur.f >= f_prev))
        return zoom(a_prev, f_prev, d_prev, a, cur);
      if (std::abs(cur.d) <= -cfg_.wolfe_c2 * d0_) return {true, a, std::move(cur)};
      if (cur.d >= 0.0) return zoom(a, cur.f, cur.d, a_prev, prev);
      a_prev = a;
      f_prev = cur.f;
      d_prev = cur.d;
      prev = std::move(cur);
      a = std::min(2.0 * a, 1e8);
    }
    return fail();
  }

 private:
  ProbeResult probe(double a) {
    ProbeResult r;
    r.x = x0_ + a * p_;
    r.g.resize(x0_.size());
    r.f = obj_(r.x, r.g);
    ++trace_.function_evals;
    if (!std::isfinite(r.f) || !r.g.allFinite()) {
      r.f = std::numeric_limits<double>::infinity();
      r.d = 0.0;
      return r;
    }
    best_.offer(r.f, r.x);
    r.d = r.g.dot(p_);
    if (r.f < best_f_) {
      best_f_ = r.f;
      best_probe_ = r;
      best_alpha_ = a;
    }
    return r;
  }

  // `hi_eval` may be empty (infinite f) when the high end was never evaluated
  // cleanly; the loop only uses f_lo/d_lo plus fresh trials, so that is fine.
  LineSearchResult zoom(double lo, double f_lo, double d_lo, double hi, ProbeResult hi_eval) {
    double f_hi = hi_eval.f;
    for (int j = 0; j < 40; ++j) {
      if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
      double t = interpolate(lo, f_lo, d_lo, hi, f_hi);
      ProbeResult cur = probe(t);
      if (cur.f > f0_ + cfg_.wolfe_c1 * t * d0_ || cur.f >= f_lo) {
        hi = t;
        f_hi = cur.f;
      } else {
        if (std::abs(cur.d) <= -cfg_.wolfe_c2 * d0_) return {true, t, std::move(cur)};
        if (cur.d * (hi - lo) >= 0.0) {
          hi = lo;
          f_hi = f_lo;
        }
        lo = t;
        f_lo = cur.f;
        d_lo = cur.d;
      }
    }
    return fail();
  }

  // Minimizer of the quadratic fit through (lo, f_lo, d_lo) and (hi, f_hi),
  // clipped away from the interval ends; bisection when the fit degenerates.
  double interpolate(double lo, double f_lo, double d_lo, double hi, double f_hi) const {
    const double h = hi - lo;
    double t = lo + 0.5 * h;
    const double denom = f_hi - f_lo - d_lo * h;
    if (std::isfinite(denom) && std::abs(denom) > 1e-300) {
      double q = lo - 0.5 * d_lo * h * h / denom;
      const double margin = 0.1 * std::abs(h);
      if (std::isfinite(q) && q > std::min(lo, hi) + margin && q < std::max(lo, hi) - margin) t = q;
    }
    return t;
  }

  LineSearchResult fail() {
    if (best_alpha_ > 0.0) return {false, best_alpha_, std::move(best_probe_)};
    return {false, 0.0, {}};
  }

  const Objective& obj_;
  const Eigen::VectorXd& x0_;
  const Eigen::VectorXd& p_;
  double f0_, d0_;
  const TrainConfig& cfg_;
  TrainTrace& trace_;
  BestPoint& best_;
  double best_f_ = std::numeric_limits<double>::infinity();
  double best_alpha_ = 0.0;
  ProbeResult best_probe_;
};

}  // namespace detail

/// Two-loop recursion L-BFGS with strong-Wolfe line search. Appends one trace
/// row per accepted iteration plus an iteration-0 row at the start point, and
/// sets trace.status.
inline void lbfgs(const Objective& obj, Eigen::VectorXd& x, int iters, const TrainConfig& cfg,
                  TrainTrace& trace, detail::BestPoint& best, detail::Clock::time_point start) {
  const long n = x.size();
  Eigen::VectorXd g(n);
  double f = obj(x, g);
  ++trace.function_evals;
  if (!std::isfinite(f) || !g.allFinite()) throw TrainAbort("lbfgs: non-finite loss at start", trace);
  best.offer(f, x);
  trace.rows.push_back({"lbfgs", 0, f, g.norm(), detail::elapsed_s(start)});

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd q(n), p(n);
  std::vector<double> alpha;

  for (int k = 1; k <= iters; ++k) {
    const double gn = g.norm();
    if (gn <= cfg.convergence_tol) {
      trace.status = "converged-early";
      return;
    }

    q = g;
    const std::size_t m = s_hist.size();
    alpha.assign(m, 0.0);
    for (std::size_t i = m; i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    p = -q;

    double d0 = g.dot(p);
    if (!(d0 < 0.0)) {      // not a descent direction; fall back to steepest descent
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      p = -g;
      d0 = -gn * gn;
    }

    const double alpha_init = k == 1 ? std::min(1.0, 1.0 / gn) : 1.0;
    detail::LineSearch search(obj, x, p, f, d0, cfg, trace, best);
    detail::LineSearchResult ls = search.run(alpha_init);
    if (!ls.ok) {
      if (ls.alpha > 0.0 && ls.at.f < f) {
        x = ls.at.x;
        trace.rows.push_back({"lbfgs", k, ls.at.f, ls.at.g.norm(), detail::elapsed_s(start)});
      }
      trace.status = "line-search-failure";
      return;
    }
    if (ls.at.f > f + cfg.wolfe_c1 * ls.alpha * d0 || std::abs(ls.at.d) > -cfg.wolfe_c2 * d0)
      ++trace.wolfe_violations;

    Eigen::VectorXd s = ls.at.x - x;
    Eigen::VectorXd y = ls.at.g - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > cfg.lbfgs_memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    x = std::move(ls.at.x);
    f = ls.at.f;
    g = std::move(ls.at.g);
    trace.rows.push_back({"lbfgs", k, f, g.norm(), detail::elapsed_s(start)});
  }
  trace.status = "completed";
}

}  // namespace tsecert
