#pragma once

#include <utility>
#include <vector>

#include "tsecert/dataset.hpp"
#include "tsecert/mlp.hpp"
#include "tsecert/optimize.hpp"

namespace tsecert {

struct TrainResult {
  ModelParams model;
  TrainTrace trace;
};

/// Adam warm-up followed by L-BFGS refinement, full batch throughout.
/// The returned model carries the lowest loss evaluated anywhere in the run,
/// so training never leaves the model worse than its starting point.
inline TrainResult train(ModelParams model, const std::vector<Sample>& samples, const TrainConfig& cfg) {
  cfg.validate();
  model.validate();
  TrainingObjective objective(model, samples);
  Objective obj = [&objective](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return objective(x, g); };

  TrainResult result;
  detail::BestPoint best;
  const auto start = detail::Clock::now();

  Eigen::VectorXd x = model.flatten();
  {
    Eigen::VectorXd g(x.size());
    double f0 = obj(x, g);
    ++result.trace.function_evals;
    if (!std::isfinite(f0) || !g.allFinite())
      throw TrainAbort("train: non-finite loss at initial parameters", result.trace);
    best.offer(f0, x);
  }

  bool adam_converged = false;
  if (cfg.adam_iters > 0)
    adam_converged = adam(obj, x, cfg.adam_iters, cfg, result.trace, best, start);

  if (adam_converged) {
    result.trace.status = "converged-early";
  } else if (cfg.lbfgs_iters > 0) {
    lbfgs(obj, x, cfg.lbfgs_iters, cfg, result.trace, best, start);
  } else {
    result.trace.status = "completed";
  }

  result.trace.best_loss = best.f;
  model.unflatten(best.x);
  model.provenance.adam_iters = cfg.adam_iters;
  model.provenance.lbfgs_iters = cfg.lbfgs_iters;
  result.model = std::move(model);
  return result;
}

}  // namespace tsecert
