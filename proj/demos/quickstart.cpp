// Minimal end-to-end walk: solve a reference field, train a small estimator
// on sensor data, certify it against the exact solution.

#include <cstdio>

#include <tsecert/tsecert.hpp>

int main() {
  using namespace tsecert;

  // Coarse grid keeps this under a minute; the full setup uses dx=2, dt=0.1.
  ScenarioSpec spec = reference_scenario(25.0);
  spec.dx_m = 10.0;
  spec.dt_s = 0.5;
  spec.validate();

  DensityField truth = recover_density(solve_moskowitz(spec));
  std::printf("reference field: %d x %d nodes, density range [%.4f, %.4f]\n", truth.nx, truth.nt,
              truth.rho.minCoeff(), truth.rho.maxCoeff());

  std::vector<Sample> data = sensor_samples(truth, SensorPlan::evenly_spaced(truth.nx, 30));
  std::printf("training on %zu sensor samples\n", data.size());

  ModelParams model = init_model(hidden_architecture(20, 4), 7,
                                 InputScaling::for_domain(spec.length_m, spec.horizon_s));
  TrainConfig budget;
  budget.adam_iters = 400;
  budget.lbfgs_iters = 600;
  TrainResult fit = train(std::move(model), data, budget);
  std::printf("training: status=%s best_loss=%.3g\n", fit.trace.status.c_str(), fit.trace.best_loss);

  CertificationReport report = certify(fit.model, truth);
  std::printf("error=%.2f%% residual=%.3g baseline=%.3g certified=%s\n", report.dl_error_percent,
              report.residual.mean_abs, report.baseline.mean_abs,
              report.certified ? "true" : "false");
  return report.certified ? 0 : 1;
}
