#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tsecert/common.hpp"
#include "tsecert/field.hpp"
#include "tsecert/mlp.hpp"
#include "tsecert/version.hpp"

namespace tsecert {

/// Error in percent: 100 * ||truth - pred||_2 / ||truth||_2 over the whole
/// grid, with predictions clamped to the physical density range first.
inline double relative_error_percent(const DensityField& truth, const Eigen::MatrixXd& pred_raw) {
  if (pred_raw.rows() != truth.rho.rows() || pred_raw.cols() != truth.rho.cols())
    throw ConfigError("relative error: prediction grid does not match truth grid");
  const double rho_max = truth.scenario.diagram.rho_max;
  Eigen::MatrixXd pred = pred_raw.cwiseMax(0.0).cwiseMin(rho_max);
  const double denom = truth.rho.norm();
  if (denom == 0.0) throw NumericError("relative error: truth field is identically zero");
  return 100.0 * (truth.rho - pred).norm() / denom;
}

/// Discrete mass-balance defect D_t rho + D_x q(rho) on interior grid points,
/// central differences on the output grid. Predictions enter raw: clamping
/// would hide unphysical oscillation, which is what this check is for.
inline Eigen::MatrixXd conservation_residual(const Eigen::MatrixXd& rho, const ScenarioSpec& spec) {
  const int nx = spec.nx(), nt = spec.nt();
  if (rho.rows() != nx || rho.cols() != nt)
    throw ConfigError("conservation residual: field does not match scenario grid");
  if (nx < 3 || nt < 3) throw ConfigError("conservation residual: grid too small for interior stencil");
  Eigen::MatrixXd q(nx, nt);
  for (int j = 0; j < nt; ++j)
    for (int i = 0; i < nx; ++i) q(i, j) = spec.diagram.flux_unchecked(rho(i, j));
  Eigen::MatrixXd r(nx - 2, nt - 2);
  const double inv_2dt = 1.0 / (2.0 * spec.dt_s), inv_2dx = 1.0 / (2.0 * spec.dx_m);
  for (int j = 1; j + 1 < nt; ++j)
    for (int i = 1; i + 1 < nx; ++i)
      r(i - 1, j - 1) = (rho(i, j + 1) - rho(i, j - 1)) * inv_2dt + (q(i + 1, j) - q(i - 1, j)) * inv_2dx;
  return r;
}

struct ResidualStats {
  double mean_abs = 0.0;
  double max_abs = 0.0;
  double rms = 0.0;
};

inline ResidualStats residual_stats(const Eigen::MatrixXd& r) {
  ResidualStats s;
  s.mean_abs = r.cwiseAbs().mean();
  s.max_abs = r.cwiseAbs().maxCoeff();
  s.rms = std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
  return s;
}

struct Thresholds {
  double error_percent = 30.0;     // certified requires error at or below this
  double residual_ratio = 10.0;    // ... and mean |residual| <= ratio * baseline

  void validate() const {
    if (error_percent <= 0 || residual_ratio <= 0)
      throw ConfigError("thresholds: error_percent and residual_ratio must be > 0");
  }
};

struct CertificationReport {
  double vf = 0.0;
  double dl_error_percent = 0.0;
  ResidualStats residual;           // model field through the balance stencil
  ResidualStats baseline;           // truth field through the same stencil
  double residual_scale = 0.0;      // q_max / L, for normalized reporting
  Thresholds thresholds;
  bool certified = false;
  std::uint64_t config_hash = 0;
  Provenance model_provenance;
  std::string tool_version = kVersion;
};

/// Verdict from a truth field and a raw prediction grid. The baseline puts
/// the exact solution through the identical stencil, so the residual test
/// compares like against like and stays mesh-independent.
inline CertificationReport make_report(const DensityField& truth, const Eigen::MatrixXd& pred_raw,
                                       const Thresholds& thr, std::uint64_t model_hash) {
  thr.validate();
  CertificationReport rep;
  rep.vf = truth.scenario.diagram.vf;
  rep.thresholds = thr;
  rep.dl_error_percent = relative_error_percent(truth, pred_raw);
  rep.residual = residual_stats(conservation_residual(pred_raw, truth.scenario));
  rep.baseline = residual_stats(conservation_residual(truth.rho, truth.scenario));
  rep.residual_scale = truth.scenario.diagram.capacity() / truth.scenario.length_m;
  rep.certified = rep.dl_error_percent <= thr.error_percent &&
                  rep.residual.mean_abs <= thr.residual_ratio * rep.baseline.mean_abs;

  std::string key = format_g17(rep.vf) + "|" + format_g17(thr.error_percent) + "|" +
                    format_g17(thr.residual_ratio) + "|" + std::to_string(truth.nx) + "x" +
                    std::to_string(truth.nt) + "|" + to_hex(model_hash);
  rep.config_hash = fnv1a64(key);
  return rep;
}

inline CertificationReport certify(const ModelParams& model, const DensityField& truth,
                                   const Thresholds& thr = {}) {
  Eigen::MatrixXd pred = predict_grid(model, truth.scenario);
  CertificationReport rep = make_report(truth, pred, thr, fnv1a64(model_to_json(model).dump()));
  rep.model_provenance = model.provenance;
  return rep;
}

namespace detail {

inline nlohmann::json stats_to_json(const ResidualStats& s, double scale) {
  return nlohmann::json{{"mean_abs", s.mean_abs},
                        {"max_abs", s.max_abs},
                        {"rms", s.rms},
                        {"normalized_mean", scale > 0 ? s.mean_abs / scale : 0.0}};
}

}  // namespace detail

inline nlohmann::json report_to_json(const CertificationReport& r) {
  return nlohmann::json{
      {"vf", r.vf},
      {"dl_error_percent", r.dl_error_percent},
      {"residual", detail::stats_to_json(r.residual, r.residual_scale)},
      {"baseline_residual", detail::stats_to_json(r.baseline, r.residual_scale)},
      {"residual_scale", r.residual_scale},
      {"thresholds", {{"error_percent", r.thresholds.error_percent}, {"residual_ratio", r.thresholds.residual_ratio}}},
      {"certified", r.certified},
      {"config_hash", to_hex(r.config_hash)},
      {"model_provenance",
       {{"seed", r.model_provenance.seed},
        {"adam_iters", r.model_provenance.adam_iters},
        {"lbfgs_iters", r.model_provenance.lbfgs_iters},
        {"dataset_id", r.model_provenance.dataset_id},
        {"trained_vf", r.model_provenance.trained_vf},
        {"tool_version", r.model_provenance.tool_version}}},
      {"tool_version", r.tool_version}};
}

inline void save_report(const CertificationReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << report_to_json(r).dump(2) << "\n";
}

}  // namespace tsecert
