#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsecert/certification.hpp"
#include "tsecert/dataset.hpp"
#include "tsecert/laxhopf.hpp"
#include "tsecert/scenario.hpp"
#include "tsecert/train.hpp"

namespace tsecert {

/// One estimator trained at train_vf, certified against reference solutions
/// across a range of free-flow speeds.
struct SweepConfig {
  std::vector<double> vf_values{5, 10, 15, 20, 25, 30, 35, 40, 45};
  double train_vf = 25.0;
  std::string budget = "full";        // "full" or "desk"
  std::uint64_t seed = 1;
  int sensor_count = 30;
  Thresholds thresholds;
  double dx_m = 2.0, dt_s = 0.1;      // grid override, mostly for fast test runs
  int hidden_width = 40, hidden_layers = 10;
  double adam_lr = 1e-3;
  int adam_iters = -1;                // < 0 means "use the budget preset"
  int lbfgs_iters = -1;
  bool svg = false;

  void validate() const {
    if (vf_values.empty()) throw ConfigError("sweep: vf_values must not be empty");
    for (double v : vf_values)
      if (!(v > 0)) throw ConfigError("sweep: vf values must be positive");
    std::vector<double> sorted = vf_values;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError("sweep: vf values must be distinct");
    if (std::find(vf_values.begin(), vf_values.end(), train_vf) == vf_values.end())
      throw ConfigError("sweep: train_vf must be one of vf_values");
    if (budget != "full" && budget != "desk")
      throw ConfigError("sweep: budget must be 'full' or 'desk', got '" + budget + "'");
    if (sensor_count < 1) throw ConfigError("sweep: sensor_count must be >= 1");
    if (!(dx_m > 0) || !(dt_s > 0)) throw ConfigError("sweep: dx_m and dt_s must be positive");
    if (hidden_width < 1 || hidden_layers < 0) throw ConfigError("sweep: bad architecture");
    if (!(adam_lr > 0)) throw ConfigError("sweep: adam_lr must be positive");
    thresholds.validate();
  }

  TrainConfig train_config() const {
    TrainConfig tc = budget == "desk" ? TrainConfig::desk() : TrainConfig::full();
    if (adam_iters >= 0) tc.adam_iters = adam_iters;
    if (lbfgs_iters >= 0) tc.lbfgs_iters = lbfgs_iters;
    tc.adam_lr = adam_lr;
    return tc;
  }

  static SweepConfig from_json(const nlohmann::json& j) {
    SweepConfig c;
    try {
      if (j.contains("vf_values")) c.vf_values = j.at("vf_values").get<std::vector<double>>();
      c.train_vf = j.value("train_vf", c.train_vf);
      c.budget = j.value("budget", c.budget);
      c.seed = j.value("seed", c.seed);
      c.sensor_count = j.value("sensor_count", c.sensor_count);
      if (j.contains("thresholds")) {
        const auto& t = j.at("thresholds");
        c.thresholds.error_percent = t.value("error_percent", c.thresholds.error_percent);
        c.thresholds.residual_ratio = t.value("residual_ratio", c.thresholds.residual_ratio);
      }
      c.dx_m = j.value("dx_m", c.dx_m);
      c.dt_s = j.value("dt_s", c.dt_s);
      c.hidden_width = j.value("hidden_width", c.hidden_width);
      c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
      c.adam_lr = j.value("adam_lr", c.adam_lr);
      c.adam_iters = j.value("adam_iters", c.adam_iters);
      c.lbfgs_iters = j.value("lbfgs_iters", c.lbfgs_iters);
      c.svg = j.value("svg", c.svg);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("sweep config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

struct SweepRow {
  double vf = 0.0;
  double dl_error_percent = 0.0;
  double mean_abs_residual = 0.0;
  double baseline_residual = 0.0;
  bool certified = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;     // ascending vf
  ModelParams model;
  TrainTrace trace;
};

namespace detail {

inline std::string vf_tag(double vf) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", vf);
  return buf;
}

inline void write_results_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "vf,dl_error_percent,mean_abs_residual,baseline_residual,certified\n";
  char line[256];
  for (const SweepRow& r : rows) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%s\n", r.vf, r.dl_error_percent,
                  r.mean_abs_residual, r.baseline_residual, r.certified ? "true" : "false");
    out << line;
  }
}

inline void write_error_curve(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# vf dl_error_percent\n";
  char line[128];
  for (const SweepRow& r : rows) {
    std::snprintf(line, sizeof(line), "%.17g %.17g\n", r.vf, r.dl_error_percent);
    out << line;
  }
}

// Self-contained line plot of error versus free-flow speed.
inline void write_sweep_svg(const std::vector<SweepRow>& rows, double error_threshold,
                            const std::filesystem::path& path) {
  const double w = 640, h = 420, ml = 64, mr = 24, mt = 28, mb = 56;
  double vf_lo = rows.front().vf, vf_hi = rows.back().vf;
  if (vf_hi <= vf_lo) {
    vf_lo -= 1;
    vf_hi += 1;
  }
  double err_hi = 100.0;
  for (const SweepRow& r : rows) err_hi = std::max(err_hi, r.dl_error_percent * 1.05);
  auto px = [&](double vf) { return ml + (vf - vf_lo) / (vf_hi - vf_lo) * (w - ml - mr); };
  auto py = [&](double e) { return h - mb - e / err_hi * (h - mt - mb); };

  char buf[256];
  std::string s;
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns='http://www.w3.org/2000/svg' width='%g' height='%g' "
                "viewBox='0 0 %g %g' font-family='sans-serif' font-size='12'>\n",
                w, h, w, h);
  s += buf;
  s += "<rect width='100%' height='100%' fill='white'/>\n";
  for (double e = 0; e <= err_hi + 1e-9; e += 20) {
    std::snprintf(buf, sizeof(buf),
                  "<line x1='%g' y1='%.2f' x2='%g' y2='%.2f' stroke='#ddd'/>"
                  "<text x='%g' y='%.2f' text-anchor='end'>%g</text>\n",
                  ml, py(e), w - mr, py(e), ml - 8, py(e) + 4, e);
    s += buf;
  }
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "<line x1='%.2f' y1='%g' x2='%.2f' y2='%g' stroke='#eee'/>"
                  "<text x='%.2f' y='%g' text-anchor='middle'>%s</text>\n",
                  px(r.vf), py(0), px(r.vf), static_cast<double>(mt), px(r.vf), h - mb + 18,
                  vf_tag(r.vf).c_str());
    s += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<line x1='%g' y1='%.2f' x2='%g' y2='%.2f' stroke='#c33' stroke-dasharray='6 4'/>"
                "<text x='%g' y='%.2f' fill='#c33'>threshold %g%%</text>\n",
                ml, py(error_threshold), w - mr, py(error_threshold), ml + 6, py(error_threshold) - 6,
                error_threshold);
  s += buf;
  s += "<polyline fill='none' stroke='#27c' stroke-width='2' points='";
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(r.vf), py(r.dl_error_percent));
    s += buf;
  }
  s += "'/>\n";
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "<circle cx='%.2f' cy='%.2f' r='4' fill='%s'/>\n", px(r.vf),
                  py(r.dl_error_percent), r.certified ? "#27c" : "#c33");
    s += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x='%g' y='%g' text-anchor='middle'>free-flow speed (m/s)</text>"
                "<text x='16' y='%g' transform='rotate(-90 16 %g)' text-anchor='middle'>"
                "density error (%%)</text>\n",
                ml + (w - ml - mr) / 2, h - 12, mt + (h - mt - mb) / 2, mt + (h - mt - mb) / 2);
  s += buf;
  s += "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << s;
}

}  // namespace detail

/// Generates reference environments for every vf, trains one estimator at
/// train_vf from sensor data, certifies it everywhere, and writes all
/// artifacts under out_dir. Output bytes depend only on config and seed.
inline SweepResult run_sweep(const SweepConfig& cfg, const std::filesystem::path& out_dir,
                             std::ostream& log) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);

  std::vector<double> vfs = cfg.vf_values;
  std::sort(vfs.begin(), vfs.end());

  std::map<double, DensityField> fields;
  for (double vf : vfs) {
    ScenarioSpec spec = reference_scenario(vf);
    spec.dx_m = cfg.dx_m;
    spec.dt_s = cfg.dt_s;
    spec.validate();
    log << "solving reference field at vf=" << detail::vf_tag(vf) << " ("
        << spec.nx() << "x" << spec.nt() << " grid)\n"
        << std::flush;
    MoskowitzField n = solve_moskowitz(spec);
    DensityField truth = recover_density(n);
    std::filesystem::path env = out_dir / ("env_vf" + detail::vf_tag(vf));
    std::filesystem::create_directories(env);
    write_dataset(full_grid(truth), DatasetMeta::from_scenario(spec), env / "truth");
    fields.emplace(vf, std::move(truth));
  }

  const DensityField& train_field = fields.at(cfg.train_vf);
  SensorPlan plan = SensorPlan::evenly_spaced(train_field.nx, cfg.sensor_count);
  std::vector<Sample> samples = sensor_samples(train_field, plan);
  std::uint64_t data_hash =
      write_dataset(samples, DatasetMeta::from_scenario(train_field.scenario), out_dir / "train_data");
  log << "training on " << samples.size() << " samples from " << plan.columns.size() << " sensors at vf="
      << detail::vf_tag(cfg.train_vf) << "\n"
      << std::flush;

  ModelParams model = init_model(hidden_architecture(cfg.hidden_width, cfg.hidden_layers), cfg.seed,
                                 InputScaling::for_domain(train_field.scenario.length_m,
                                                          train_field.scenario.horizon_s));
  model.provenance.dataset_id = "fnv:" + to_hex(data_hash) + ":" + std::to_string(samples.size());
  model.provenance.trained_vf = cfg.train_vf;

  TrainResult tr = train(std::move(model), samples, cfg.train_config());
  log << "training finished: status=" << tr.trace.status << " best_loss=" << tr.trace.best_loss << "\n"
      << std::flush;
  save_model(tr.model, out_dir / "model.json");
  write_trace_csv(tr.trace, out_dir / "train_trace.csv");

  SweepResult result;
  result.model = tr.model;
  result.trace = tr.trace;
  for (double vf : vfs) {
    const DensityField& truth = fields.at(vf);
    CertificationReport rep = certify(tr.model, truth, cfg.thresholds);
    save_report(rep, out_dir / ("report_vf" + detail::vf_tag(vf) + ".json"));
    result.rows.push_back({vf, rep.dl_error_percent, rep.residual.mean_abs, rep.baseline.mean_abs,
                           rep.certified});
    log << "vf=" << detail::vf_tag(vf) << ": error=" << rep.dl_error_percent << "% certified="
        << (rep.certified ? "true" : "false") << "\n"
        << std::flush;
  }

  detail::write_results_csv(result.rows, out_dir / "results.csv");
  detail::write_error_curve(result.rows, out_dir / "fig5.dat");
  if (cfg.svg) detail::write_sweep_svg(result.rows, cfg.thresholds.error_percent, out_dir / "sweep.svg");
  return result;
}

}  // namespace tsecert
