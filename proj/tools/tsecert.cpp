// Command-line front end: generate reference environments, train the density
// estimator, certify it, and run full speed sweeps.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <tsecert/tsecert.hpp>

namespace {

using namespace tsecert;
namespace fs = std::filesystem;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nlohmann::json read_json_file(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(std::string(what) + " not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string(what) + " " + path.string() + ": " + e.what());
  }
  return j;
}

// Scenario defaults come from the reference setup; any key present in the
// config overrides it. vf always comes from the command line.
ScenarioSpec scenario_from_config(const nlohmann::json& j, double vf) {
  ScenarioSpec spec = reference_scenario(vf);
  try {
    spec.length_m = j.value("length_m", spec.length_m);
    spec.horizon_s = j.value("horizon_s", spec.horizon_s);
    spec.dx_m = j.value("dx_m", spec.dx_m);
    spec.dt_s = j.value("dt_s", spec.dt_s);
    spec.diagram.rho_max = j.value("rho_max", spec.diagram.rho_max);
    if (j.contains("initial_density"))
      spec.initial_density = detail::piecewise_from_json(j.at("initial_density"), "initial_density");
    if (j.contains("upstream_flow"))
      spec.upstream_flow = detail::piecewise_from_json(j.at("upstream_flow"), "upstream_flow");
    if (j.contains("downstream_flow"))
      spec.downstream_flow = detail::piecewise_from_json(j.at("downstream_flow"), "downstream_flow");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario config: ") + e.what());
  }
  spec.validate();
  return spec;
}

// <dir> means <dir>/truth.{csv,meta.json}; anything else is used as a prefix.
fs::path dataset_prefix(const std::string& arg) {
  fs::path p = arg;
  if (fs::is_directory(p)) return p / "truth";
  return p;
}

struct GenerateOpts {
  double vf = 25.0;
  std::string config, out;
};

int cmd_generate(const GenerateOpts& o) {
  nlohmann::json cfg = o.config.empty() ? nlohmann::json::object() : read_json_file(o.config, "config");
  ScenarioSpec spec = scenario_from_config(cfg, o.vf);
  const auto t0 = std::chrono::steady_clock::now();
  MoskowitzField n = solve_moskowitz(spec);
  DensityField truth = recover_density(n);
  fs::create_directories(o.out);
  write_dataset(full_grid(truth), DatasetMeta::from_scenario(spec), fs::path(o.out) / "truth");
  std::printf("wrote %s/truth.csv (%d x %d grid, vf=%g) in %.2f s\n", o.out.c_str(), spec.nx(),
              spec.nt(), o.vf, seconds_since(t0));
  return 0;
}

struct TrainOpts {
  std::string dataset;
  std::string budget = "full";
  std::uint64_t seed = 1;
  std::string out = "model.json";
  std::string trace;
  std::string sample_mode = "sensors";
  int sensors = 30;
  int samples = 15000;
  int adam_iters = -1;
  int lbfgs_iters = -1;
  int width = 40;
  int layers = 10;
  double lr = 1e-3;
};

int cmd_train(const TrainOpts& o) {
  Dataset ds = read_dataset(dataset_prefix(o.dataset));
  ScenarioSpec spec = ds.meta.to_scenario();

  std::vector<Sample> samples;
  const bool full = ds.samples.size() == static_cast<std::size_t>(ds.meta.nx) * ds.meta.nt;
  if (full) {
    DensityField field = field_from_dataset(ds);
    if (o.sample_mode == "sensors")
      samples = sensor_samples(field, SensorPlan::evenly_spaced(field.nx, o.sensors));
    else
      samples = random_samples(field, o.samples, o.seed);
  } else {
    samples = ds.samples;   // dataset is already a sample selection
  }

  TrainConfig tc = o.budget == "desk" ? TrainConfig::desk() : TrainConfig::full();
  if (o.adam_iters >= 0) tc.adam_iters = o.adam_iters;
  if (o.lbfgs_iters >= 0) tc.lbfgs_iters = o.lbfgs_iters;
  tc.adam_lr = o.lr;

  ModelParams model = init_model(hidden_architecture(o.width, o.layers), o.seed,
                                 InputScaling::for_domain(spec.length_m, spec.horizon_s));
  model.provenance.dataset_id =
      "fnv:" + to_hex(ds.content_hash) + ":" + std::to_string(samples.size());
  model.provenance.trained_vf = ds.meta.vf;

  std::printf("training %ld parameters on %zu samples (%s budget, seed %llu)\n",
              model.parameter_count(), samples.size(), o.budget.c_str(),
              static_cast<unsigned long long>(o.seed));
  const auto t0 = std::chrono::steady_clock::now();
  try {
    TrainResult result = train(std::move(model), samples, tc);
    save_model(result.model, o.out);
    if (!o.trace.empty()) write_trace_csv(result.trace, o.trace);
    std::printf("status=%s best_loss=%.6g evals=%ld wolfe_violations=%ld time=%.1f s\n",
                result.trace.status.c_str(), result.trace.best_loss, result.trace.function_evals,
                result.trace.wolfe_violations, seconds_since(t0));
  } catch (const TrainAbort& e) {
    if (!o.trace.empty()) write_trace_csv(e.trace, o.trace);
    throw;
  }
  return 0;
}

struct CertifyOpts {
  std::string model, env;
  std::string report = "report.json";
  double error_threshold = 30.0;
  double residual_ratio = 10.0;
  bool no_exit_code = false;
};

int cmd_certify(const CertifyOpts& o) {
  Dataset ds = read_dataset(dataset_prefix(o.env));
  DensityField truth = field_from_dataset(ds);
  Thresholds thr{o.error_threshold, o.residual_ratio};

  nlohmann::json mj = read_json_file(o.model, "model");
  const std::string kind = mj.value("kind", "mlp");
  CertificationReport rep;
  if (kind == "mlp") {
    rep = certify(model_from_json(mj), truth, thr);
  } else if (kind == "lookup") {
    // Grid lookup of a stored field; certifying an environment against its
    // own reference data is the calibration case for the verdict logic.
    fs::path ref = mj.at("dataset").get<std::string>();
    if (ref.is_relative()) ref = fs::path(o.model).parent_path() / ref;
    DensityField stored = field_from_dataset(read_dataset(ref));
    if (!grids_match(stored, truth)) throw ConfigError("lookup model grid does not match environment");
    rep = make_report(truth, stored.rho, thr, fnv1a64(mj.dump()));
    rep.model_provenance.dataset_id = "lookup:" + mj.at("dataset").get<std::string>();
  } else {
    throw ConfigError("model: unsupported kind '" + kind + "'");
  }

  save_report(rep, o.report);
  std::printf("vf=%g error=%.4g%% residual=%.4g baseline=%.4g ratio=%.4g certified=%s\n", rep.vf,
              rep.dl_error_percent, rep.residual.mean_abs, rep.baseline.mean_abs,
              rep.baseline.mean_abs > 0 ? rep.residual.mean_abs / rep.baseline.mean_abs : 0.0,
              rep.certified ? "true" : "false");
  if (o.no_exit_code) return 0;
  return rep.certified ? 0 : 1;
}

struct SweepOpts {
  std::string config, out;
  bool svg = false;
};

int cmd_sweep(const SweepOpts& o) {
  SweepConfig cfg =
      o.config.empty() ? SweepConfig{} : SweepConfig::from_json(read_json_file(o.config, "sweep config"));
  if (o.svg) cfg.svg = true;
  const auto t0 = std::chrono::steady_clock::now();
  SweepResult result = run_sweep(cfg, o.out, std::cout);
  std::printf("sweep complete: %zu environments in %.1f s, results in %s/results.csv\n",
              result.rows.size(), seconds_since(t0), o.out.c_str());
  return 0;
}

struct OracleOpts {
  double vf = 25.0;
  double tol = 0.02;
};

int cmd_oracle_check(const OracleOpts& o) {
  ScenarioSpec spec = reference_scenario(o.vf);
  const auto t0 = std::chrono::steady_clock::now();
  DensityField variational = recover_density(solve_moskowitz(spec));
  const double t_var = seconds_since(t0);
  const auto t1 = std::chrono::steady_clock::now();
  GodunovResult fv = godunov_simulate({spec});
  const double t_fv = seconds_since(t1);
  const double rel = relative_l1(variational, fv.field);
  const bool ok = rel <= o.tol;
  std::printf("vf=%g rel_l1=%.6f tol=%.6f variational=%.2f s godunov=%.2f s (%d steps): %s\n", o.vf,
              rel, o.tol, t_var, t_fv, fv.steps, ok ? "OK" : "MISMATCH");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"traffic state estimation and certification toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenerateOpts gen;
  CLI::App* c_gen = app.add_subcommand("generate", "solve a scenario and write the reference dataset");
  c_gen->add_option("--vf", gen.vf, "free-flow speed in m/s")->required();
  c_gen->add_option("--config", gen.config, "scenario config JSON (defaults used for missing keys)");
  c_gen->add_option("--out", gen.out, "output directory")->required();

  TrainOpts tro;
  CLI::App* c_train = app.add_subcommand("train", "fit the density estimator to a dataset");
  c_train->add_option("--dataset", tro.dataset, "dataset directory or file prefix")->required();
  c_train->add_option("--budget", tro.budget, "iteration budget preset")
      ->check(CLI::IsMember({"full", "desk"}));
  c_train->add_option("--seed", tro.seed, "initialization seed");
  c_train->add_option("--out", tro.out, "model output path");
  c_train->add_option("--trace", tro.trace, "write per-iteration trace CSV here");
  c_train->add_option("--sample-mode", tro.sample_mode, "sensors: fixed columns; random: grid points")
      ->check(CLI::IsMember({"sensors", "random"}));
  c_train->add_option("--sensors", tro.sensors, "sensor count for --sample-mode sensors");
  c_train->add_option("--samples", tro.samples, "sample count for --sample-mode random");
  c_train->add_option("--adam-iters", tro.adam_iters, "override preset first-phase iterations");
  c_train->add_option("--lbfgs-iters", tro.lbfgs_iters, "override preset second-phase iterations");
  c_train->add_option("--width", tro.width, "hidden layer width");
  c_train->add_option("--layers", tro.layers, "hidden layer count");
  c_train->add_option("--lr", tro.lr, "first-phase learning rate");

  CertifyOpts cert;
  CLI::App* c_cert = app.add_subcommand("certify", "evaluate a model against a reference environment");
  c_cert->add_option("--model", cert.model, "model JSON path")->required();
  c_cert->add_option("--env", cert.env, "environment directory or dataset prefix")->required();
  c_cert->add_option("--report", cert.report, "report output path");
  c_cert->add_option("--error-threshold", cert.error_threshold, "max density error percent");
  c_cert->add_option("--residual-ratio", cert.residual_ratio, "max residual over baseline");
  c_cert->add_flag("--no-exit-code", cert.no_exit_code, "exit 0 even when not certified");

  SweepOpts swp;
  CLI::App* c_swp = app.add_subcommand("sweep", "train once, certify across free-flow speeds");
  c_swp->add_option("--config", swp.config, "sweep config JSON (defaults when omitted)");
  c_swp->add_option("--out", swp.out, "output directory")->required();
  c_swp->add_flag("--svg", swp.svg, "also write an SVG plot of the error curve");

  OracleOpts ora;
  CLI::App* c_ora = app.add_subcommand("oracle-check", "compare variational and finite-volume solvers");
  c_ora->add_option("--vf", ora.vf, "free-flow speed in m/s")->required();
  c_ora->add_option("--oracle-tol", ora.tol, "max relative L1 disagreement");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(c_gen)) return cmd_generate(gen);
    if (app.got_subcommand(c_train)) return cmd_train(tro);
    if (app.got_subcommand(c_cert)) return cmd_certify(cert);
    if (app.got_subcommand(c_swp)) return cmd_sweep(swp);
    if (app.got_subcommand(c_ora)) return cmd_oracle_check(ora);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  }
  return 2;
}
