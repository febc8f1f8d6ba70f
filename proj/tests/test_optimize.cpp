#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <tsecert/optimize.hpp>
#include <tsecert/train.hpp>

using namespace tsecert;

namespace {

Objective quadratic_diag(int n) {
  return [n](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    double f = 0.0;
    g.resize(n);
    for (int i = 0; i < n; ++i) {
      double a = i + 1.0;
      f += 0.5 * a * x[i] * x[i];
      g[i] = a * x[i];
    }
    return f;
  };
}

Objective rosenbrock() {
  return [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g.resize(2);
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
}

struct Harness {
  TrainTrace trace;
  detail::BestPoint best;
  detail::Clock::time_point start = detail::Clock::now();
};

}  // namespace

TEST_CASE("adam takes the textbook first step") {
  Objective parabola = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(1);
    g[0] = 2.0 * x[0];
    return x[0] * x[0];
  };
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
  TrainConfig cfg;
  Harness h;
  adam(parabola, x, 1, cfg, h.trace, h.best, h.start);

  // First step: m_hat = g, v_hat = g^2, so dx = lr * g / (|g| + eps).
  double expected = 1.0 - 0.001 * (2.0 / (2.0 + 1e-8));
  CHECK(std::abs(x[0] - expected) <= 1e-12);
  REQUIRE(h.trace.rows.size() == 1);
  CHECK(h.trace.rows[0].phase == "adam");
  CHECK(h.trace.rows[0].loss == 1.0);
  CHECK(h.trace.rows[0].grad_norm == 2.0);
}

TEST_CASE("adam settles near the minimum of a parabola") {
  Objective parabola = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(1);
    g[0] = 2.0 * x[0];
    return x[0] * x[0];
  };
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
  TrainConfig cfg;
  Harness h;
  bool converged = adam(parabola, x, 5000, cfg, h.trace, h.best, h.start);
  CHECK(converged);   // |grad| = 2|w| sinks below the 1e-9 tol inside the budget
  CHECK(std::abs(x[0]) < 1e-3);
  REQUIRE(h.trace.rows.size() <= 5000);
  REQUIRE(h.trace.rows.size() >= 1000);
  for (std::size_t k = 1; k < h.trace.rows.size(); ++k)
    REQUIRE(h.trace.rows[k].iteration == h.trace.rows[k - 1].iteration + 1);
  CHECK(h.best.f <= h.trace.rows[0].loss);
  CHECK(h.best.f < 1e-4);
}

TEST_CASE("adam aborts on a poisoned objective but keeps the trace") {
  int calls = 0;
  Objective poisoned = [&calls](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(1);
    g[0] = 2.0 * x[0];
    return calls++ < 3 ? x[0] * x[0] : std::nan("");
  };
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
  TrainConfig cfg;
  Harness h;
  try {
    adam(poisoned, x, 100, cfg, h.trace, h.best, h.start);
    FAIL("expected TrainAbort");
  } catch (const TrainAbort& e) {
    CHECK(std::string(e.what()).find("iteration 3") != std::string::npos);
    CHECK(e.trace.rows.size() == 3);
  }
}

TEST_CASE("lbfgs minimizes an ill-conditioned quadratic quickly") {
  Eigen::VectorXd x = Eigen::VectorXd::Ones(10);
  TrainConfig cfg;
  cfg.convergence_tol = 1e-8;
  Harness h;
  lbfgs(quadratic_diag(10), x, 100, cfg, h.trace, h.best, h.start);
  CHECK(h.trace.status == "converged-early");
  CHECK(h.trace.rows.back().iteration <= 30);
  CHECK(x.norm() <= 1e-6);
  CHECK(h.trace.wolfe_violations == 0);
}

TEST_CASE("lbfgs solves rosenbrock from the classic start") {
  Eigen::VectorXd x(2);
  x << -1.2, 1.0;
  TrainConfig cfg;
  cfg.convergence_tol = 1e-6;
  Harness h;
  lbfgs(rosenbrock(), x, 200, cfg, h.trace, h.best, h.start);
  CHECK(h.trace.status == "converged-early");
  CHECK(std::abs(x[0] - 1.0) <= 1e-4);
  CHECK(std::abs(x[1] - 1.0) <= 1e-4);
  CHECK(h.trace.rows.back().loss < 1e-8);
  CHECK(h.trace.wolfe_violations == 0);
  // Loss never increases along the accepted iterates.
  for (std::size_t k = 1; k < h.trace.rows.size(); ++k)
    REQUIRE(h.trace.rows[k].loss <= h.trace.rows[k - 1].loss + 1e-15);
}

TEST_CASE("lbfgs reports immediate convergence at the optimum") {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  TrainConfig cfg;
  Harness h;
  lbfgs(quadratic_diag(4), x, 50, cfg, h.trace, h.best, h.start);
  CHECK(h.trace.status == "converged-early");
  CHECK(h.trace.rows.size() == 1);
  CHECK(h.trace.rows[0].iteration == 0);
}

TEST_CASE("lbfgs reports a line-search failure on an unbounded slope") {
  // f(x) = x has no curvature, so the strong Wolfe conditions are unattainable.
  Objective line = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(1);
    g[0] = 1.0;
    return x[0];
  };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  TrainConfig cfg;
  Harness h;
  lbfgs(line, x, 10, cfg, h.trace, h.best, h.start);
  CHECK(h.trace.status == "line-search-failure");
  CHECK(x[0] < 0.0);   // still made progress downhill before giving up
}

TEST_CASE("trace files carry the exact rows") {
  TrainTrace trace;
  trace.rows.push_back({"adam", 0, 0.5, 1.0, 0.25});
  trace.rows.push_back({"lbfgs", 3, 0.125, 0.0625, 1.5});
  auto path = std::filesystem::temp_directory_path() / "tsecert_trace_test.csv";
  write_trace_csv(trace, path);

  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() ==
        "phase,iteration,loss,grad_norm,seconds\n"
        "adam,0,0.5,1,0.250000\n"
        "lbfgs,3,0.125,0.0625,1.500000\n");
}

TEST_CASE("config presets and validation") {
  TrainConfig full = TrainConfig::full();
  CHECK(full.adam_iters == 15000);
  CHECK(full.lbfgs_iters == 50000);
  TrainConfig desk = TrainConfig::desk();
  CHECK(desk.adam_iters == 2000);
  CHECK(desk.lbfgs_iters == 3000);
  CHECK_NOTHROW(full.validate());
  CHECK_NOTHROW(desk.validate());

  TrainConfig bad = full;
  bad.wolfe_c1 = 0.95;   // c1 must stay below c2
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = full;
  bad.adam_lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = full;
  bad.lbfgs_memory = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("training a small network improves on the start and records provenance") {
  ModelParams m = init_model(hidden_architecture(6, 2), 19, InputScaling::for_domain(1.0, 1.0));
  std::vector<Sample> samples;
  for (int i = 0; i < 30; ++i) {
    double x = i / 29.0;
    samples.push_back({x, 1.0 - x, 0.05 + 0.02 * std::cos(3.0 * x)});
  }
  TrainConfig cfg;
  cfg.adam_iters = 60;
  cfg.lbfgs_iters = 60;
  TrainResult r = train(m, samples, cfg);

  REQUIRE_FALSE(r.trace.rows.empty());
  double initial = r.trace.rows.front().loss;
  CHECK(r.trace.best_loss <= initial);
  CHECK(r.trace.best_loss < 0.5 * initial);
  CHECK(r.model.provenance.adam_iters == 60);
  CHECK(r.model.provenance.lbfgs_iters == 60);
  bool known = r.trace.status == "completed" || r.trace.status == "converged-early" ||
               r.trace.status == "line-search-failure";
  CHECK(known);

  // The returned parameters reproduce the reported best loss.
  TrainingObjective check(m, samples);
  Eigen::VectorXd g;
  CHECK(check(r.model.flatten(), g) == r.trace.best_loss);
}

TEST_CASE("a zero iteration budget leaves parameters untouched") {
  ModelParams m = init_model(hidden_architecture(4, 1), 5, InputScaling::for_domain(1.0, 1.0));
  std::vector<Sample> samples;
  for (int i = 0; i < 10; ++i) samples.push_back({i / 9.0, 0.5, 0.04});
  TrainConfig cfg;
  cfg.adam_iters = 0;
  cfg.lbfgs_iters = 0;
  TrainResult r = train(m, samples, cfg);

  Eigen::VectorXd before = m.flatten(), after = r.model.flatten();
  REQUIRE(before.size() == after.size());
  CHECK((before - after).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.trace.status == "completed");
}
