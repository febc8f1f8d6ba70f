#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tsecert/common.hpp"
#include "tsecert/dataset.hpp"
#include "tsecert/scenario.hpp"
#include "tsecert/version.hpp"

namespace tsecert {

/// Affine map taking raw (x, t) into the network's input range.
struct InputScaling {
  double x_scale = 1.0, x_offset = 0.0;
  double t_scale = 1.0, t_offset = 0.0;

  // [0, L] x [0, T] -> [-1, 1]^2
  static InputScaling for_domain(double length_m, double horizon_s) {
    return {2.0 / length_m, -1.0, 2.0 / horizon_s, -1.0};
  }
};

struct Provenance {
  std::uint64_t seed = 0;
  int adam_iters = 0;
  int lbfgs_iters = 0;
  std::string dataset_id;
  double trained_vf = 0.0;
  std::string tool_version = kVersion;
};

/// Dense feed-forward estimator rho_hat(x, t). Hidden layers tanh, output linear.
struct ModelParams {
  std::vector<int> layer_sizes;            // e.g. {2, 40, ..., 40, 1}
  std::string activation = "tanh";
  std::vector<Eigen::MatrixXd> weights;    // weights[l] is (sizes[l+1] x sizes[l])
  std::vector<Eigen::VectorXd> biases;
  InputScaling scaling;
  Provenance provenance;

  int layer_count() const { return static_cast<int>(layer_sizes.size()) - 1; }

  long parameter_count() const {
    long n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
      n += static_cast<long>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
    return n;
  }

  void validate() const {
    if (layer_sizes.size() < 2) throw ConfigError("model: need at least input and output layers");
    for (int s : layer_sizes)
      if (s < 1) throw ConfigError("model: layer sizes must be >= 1");
    if (layer_sizes.front() != 2) throw ConfigError("model: input layer must have size 2");
    if (layer_sizes.back() != 1) throw ConfigError("model: output layer must have size 1");
    if (activation != "tanh") throw ConfigError("model: unsupported activation '" + activation + "'");
    if (weights.size() != static_cast<std::size_t>(layer_count()) || biases.size() != weights.size())
      throw ConfigError("model: weight/bias count does not match layer sizes");
    for (int l = 0; l < layer_count(); ++l) {
      if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l] ||
          biases[l].size() != layer_sizes[l + 1])
        throw ConfigError("model: layer " + std::to_string(l) + " has wrong shape");
      if (!weights[l].allFinite() || !biases[l].allFinite())
        throw NumericError("model: layer " + std::to_string(l) + " has non-finite parameters");
    }
  }

  // Canonical parameter order: per layer, weights row-major, then biases.
  Eigen::VectorXd flatten() const {
    Eigen::VectorXd v(parameter_count());
    long k = 0;
    for (int l = 0; l < layer_count(); ++l) {
      for (long r = 0; r < weights[l].rows(); ++r)
        for (long c = 0; c < weights[l].cols(); ++c) v[k++] = weights[l](r, c);
      for (long r = 0; r < biases[l].size(); ++r) v[k++] = biases[l][r];
    }
    return v;
  }

  void unflatten(const Eigen::VectorXd& v) {
    if (v.size() != parameter_count())
      throw ConfigError("model: parameter vector has " + std::to_string(v.size()) + " entries, expected " +
                        std::to_string(parameter_count()));
    long k = 0;
    for (int l = 0; l < layer_count(); ++l) {
      for (long r = 0; r < weights[l].rows(); ++r)
        for (long c = 0; c < weights[l].cols(); ++c) weights[l](r, c) = v[k++];
      for (long r = 0; r < biases[l].size(); ++r) biases[l][r] = v[k++];
    }
  }
};

// Architecture used throughout: 2 inputs, `layers` hidden layers of `width`, 1 output.
inline std::vector<int> hidden_architecture(int width = 40, int layers = 10) {
  if (width < 1 || layers < 0) throw ConfigError("architecture: width >= 1, layers >= 0");
  std::vector<int> sizes{2};
  sizes.insert(sizes.end(), layers, width);
  sizes.push_back(1);
  return sizes;
}

// Glorot-uniform weights, zero biases, drawn in canonical parameter order
// from a seeded generator. Same seed and sizes give identical parameters.
inline ModelParams init_model(const std::vector<int>& sizes, std::uint64_t seed,
                              const InputScaling& scaling = {}) {
  ModelParams m;
  m.layer_sizes = sizes;
  m.scaling = scaling;
  m.provenance.seed = seed;
  if (sizes.size() < 2) throw ConfigError("model: need at least input and output layers");
  std::mt19937_64 gen(seed);
  auto unit = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l], fan_out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = (2.0 * unit() - 1.0) * limit;
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  m.validate();
  return m;
}

namespace detail {

// tanh via exp keeps Eigen on the vectorized path; saturates cleanly to +-1.
template <typename Derived>
inline void tanh_inplace(Eigen::ArrayBase<Derived>& a) {
  a = 1.0 - 2.0 / ((2.0 * a).exp() + 1.0);
}

}  // namespace detail

/// Per-call scratch for batched forward/backward passes; reused across calls
/// so the training loop does not reallocate.
struct MlpWorkspace {
  std::vector<Eigen::MatrixXd> acts;    // acts[0] = scaled input, acts[l] = layer l output
  std::vector<Eigen::MatrixXd> deltas;  // deltas[l] = dLoss/dZ_l
};

namespace detail {

// acts[last] holds the raw (linear) network output afterwards.
inline void mlp_forward(const ModelParams& m, const Eigen::MatrixXd& x_scaled, MlpWorkspace& ws) {
  const int L = m.layer_count();
  ws.acts.resize(L + 1);
  ws.acts[0] = x_scaled;
  for (int l = 0; l < L; ++l) {
    ws.acts[l + 1].resize(m.weights[l].rows(), x_scaled.cols());
    ws.acts[l + 1].noalias() = m.weights[l] * ws.acts[l];
    ws.acts[l + 1].colwise() += m.biases[l];
    if (l + 1 < L) {
      auto a = ws.acts[l + 1].array();
      tanh_inplace(a);
    }
  }
}

inline Eigen::MatrixXd scale_inputs(const InputScaling& s, const std::vector<Sample>& samples) {
  Eigen::MatrixXd x(2, static_cast<long>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    x(0, i) = s.x_scale * samples[i].x + s.x_offset;
    x(1, i) = s.t_scale * samples[i].t + s.t_offset;
  }
  return x;
}

// Loss is independent of sample order because every pass runs in this order.
inline void sort_canonical(std::vector<Sample>& samples) {
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.t != b.t) return a.t < b.t;
    return a.rho < b.rho;
  });
}

}  // namespace detail

inline double predict(const ModelParams& m, double x, double t) {
  Eigen::MatrixXd in(2, 1);
  in(0, 0) = m.scaling.x_scale * x + m.scaling.x_offset;
  in(1, 0) = m.scaling.t_scale * t + m.scaling.t_offset;
  MlpWorkspace ws;
  detail::mlp_forward(m, in, ws);
  return ws.acts.back()(0, 0);
}

// Raw (unclamped) predictions on the scenario grid, nx x nt.
inline Eigen::MatrixXd predict_grid(const ModelParams& m, const ScenarioSpec& spec) {
  const int nx = spec.nx(), nt = spec.nt();
  Eigen::MatrixXd out(nx, nt);
  const std::vector<double> ts = spec.ts();
  parallel_for(nx, [&](long begin, long end) {
    MlpWorkspace ws;
    Eigen::MatrixXd in(2, nt);
    for (long i = begin; i < end; ++i) {
      const double xs = m.scaling.x_scale * spec.x_at(static_cast<int>(i)) + m.scaling.x_offset;
      for (int j = 0; j < nt; ++j) {
        in(0, j) = xs;
        in(1, j) = m.scaling.t_scale * ts[j] + m.scaling.t_offset;
      }
      detail::mlp_forward(m, in, ws);
      out.row(i) = ws.acts.back().row(0);
    }
  });
  return out;
}

namespace detail {

// Mean squared error over prepared columns plus gradient in canonical order.
// X is 2 x N (already scaled), Y is 1 x N of observed densities.
inline double mlp_loss_grad_core(const ModelParams& m, const Eigen::MatrixXd& X,
                                 const Eigen::RowVectorXd& Y, MlpWorkspace& ws, Eigen::VectorXd& grad) {
  const int L = m.layer_count();
  const long N = X.cols();
  mlp_forward(m, X, ws);

  const double inv_n = 1.0 / static_cast<double>(N);
  Eigen::RowVectorXd r = ws.acts[L].row(0) - Y;
  const double loss = r.squaredNorm() * inv_n;

  ws.deltas.resize(L);
  ws.deltas[L - 1] = (2.0 * inv_n) * r;
  for (int l = L - 1; l > 0; --l) {
    ws.deltas[l - 1].resize(m.weights[l].cols(), N);
    ws.deltas[l - 1].noalias() = m.weights[l].transpose() * ws.deltas[l];
    ws.deltas[l - 1].array() *= 1.0 - ws.acts[l].array().square();
  }

  grad.resize(m.parameter_count());
  long k = 0;
  for (int l = 0; l < L; ++l) {
    const long rows = m.weights[l].rows(), cols = m.weights[l].cols();
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(
        grad.data() + k, rows, cols);
    gw.noalias() = ws.deltas[l] * ws.acts[l].transpose();
    k += rows * cols;
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + k, rows);
    gb.noalias() = ws.deltas[l].rowwise().sum();
    k += rows;
  }
  return loss;
}

}  // namespace detail

/// Mean squared density error and its gradient with respect to the canonical
/// parameter vector. The sample set is treated as a multiset: any ordering of
/// the same samples produces bit-identical results.
inline std::pair<double, Eigen::VectorXd> loss_and_gradient(const ModelParams& m,
                                                            std::vector<Sample> samples) {
  if (samples.empty()) throw ConfigError("loss_and_gradient: empty sample set");
  m.validate();
  detail::sort_canonical(samples);
  Eigen::MatrixXd X = detail::scale_inputs(m.scaling, samples);
  Eigen::RowVectorXd Y(static_cast<long>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) Y[static_cast<long>(i)] = samples[i].rho;
  MlpWorkspace ws;
  Eigen::VectorXd grad;
  double loss = detail::mlp_loss_grad_core(m, X, Y, ws, grad);
  if (!std::isfinite(loss)) throw NumericError("loss_and_gradient: non-finite loss");
  return {loss, std::move(grad)};
}

/// Reusable objective over a fixed sample set: sorts and scales once, then
/// evaluates loss/gradient at arbitrary parameter vectors.
class TrainingObjective {
 public:
  TrainingObjective(ModelParams shape, std::vector<Sample> samples) : model_(std::move(shape)) {
    if (samples.empty()) throw ConfigError("training objective: empty sample set");
    model_.validate();
    detail::sort_canonical(samples);
    x_ = detail::scale_inputs(model_.scaling, samples);
    y_.resize(static_cast<long>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) y_[static_cast<long>(i)] = samples[i].rho;
  }

  double operator()(const Eigen::VectorXd& params, Eigen::VectorXd& grad) {
    ++evals_;
    model_.unflatten(params);
    return detail::mlp_loss_grad_core(model_, x_, y_, ws_, grad);
  }

  long evals() const { return evals_; }
  const ModelParams& shape() const { return model_; }

 private:
  ModelParams model_;
  Eigen::MatrixXd x_;
  Eigen::RowVectorXd y_;
  MlpWorkspace ws_;
  long evals_ = 0;
};

inline nlohmann::json model_to_json(const ModelParams& m) {
  m.validate();
  Eigen::VectorXd p = m.flatten();
  return nlohmann::json{
      {"kind", "mlp"},
      {"layer_sizes", m.layer_sizes},
      {"activation", m.activation},
      {"parameters", std::vector<double>(p.data(), p.data() + p.size())},
      {"input_scaling",
       {{"x_scale", m.scaling.x_scale},
        {"x_offset", m.scaling.x_offset},
        {"t_scale", m.scaling.t_scale},
        {"t_offset", m.scaling.t_offset}}},
      {"provenance",
       {{"seed", m.provenance.seed},
        {"adam_iters", m.provenance.adam_iters},
        {"lbfgs_iters", m.provenance.lbfgs_iters},
        {"dataset_id", m.provenance.dataset_id},
        {"trained_vf", m.provenance.trained_vf},
        {"tool_version", m.provenance.tool_version}}}};
}

inline ModelParams model_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.value("kind", "mlp");
    if (kind != "mlp") throw ConfigError("model: unsupported kind '" + kind + "'");
    ModelParams m;
    m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    m.activation = j.at("activation").get<std::string>();
    for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
      m.weights.emplace_back(m.layer_sizes[l + 1], m.layer_sizes[l]);
      m.biases.emplace_back(Eigen::VectorXd::Zero(m.layer_sizes[l + 1]));
    }
    const auto& sc = j.at("input_scaling");
    m.scaling = {sc.at("x_scale").get<double>(), sc.at("x_offset").get<double>(),
                 sc.at("t_scale").get<double>(), sc.at("t_offset").get<double>()};
    const auto& pv = j.at("provenance");
    m.provenance.seed = pv.at("seed").get<std::uint64_t>();
    m.provenance.adam_iters = pv.at("adam_iters").get<int>();
    m.provenance.lbfgs_iters = pv.at("lbfgs_iters").get<int>();
    m.provenance.dataset_id = pv.at("dataset_id").get<std::string>();
    m.provenance.trained_vf = pv.at("trained_vf").get<double>();
    m.provenance.tool_version = pv.at("tool_version").get<std::string>();
    const auto params = j.at("parameters").get<std::vector<double>>();
    m.unflatten(Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<long>(params.size())));
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

inline void save_model(const ModelParams& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << model_to_json(m).dump(2) << "\n";
}

inline ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("model not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model file " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace tsecert
