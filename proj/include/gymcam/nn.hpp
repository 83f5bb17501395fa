#pragma once

// Small fully connected network used for the exercise detector, the
// repetition regressor and the exercise recogniser. Hidden layers are
// rectified; the output head depends on the task. Inputs are z-scored with
// constants fitted on the training split and stored in the model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gymcam/error.hpp"

namespace gymcam::nn {

enum class Task { kBinary, kRegression, kMulticlass };

inline std::string to_string(Task t) {
  switch (t) {
    case Task::kBinary: return "binary";
    case Task::kRegression: return "regression";
    case Task::kMulticlass: return "multiclass";
  }
  throw InternalError("unknown task");
}

inline Task task_from_string(const std::string& s) {
  if (s == "binary") return Task::kBinary;
  if (s == "regression") return Task::kRegression;
  if (s == "multiclass") return Task::kMulticlass;
  throw ValidationError("unknown task tag '" + s + "'");
}

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
};

inline constexpr int kModelVersion = 1;

struct MlpModel {
  Task task = Task::kBinary;
  std::vector<Layer> layers;
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_scale;
  // Regression targets are learned in z-space; predictions are mapped back.
  double target_mean = 0.0;
  double target_scale = 1.0;
  std::vector<std::string> class_labels;

  Eigen::Index input_size() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
  Eigen::Index output_size() const { return layers.empty() ? 0 : layers.back().weights.rows(); }

  std::vector<int> layer_sizes() const {
    std::vector<int> s;
    if (layers.empty()) return s;
    s.push_back(static_cast<int>(input_size()));
    for (const auto& l : layers) s.push_back(static_cast<int>(l.weights.rows()));
    return s;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
  }

  std::string output_activation() const {
    switch (task) {
      case Task::kBinary: return "sigmoid";
      case Task::kRegression: return "identity";
      case Task::kMulticlass: return "softmax";
    }
    return "identity";
  }
};

struct TrainConfig {
  std::vector<int> hidden = {100};
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2 = 1e-4;
  int batch_size = 32;
  int max_epochs = 200;
  int patience = 20;
  double validation_fraction = 0.1;
  // Per-class loss multipliers for classification (index = class). Empty
  // means uniform.
  std::vector<double> class_weights;
  std::uint64_t seed = 0;
};

struct TrainResult {
  MlpModel model;
  std::vector<double> validation_loss;       // per epoch
  std::vector<double> best_validation_loss;  // running minimum per epoch
  int best_epoch = 0;
};

// ---------------------------------------------------------------------------
// Forward pass

namespace detail {

inline Eigen::MatrixXd standardize(const MlpModel& m, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = x.rowwise() - m.input_mean.transpose();
  return z.array().rowwise() / m.input_scale.transpose().array();
}

inline void softmax_rows(Eigen::MatrixXd& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - mx).exp();
    z.row(i) /= z.row(i).sum();
  }
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// softplus(z) = log(1 + e^z), computed without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Activations {
  std::vector<Eigen::MatrixXd> a;  // a[0] = input, a[l+1] = output of layer l (pre-head for the last)
};

// Forward pass on standardised inputs; the last entry holds output logits.
inline Activations forward_logits(const MlpModel& m, const Eigen::MatrixXd& x) {
  Activations acts;
  acts.a.reserve(m.layers.size() + 1);
  acts.a.push_back(x);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    Eigen::MatrixXd z = acts.a.back() * m.layers[l].weights.transpose();
    z.rowwise() += m.layers[l].bias.transpose();
    if (l + 1 < m.layers.size()) z = z.cwiseMax(0.0);
    acts.a.push_back(std::move(z));
  }
  return acts;
}

}  // namespace detail

// Raw outputs for each row of x (unstandardised features): probabilities for
// classification, target-space values for regression.
inline Eigen::MatrixXd predict_batch(const MlpModel& m, const Eigen::MatrixXd& x) {
  if (x.cols() != m.input_size())
    throw ValidationError("input has " + std::to_string(x.cols()) + " features, model expects " +
                          std::to_string(m.input_size()));
  Eigen::MatrixXd out = detail::forward_logits(m, detail::standardize(m, x)).a.back();
  switch (m.task) {
    case Task::kBinary: out = out.unaryExpr([](double z) { return detail::sigmoid(z); }); break;
    case Task::kMulticlass: detail::softmax_rows(out); break;
    case Task::kRegression: out = (out.array() * m.target_scale + m.target_mean).matrix(); break;
  }
  return out;
}

inline std::vector<double> predict(const MlpModel& m, std::span<const double> x) {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = x[i];
  const Eigen::MatrixXd out = predict_batch(m, row);
  return {out.data(), out.data() + out.size()};
}

// ---------------------------------------------------------------------------
// Loss and gradients

// Training targets. For classification `y` holds class indices; for
// regression the (already standardised) target.
struct Batch {
  Eigen::MatrixXd x;  // standardised inputs, one row per sample
  Eigen::VectorXd y;
  Eigen::VectorXd weight;  // per-sample loss multiplier
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
};

// Mean weighted data loss plus the L2 penalty 0.5 * l2 * |W|^2 / n.
inline double loss(const MlpModel& m, const Batch& b, double l2) {
  const auto acts = detail::forward_logits(m, b.x);
  const Eigen::MatrixXd& z = acts.a.back();
  const auto n = static_cast<double>(b.x.rows());
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double li = 0.0;
    switch (m.task) {
      case Task::kBinary: li = detail::softplus(z(i, 0)) - b.y(i) * z(i, 0); break;
      case Task::kRegression: li = 0.5 * (z(i, 0) - b.y(i)) * (z(i, 0) - b.y(i)); break;
      case Task::kMulticlass: {
        const double mx = z.row(i).maxCoeff();
        const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
        li = lse - z(i, static_cast<Eigen::Index>(b.y(i)));
        break;
      }
    }
    total += b.weight(i) * li;
  }
  double penalty = 0.0;
  for (const auto& l : m.layers) penalty += l.weights.squaredNorm();
  return total / n + 0.5 * l2 * penalty / n;
}

inline Gradients gradients(const MlpModel& m, const Batch& b, double l2) {
  const auto acts = detail::forward_logits(m, b.x);
  const auto n = static_cast<double>(b.x.rows());
  Eigen::MatrixXd delta = acts.a.back();
  switch (m.task) {
    case Task::kBinary:
      for (Eigen::Index i = 0; i < delta.rows(); ++i) delta(i, 0) = detail::sigmoid(delta(i, 0)) - b.y(i);
      break;
    case Task::kRegression:
      delta.col(0) -= b.y;
      break;
    case Task::kMulticlass:
      detail::softmax_rows(delta);
      for (Eigen::Index i = 0; i < delta.rows(); ++i) delta(i, static_cast<Eigen::Index>(b.y(i))) -= 1.0;
      break;
  }
  delta.array().colwise() *= b.weight.array();
  delta /= n;

  Gradients g;
  g.weights.resize(m.layers.size());
  g.bias.resize(m.layers.size());
  for (std::size_t l = m.layers.size(); l-- > 0;) {
    g.weights[l] = delta.transpose() * acts.a[l] + (l2 / n) * m.layers[l].weights;
    g.bias[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Eigen::MatrixXd back = delta * m.layers[l].weights;
    delta = (acts.a[l].array() > 0.0).select(back, 0.0);
  }
  return g;
}

// Largest relative discrepancy between analytic gradients and central
// differences (step 1e-5) over every parameter. The denominator is floored
// at 1e-6 so parameters with vanishing gradient are judged on absolute error.
inline double gradient_check(const MlpModel& model, const Batch& b, double l2 = 0.0, double step = 1e-5) {
  const Gradients g = gradients(model, b, l2);
  MlpModel m = model;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + step;
    const double up = loss(m, b, l2);
    param = saved - step;
    const double down = loss(m, b, l2);
    param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto& layer = m.layers[l];
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) check(layer.weights.data()[i], g.weights[l].data()[i]);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) check(layer.bias.data()[i], g.bias[l].data()[i]);
  }
  return worst;
}

// Standard-normal inputs with targets valid for the model's task, unit
// weights. Used to exercise gradient_check.
inline Batch random_batch(const MlpModel& m, Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Batch b{Eigen::MatrixXd(n, m.input_size()), Eigen::VectorXd(n), Eigen::VectorXd::Ones(n)};
  for (Eigen::Index i = 0; i < b.x.size(); ++i) b.x.data()[i] = gauss(rng);
  std::uniform_int_distribution<Eigen::Index> cls(0, std::max<Eigen::Index>(1, m.output_size()) - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (m.task) {
      case Task::kBinary: b.y(i) = static_cast<double>(rng() & 1U); break;
      case Task::kRegression: b.y(i) = gauss(rng); break;
      case Task::kMulticlass: b.y(i) = static_cast<double>(cls(rng)); break;
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Construction and training

// Glorot-uniform initialisation (gain 2 on a sigmoid head), identity
// standardisation.
inline MlpModel make_model(Task task, std::span<const int> sizes, std::mt19937_64& rng) {
  if (sizes.size() < 2) throw ValidationError("a network needs at least input and output sizes");
  for (int s : sizes)
    if (s <= 0) throw ValidationError("layer sizes must be positive");
  MlpModel m;
  m.task = task;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    const bool sigmoid_head = task == Task::kBinary && l + 2 == sizes.size();
    const double gain = sigmoid_head ? 2.0 : 6.0;
    const double limit = std::sqrt(gain / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Layer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = u(rng);
    m.layers.push_back(std::move(layer));
  }
  m.input_mean = Eigen::VectorXd::Zero(sizes.front());
  m.input_scale = Eigen::VectorXd::Ones(sizes.front());
  return m;
}

namespace detail {

inline void require_finite(const Eigen::MatrixXd& x, std::span<const double> y) {
  if (!x.allFinite()) throw ValidationError("training features contain non-finite values");
  for (double v : y)
    if (!std::isfinite(v)) throw ValidationError("training targets contain non-finite values");
}

inline Batch gather(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                    std::span<const std::size_t> rows) {
  Batch b{Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), xs.cols()),
          Eigen::VectorXd(static_cast<Eigen::Index>(rows.size())),
          Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()))};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    b.x.row(static_cast<Eigen::Index>(i)) = xs.row(r);
    b.y(static_cast<Eigen::Index>(i)) = y(r);
    b.weight(static_cast<Eigen::Index>(i)) = w(r);
  }
  return b;
}

}  // namespace detail

// Trains a network with Adam on mini-batches, early-stopping on a held-out
// validation split. For classification, y holds class indices 0..K-1 and
// class_labels names them (K >= 2). Deterministic for a given cfg.seed.
inline TrainResult train(const Eigen::MatrixXd& x, std::span<const double> y, const TrainConfig& cfg, Task task,
                         std::vector<std::string> class_labels = {}) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n != y.size()) throw ValidationError("feature rows and targets differ in length");
  if (n < 2) throw ValidationError("training needs at least 2 samples");
  if (cfg.learning_rate <= 0 || cfg.batch_size <= 0 || cfg.max_epochs <= 0 || cfg.patience <= 0 ||
      cfg.beta1 <= 0 || cfg.beta2 <= 0 || cfg.validation_fraction <= 0 || cfg.validation_fraction >= 1)
    throw ValidationError("training configuration values must be positive");
  detail::require_finite(x, y);

  int classes = 1;
  if (task != Task::kRegression) {
    int max_label = -1;
    for (double v : y) {
      if (v < 0 || v != std::floor(v)) throw ValidationError("class targets must be non-negative integers");
      max_label = std::max(max_label, static_cast<int>(v));
    }
    std::vector<int> seen(static_cast<std::size_t>(max_label + 1), 0);
    for (double v : y) seen[static_cast<std::size_t>(v)] = 1;
    const int distinct = std::accumulate(seen.begin(), seen.end(), 0);
    if (distinct < 2) throw ValidationError("classification needs at least 2 classes present");
    if (task == Task::kBinary && max_label > 1) throw ValidationError("binary targets must be 0 or 1");
    classes = task == Task::kBinary ? 2 : std::max<int>(max_label + 1, static_cast<int>(class_labels.size()));
  }
  if (task == Task::kMulticlass && class_labels.empty())
    for (int c = 0; c < classes; ++c) class_labels.push_back(std::to_string(c));

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_val =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(cfg.validation_fraction * static_cast<double>(n))), 1,
                              n - 1);
  std::vector<std::size_t> val_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(x.cols()));
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(task == Task::kMulticlass ? classes : 1);
  MlpModel model = make_model(task, sizes, rng);
  model.class_labels = std::move(class_labels);

  // Standardisation constants from the training split only.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(x.cols());
  for (auto r : train_rows) mean += x.row(static_cast<Eigen::Index>(r)).transpose();
  mean /= static_cast<double>(train_rows.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(x.cols());
  for (auto r : train_rows) var += (x.row(static_cast<Eigen::Index>(r)).transpose() - mean).cwiseAbs2();
  var /= static_cast<double>(train_rows.size());
  model.input_mean = mean;
  model.input_scale = var.cwiseSqrt().unaryExpr([](double s) { return s > 1e-12 ? s : 1.0; });

  Eigen::VectorXd targets(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) targets(static_cast<Eigen::Index>(i)) = y[i];
  if (task == Task::kRegression) {
    double tm = 0.0, tv = 0.0;
    for (auto r : train_rows) tm += y[r];
    tm /= static_cast<double>(train_rows.size());
    for (auto r : train_rows) tv += (y[r] - tm) * (y[r] - tm);
    tv /= static_cast<double>(train_rows.size());
    model.target_mean = tm;
    model.target_scale = std::sqrt(tv) > 1e-12 ? std::sqrt(tv) : 1.0;
    targets = (targets.array() - model.target_mean) / model.target_scale;
  }
  Eigen::VectorXd sample_weight = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  if (task != Task::kRegression && !cfg.class_weights.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(y[i]);
      if (c < cfg.class_weights.size()) sample_weight(static_cast<Eigen::Index>(i)) = cfg.class_weights[c];
    }
  }
  const Eigen::MatrixXd xs = detail::standardize(model, x);
  const Batch val = detail::gather(xs, targets, sample_weight, val_rows);

  // Adam moments.
  Gradients m1, m2;
  for (const auto& l : model.layers) {
    m1.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    m1.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  m2 = m1;
  long step = 0;

  TrainResult result;
  MlpModel best = model;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(train_rows.begin(), train_rows.end(), rng);
    for (std::size_t start = 0; start < train_rows.size(); start += batch) {
      const std::size_t stop = std::min(train_rows.size(), start + batch);
      const Batch b = detail::gather(xs, targets, sample_weight,
                                     std::span<const std::size_t>(train_rows).subspan(start, stop - start));
      const Gradients g = gradients(model, b, cfg.l2);
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      const double lr = cfg.learning_rate * std::sqrt(c2) / c1;
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        m1.weights[l] = cfg.beta1 * m1.weights[l] + (1 - cfg.beta1) * g.weights[l];
        m2.weights[l] = cfg.beta2 * m2.weights[l] + (1 - cfg.beta2) * g.weights[l].cwiseAbs2();
        model.layers[l].weights.array() -= lr * m1.weights[l].array() / (m2.weights[l].array().sqrt() + cfg.epsilon);
        m1.bias[l] = cfg.beta1 * m1.bias[l] + (1 - cfg.beta1) * g.bias[l];
        m2.bias[l] = cfg.beta2 * m2.bias[l] + (1 - cfg.beta2) * g.bias[l].cwiseAbs2();
        model.layers[l].bias.array() -= lr * m1.bias[l].array() / (m2.bias[l].array().sqrt() + cfg.epsilon);
      }
    }
    const double vl = loss(model, val, 0.0);
    result.validation_loss.push_back(vl);
    if (vl < best_loss) {
      best_loss = vl;
      best = model;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      result.best_validation_loss.push_back(best_loss);
      break;
    }
    result.best_validation_loss.push_back(best_loss);
  }
  result.model = std::move(best);
  return result;
}

// ---------------------------------------------------------------------------
// Serialisation

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw ValidationError("weight matrix has wrong row count");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ValidationError("weight matrix has wrong column count");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace detail

inline nlohmann::json to_json(const MlpModel& m) {
  nlohmann::json j;
  j["format"] = "gymcam-mlp";
  j["version"] = kModelVersion;
  j["task"] = to_string(m.task);
  j["layer_sizes"] = m.layer_sizes();
  nlohmann::json acts = nlohmann::json::array();
  for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) acts.push_back("relu");
  acts.push_back(m.output_activation());
  j["activations"] = acts;
  j["input_mean"] = detail::vector_to_json(m.input_mean);
  j["input_scale"] = detail::vector_to_json(m.input_scale);
  j["target_mean"] = m.target_mean;
  j["target_scale"] = m.target_scale;
  j["class_labels"] = m.class_labels;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers)
    layers.push_back({{"weights", detail::matrix_to_json(l.weights)}, {"bias", detail::vector_to_json(l.bias)}});
  j["layers"] = layers;
  return j;
}

inline MlpModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "gymcam-mlp") throw ValidationError("not a gymcam-mlp model");
    const int version = j.at("version").get<int>();
    if (version != kModelVersion)
      throw ValidationError("model version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kModelVersion) + ")");
    MlpModel m;
    m.task = task_from_string(j.at("task").get<std::string>());
    const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
    if (sizes.size() < 2) throw ValidationError("model has fewer than two layer sizes");
    const auto& layers = j.at("layers");
    if (layers.size() + 1 != sizes.size()) throw ValidationError("layer count does not match layer_sizes");
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      Layer layer;
      layer.weights = detail::matrix_from_json(layers[l].at("weights"), sizes[l + 1], sizes[l]);
      layer.bias = detail::vector_from_json(layers[l].at("bias"));
      if (layer.bias.size() != sizes[l + 1]) throw ValidationError("bias length does not match layer size");
      m.layers.push_back(std::move(layer));
    }
    m.input_mean = detail::vector_from_json(j.at("input_mean"));
    m.input_scale = detail::vector_from_json(j.at("input_scale"));
    if (m.input_mean.size() != sizes.front() || m.input_scale.size() != sizes.front())
      throw ValidationError("standardisation constants do not match input size");
    if ((m.input_scale.array() <= 0.0).any()) throw ValidationError("standardisation scale must be > 0");
    m.target_mean = j.value("target_mean", 0.0);
    m.target_scale = j.value("target_scale", 1.0);
    m.class_labels = j.value("class_labels", std::vector<std::string>{});
    if (m.task == Task::kMulticlass && static_cast<Eigen::Index>(m.class_labels.size()) != sizes.back())
      throw ValidationError("class label count does not match output size");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model: ") + e.what());
  }
}

}  // namespace gymcam::nn
