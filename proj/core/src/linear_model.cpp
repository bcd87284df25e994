#include "pseudolabel/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "pseudolabel/error.hpp"
#include "pseudolabel/hashing.hpp"

namespace pseudolabel {

Probabilities softmax(const Logits& logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  Probabilities p{};
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    p[c] = std::exp(logits[c] - max);
    sum += p[c];
  }
  for (double& v : p) v /= sum;
  return p;
}

SeverityLabel argmax(const Logits& logits) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumClasses; ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return label_from_index(best);
}

std::string_view to_string(Optimizer opt) {
  return opt == Optimizer::Sgd ? "sgd" : "adam";
}

std::optional<Optimizer> parse_optimizer(std::string_view name) {
  if (name == "sgd") return Optimizer::Sgd;
  if (name == "adam" || name == "adaptive_moment") return Optimizer::AdaptiveMoment;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be a positive finite number");
  }
  if (max_input_length == 0) throw ConfigError("max_input_length must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(l2_penalty >= 0.0) || !std::isfinite(l2_penalty)) {
    throw ConfigError("l2_penalty must be a nonnegative finite number");
  }
  if (dimension == 0) throw ConfigError("feature dimension must be positive");
  if (optimizer == Optimizer::Sgd && learning_rate * l2_penalty >= 1.0) {
    throw ConfigError("learning_rate * l2_penalty must be below 1 for sgd");
  }
  if (optimizer == Optimizer::AdaptiveMoment) {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
      throw ConfigError("adam moments need beta1, beta2 in [0, 1) and epsilon > 0");
    }
  }
}

FeatureConfig TrainConfig::features() const {
  FeatureConfig f;
  f.dimension = dimension;
  f.max_input_length = max_input_length;
  return f;
}

LinearModel::LinearModel(FeatureConfig features)
    : features_(std::move(features)),
      weights_(kNumClasses * static_cast<std::size_t>(features_.dimension), 0.0) {}

Logits LinearModel::logits(const FeatureVector& x) const {
  Logits z = bias_;
  const std::size_t dim = dimension();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double* w = weights_.data() + c * dim;
    double dot = 0.0;
    for (const auto& [index, value] : x.entries) dot += w[index] * value;
    z[c] += dot;
  }
  return z;
}

Logits LinearModel::logits(std::string_view text) const {
  return logits(featurize(text, features_));
}

bool LinearModel::all_finite() const {
  return std::all_of(weights_.begin(), weights_.end(), [](double v) { return std::isfinite(v); }) &&
         std::all_of(bias_.begin(), bias_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

double sparse_dot(const double* row, const FeatureVector& x) {
  double dot = 0.0;
  for (const auto& [index, value] : x.entries) dot += row[index] * value;
  return dot;
}

// -log softmax(z)[y]
double cross_entropy(const Logits& z, std::size_t y) {
  const double max = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - max);
  return max + std::log(sum) - z[y];
}

double squared_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return sum;
}

// Weights are held as scale * raw so the L2 shrinkage of plain SGD is O(1)
// per step instead of O(D).
struct ScaledParams {
  std::vector<double> raw;
  double scale = 1.0;
  std::array<double, kNumClasses> bias{};
  std::size_t dim = 0;

  Logits logits(const FeatureVector& x) const {
    Logits z = bias;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      z[c] += scale * sparse_dot(raw.data() + c * dim, x);
    }
    return z;
  }

  void fold() {
    if (scale == 1.0) return;
    for (double& w : raw) w *= scale;
    scale = 1.0;
  }
};

double full_objective(const ScaledParams& params, std::span<const LabeledVector> data,
                      double l2_penalty) {
  double loss = 0.0;
  for (const auto& sample : data) {
    loss += cross_entropy(params.logits(sample.x), index_of(sample.y));
  }
  if (!data.empty()) loss /= static_cast<double>(data.size());
  if (l2_penalty > 0.0) {
    loss += 0.5 * l2_penalty * params.scale * params.scale * squared_norm(params.raw);
  }
  return loss;
}

std::vector<LabeledVector> featurize_dataset(const Dataset& ds, const FeatureConfig& features) {
  std::vector<LabeledVector> data;
  data.reserve(ds.size());
  for (const Post& post : ds) {
    data.push_back({featurize(post.text, features), *post.label});
  }
  return data;
}

[[noreturn]] void non_finite(std::uint32_t epoch, std::size_t batch, std::size_t first,
                             std::size_t count) {
  throw DataError("non-finite training loss at epoch " + std::to_string(epoch + 1) +
                  ", batch " + std::to_string(batch + 1) + " (shuffled samples " +
                  std::to_string(first) + ".." + std::to_string(first + count - 1) + ")");
}

}  // namespace

double objective(const LinearModel& model, std::span<const LabeledVector> batch,
                 double l2_penalty) {
  double loss = 0.0;
  for (const auto& sample : batch) {
    loss += cross_entropy(model.logits(sample.x), index_of(sample.y));
  }
  if (!batch.empty()) loss /= static_cast<double>(batch.size());
  return loss + 0.5 * l2_penalty * squared_norm(model.weights());
}

Gradient objective_gradient(const LinearModel& model, std::span<const LabeledVector> batch,
                            double l2_penalty) {
  Gradient g;
  g.weights.assign(model.weights().size(), 0.0);
  const std::size_t dim = model.dimension();
  const double inv_n = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
  for (const auto& sample : batch) {
    const Probabilities p = softmax(model.logits(sample.x));
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const double residual = (p[c] - (c == index_of(sample.y) ? 1.0 : 0.0)) * inv_n;
      g.bias[c] += residual;
      for (const auto& [index, value] : sample.x.entries) {
        g.weights[c * dim + index] += residual * value;
      }
    }
  }
  const auto w = model.weights();
  for (std::size_t i = 0; i < w.size(); ++i) g.weights[i] += l2_penalty * w[i];
  return g;
}

FitResult fit(const Dataset& ds, const TrainConfig& cfg) {
  return fit(ds, cfg, LinearModel(cfg.features()));
}

FitResult fit(const Dataset& ds, const TrainConfig& cfg, const LinearModel& init) {
  cfg.validate();
  if (ds.empty()) throw DataError("cannot fit on an empty dataset");
  if (ds.kind() != DatasetKind::Labeled) throw DataError("cannot fit on an unlabeled dataset");
  if (!(init.features() == cfg.features())) {
    throw ConfigError("initial model feature config does not match the training config");
  }

  const std::vector<LabeledVector> data = featurize_dataset(ds, init.features());
  const std::size_t n = data.size();
  const std::size_t dim = init.dimension();

  ScaledParams params;
  params.raw.assign(init.weights().begin(), init.weights().end());
  params.bias = init.bias();
  params.dim = dim;

  // Adam state; untouched for SGD.
  std::vector<double> m_w, v_w, dense_grad;
  std::array<double, kNumClasses> m_b{}, v_b{};
  if (cfg.optimizer == Optimizer::AdaptiveMoment) {
    m_w.assign(params.raw.size(), 0.0);
    v_w.assign(params.raw.size(), 0.0);
    dense_grad.assign(params.raw.size(), 0.0);
  }
  std::uint64_t step = 0;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(cfg.seed);

  const double lr = cfg.learning_rate;
  const double l2 = cfg.l2_penalty;
  std::vector<std::array<double, kNumClasses>> residuals(cfg.batch_size);

  FitResult result{LinearModel(init.features()), {}};
  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    std::size_t batch_index = 0;
    for (std::size_t first = 0; first < n; first += cfg.batch_size, ++batch_index) {
      const std::size_t count = std::min<std::size_t>(cfg.batch_size, n - first);
      const double inv = 1.0 / static_cast<double>(count);

      double batch_loss = 0.0;
      std::array<double, kNumClasses> bias_grad{};
      for (std::size_t k = 0; k < count; ++k) {
        const LabeledVector& sample = data[order[first + k]];
        const Logits z = params.logits(sample.x);
        const std::size_t y = index_of(sample.y);
        batch_loss += cross_entropy(z, y);
        const Probabilities p = softmax(z);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
          residuals[k][c] = (p[c] - (c == y ? 1.0 : 0.0)) * inv;
          bias_grad[c] += residuals[k][c];
        }
      }
      if (!std::isfinite(batch_loss)) non_finite(epoch, batch_index, first, count);

      ++step;
      if (cfg.optimizer == Optimizer::Sgd) {
        params.scale *= 1.0 - lr * l2;
        if (params.scale < 1e-6) params.fold();
        const double step_size = lr / params.scale;
        for (std::size_t k = 0; k < count; ++k) {
          const LabeledVector& sample = data[order[first + k]];
          for (std::size_t c = 0; c < kNumClasses; ++c) {
            double* row = params.raw.data() + c * dim;
            const double r = residuals[k][c];
            for (const auto& [index, value] : sample.x.entries) row[index] -= step_size * r * value;
          }
        }
        for (std::size_t c = 0; c < kNumClasses; ++c) params.bias[c] -= lr * bias_grad[c];
      } else {
        params.fold();
        for (std::size_t i = 0; i < dense_grad.size(); ++i) dense_grad[i] = l2 * params.raw[i];
        for (std::size_t k = 0; k < count; ++k) {
          const LabeledVector& sample = data[order[first + k]];
          for (std::size_t c = 0; c < kNumClasses; ++c) {
            const double r = residuals[k][c];
            for (const auto& [index, value] : sample.x.entries) {
              dense_grad[c * dim + index] += r * value;
            }
          }
        }
        const double t = static_cast<double>(step);
        const double c1 = 1.0 - std::pow(cfg.beta1, t);
        const double c2 = 1.0 - std::pow(cfg.beta2, t);
        const auto adam = [&](double& theta, double& m, double& v, double g) {
          m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
          v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
          theta -= lr * (m / c1) / (std::sqrt(v / c2) + cfg.epsilon);
        };
        for (std::size_t i = 0; i < dense_grad.size(); ++i) {
          adam(params.raw[i], m_w[i], v_w[i], dense_grad[i]);
        }
        for (std::size_t c = 0; c < kNumClasses; ++c) {
          adam(params.bias[c], m_b[c], v_b[c], bias_grad[c]);
        }
      }
    }
    const double epoch_loss = full_objective(params, data, l2);
    if (!std::isfinite(epoch_loss)) {
      throw DataError("non-finite training objective after epoch " + std::to_string(epoch + 1));
    }
    result.epoch_objective.push_back(epoch_loss);
  }

  params.fold();
  std::copy(params.raw.begin(), params.raw.end(), result.model.weights().begin());
  result.model.bias() = params.bias;
  if (!result.model.all_finite()) throw DataError("training produced non-finite weights");
  return result;
}

std::vector<Logits> predict_logits(const LinearModel& model, std::span<const std::string> texts,
                                   unsigned threads) {
  std::vector<Logits> out(texts.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  constexpr std::size_t kMinChunk = 256;
  const std::size_t workers =
      std::min<std::size_t>(threads, (texts.size() + kMinChunk - 1) / kMinChunk);
  const auto score = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = model.logits(texts[i]);
  };
  if (workers <= 1) {
    score(0, texts.size());
    return out;
  }
  const std::size_t chunk = (texts.size() + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(texts.size(), begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(score, begin, end);
  }
  pool.clear();
  return out;
}

}  // namespace pseudolabel
