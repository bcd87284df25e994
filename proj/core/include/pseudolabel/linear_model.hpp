#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pseudolabel/corpus.hpp"
#include "pseudolabel/features.hpp"
#include "pseudolabel/label.hpp"

namespace pseudolabel {

// Raw pre-softmax class scores in canonical label order.
using Logits = std::array<double, kNumClasses>;
using Probabilities = std::array<double, kNumClasses>;

Probabilities softmax(const Logits& logits);

// Index of the largest entry; ties go to the lower class index.
SeverityLabel argmax(const Logits& logits);

enum class Optimizer { Sgd, AdaptiveMoment };

std::string_view to_string(Optimizer opt);
std::optional<Optimizer> parse_optimizer(std::string_view name);

struct TrainConfig {
  Optimizer optimizer = Optimizer::Sgd;
  double learning_rate = 0.1;
  std::uint32_t max_input_length = 256;
  std::uint32_t batch_size = 8;
  std::uint32_t epochs = 10;
  double l2_penalty = 1e-6;
  std::uint64_t seed = 0;
  std::uint64_t dimension = std::uint64_t{1} << 18;

  // Adam moments.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // Throws ConfigError.
  void validate() const;
  FeatureConfig features() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Multinomial logistic regression over hashed n-gram features.
// weights is row-major kNumClasses x dimension.
class LinearModel {
 public:
  LinearModel() : LinearModel(FeatureConfig{}) {}
  explicit LinearModel(FeatureConfig features);

  const FeatureConfig& features() const { return features_; }
  std::uint64_t dimension() const { return features_.dimension; }

  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }
  std::span<double> row(std::size_t cls) {
    return std::span<double>(weights_).subspan(cls * dimension(), dimension());
  }
  std::span<const double> row(std::size_t cls) const {
    return std::span<const double>(weights_).subspan(cls * dimension(), dimension());
  }
  std::array<double, kNumClasses>& bias() { return bias_; }
  const std::array<double, kNumClasses>& bias() const { return bias_; }

  Logits logits(const FeatureVector& x) const;
  Logits logits(std::string_view text) const;

  bool all_finite() const;

  friend bool operator==(const LinearModel&, const LinearModel&) = default;

 private:
  FeatureConfig features_;
  std::vector<double> weights_;
  std::array<double, kNumClasses> bias_{};
};

struct LabeledVector {
  FeatureVector x;
  SeverityLabel y;
};

struct Gradient {
  std::vector<double> weights;  // same layout as LinearModel::weights
  std::array<double, kNumClasses> bias{};
};

// Mean cross-entropy over `batch` plus (l2/2)*||W||^2 (bias unpenalized).
double objective(const LinearModel& model, std::span<const LabeledVector> batch,
                 double l2_penalty);

// Dense analytic gradient of objective().
Gradient objective_gradient(const LinearModel& model,
                            std::span<const LabeledVector> batch,
                            double l2_penalty);

struct FitResult {
  LinearModel model;
  // Full-data objective after each epoch.
  std::vector<double> epoch_objective;
};

// Minibatch training from `init` (zeros when omitted). Data are reshuffled
// every epoch from cfg.seed. Throws DataError on an empty dataset or a
// non-finite batch loss.
FitResult fit(const Dataset& ds, const TrainConfig& cfg);
FitResult fit(const Dataset& ds, const TrainConfig& cfg, const LinearModel& init);

// Order-preserving. Work is split across up to `threads` workers
// (0 = hardware concurrency); results do not depend on the thread count.
std::vector<Logits> predict_logits(const LinearModel& model,
                                   std::span<const std::string> texts,
                                   unsigned threads = 0);

// Binary container: magic "PLLM", u32 format version, feature config,
// bias, then row-major weights; little-endian IEEE-754 doubles.
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path);

}  // namespace pseudolabel
