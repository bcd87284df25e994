#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pseudolabel/label.hpp"

namespace pseudolabel {

// counts[gold][predicted]
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  std::size_t total() const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Throws DataError on length mismatch or empty input.
ConfusionMatrix confusion(std::span<const SeverityLabel> gold,
                          std::span<const SeverityLabel> predicted);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  friend bool operator==(const ClassScores&, const ClassScores&) = default;
};

// Undefined precision or recall (0/0) counts as 0, as does F1 when both are 0.
std::array<ClassScores, kNumClasses> per_class_scores(const ConfusionMatrix& cm);

// Unweighted mean over all three classes, absent classes included.
double macro_f1(const ConfusionMatrix& cm);

struct EvalReport {
  std::array<ClassScores, kNumClasses> per_class{};
  double macro_f1 = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  ConfusionMatrix confusion;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport evaluate(std::span<const SeverityLabel> gold,
                    std::span<const SeverityLabel> predicted, std::uint64_t seed = 0);

struct MultiRunReport {
  std::vector<EvalReport> runs;
  double mean_macro_f1 = 0.0;
  // Sample standard deviation (n - 1); 0 for a single run.
  double std_macro_f1 = 0.0;
  friend bool operator==(const MultiRunReport&, const MultiRunReport&) = default;
};

MultiRunReport aggregate(std::vector<EvalReport> runs);

// Runs `run_one` for every seed in order and aggregates. Seeds must be
// distinct (ConfigError). A failing run is rethrown as an Error prefixed
// with its seed.
MultiRunReport evaluate_runs(const std::function<EvalReport(std::uint64_t)>& run_one,
                             std::span<const std::uint64_t> seeds);

std::string to_json(const EvalReport& report);
std::string to_json(const MultiRunReport& report);
// One row per run: seed,n,macro_f1,f1_low,f1_moderate,f1_severe
std::string to_csv(const MultiRunReport& report);

}  // namespace pseudolabel
