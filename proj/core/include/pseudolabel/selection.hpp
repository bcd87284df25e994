#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pseudolabel/corpus.hpp"
#include "pseudolabel/linear_model.hpp"

namespace pseudolabel {

enum class RankingScore {
  RawLogit,     // logit of the argmax class
  Probability,  // softmax probability of the argmax class
  Margin,       // top logit minus runner-up logit
};

std::string_view to_string(RankingScore score);
std::optional<RankingScore> parse_ranking_score(std::string_view name);

double ranking_score(const Logits& logits, RankingScore kind);

struct SelectionConfig {
  std::size_t k_per_class = 30000;
  RankingScore ranking = RankingScore::RawLogit;

  void validate() const;
};

struct PseudoLabeledSample {
  Post post;
  SeverityLabel pseudo_label = SeverityLabel::Low;
  double score = 0.0;
  double teacher_probability = 0.0;

  friend bool operator==(const PseudoLabeledSample&, const PseudoLabeledSample&) = default;
};

// Each post joins its argmax class only. Within a class, candidates are
// ordered by score descending then id ascending, and the first k_per_class
// survive. Output is the Low block, then Moderate, then Severe.
std::vector<PseudoLabeledSample> select_top_k(std::span<const Logits> logits,
                                              std::span<const Post> posts,
                                              const SelectionConfig& cfg);

std::array<std::size_t, kNumClasses> class_counts(
    std::span<const PseudoLabeledSample> samples);

// Hard labels only; subreddit provenance is kept on the posts.
// Throws DataError on duplicate ids.
Dataset build_pseudo_dataset(std::span<const PseudoLabeledSample> samples);

// pseudo.jsonl rows: id, text, pseudo_label, score, teacher_probability,
// subreddit (null when unknown).
void save_pseudo_samples(std::span<const PseudoLabeledSample> samples,
                         const std::filesystem::path& path);
std::vector<PseudoLabeledSample> load_pseudo_samples(const std::filesystem::path& path);

}  // namespace pseudolabel
