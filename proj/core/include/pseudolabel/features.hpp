#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <span>
#include <utility>
#include <vector>

namespace pseudolabel {

struct FeatureConfig {
  std::uint64_t dimension = std::uint64_t{1} << 18;
  // Word n-gram orders hashed into the feature space.
  std::vector<int> ngram_orders = {1, 2};
  // Only the first max_input_length tokens contribute.
  std::uint32_t max_input_length = 256;

  void validate() const;
  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

// Sparse, L2-normalized vector. Entries are sorted by index with no repeats.
struct FeatureVector {
  std::vector<std::pair<std::uint64_t, double>> entries;

  bool is_zero() const { return entries.empty(); }
  double norm() const;
};

// Lowercased, whitespace-split, truncated token list.
std::vector<std::string> tokenize(std::string_view text, std::uint32_t max_tokens);

// Salt mixed in before the n-gram bytes: 0x9e3779b97f4a7c15 * order.
std::uint64_t ngram_salt(int order);

// FNV-1a-64 over the 8 little-endian salt bytes followed by the tokens
// joined with 0x1f.
std::uint64_t hash_ngram(std::span<const std::string> tokens, int order);

FeatureVector featurize(std::string_view text, const FeatureConfig& cfg);

}  // namespace pseudolabel
