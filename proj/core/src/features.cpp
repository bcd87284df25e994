#include "pseudolabel/features.hpp"

#include <algorithm>
#include <cmath>

#include "pseudolabel/error.hpp"
#include "pseudolabel/hashing.hpp"
#include "pseudolabel/text.hpp"

namespace pseudolabel {

void FeatureConfig::validate() const {
  if (dimension == 0) throw ConfigError("feature dimension must be positive");
  if (max_input_length == 0) throw ConfigError("max_input_length must be positive");
  if (ngram_orders.empty()) throw ConfigError("at least one n-gram order is required");
  for (int order : ngram_orders) {
    if (order < 1 || order > 8) throw ConfigError("n-gram orders must lie in [1, 8]");
  }
}

double FeatureVector::norm() const {
  double sum = 0.0;
  for (const auto& [index, value] : entries) sum += value * value;
  return std::sqrt(sum);
}

std::vector<std::string> tokenize(std::string_view text, std::uint32_t max_tokens) {
  std::vector<std::string> tokens;
  for (std::string_view token : text::split_whitespace(text)) {
    if (tokens.size() >= max_tokens) break;
    tokens.push_back(text::to_lower(token));
  }
  return tokens;
}

std::uint64_t ngram_salt(int order) {
  return 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(order);
}

std::uint64_t hash_ngram(std::span<const std::string> tokens, int order) {
  const std::uint64_t salt = ngram_salt(order);
  char salt_bytes[8];
  for (int i = 0; i < 8; ++i) salt_bytes[i] = static_cast<char>((salt >> (8 * i)) & 0xFF);
  std::uint64_t h = fnv1a64(std::string_view(salt_bytes, 8));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i != 0) h = fnv1a64("\x1f", h);
    h = fnv1a64(tokens[i], h);
  }
  return h;
}

FeatureVector featurize(std::string_view text, const FeatureConfig& cfg) {
  const std::vector<std::string> tokens = tokenize(text, cfg.max_input_length);
  std::vector<std::uint64_t> indices;
  for (int order : cfg.ngram_orders) {
    const auto n = static_cast<std::size_t>(order);
    for (std::size_t start = 0; start + n <= tokens.size(); ++start) {
      const auto gram = std::span<const std::string>(tokens).subspan(start, n);
      indices.push_back(hash_ngram(gram, order) % cfg.dimension);
    }
  }
  std::sort(indices.begin(), indices.end());

  FeatureVector fv;
  for (std::uint64_t index : indices) {
    if (!fv.entries.empty() && fv.entries.back().first == index) {
      fv.entries.back().second += 1.0;
    } else {
      fv.entries.emplace_back(index, 1.0);
    }
  }
  const double norm = fv.norm();
  if (norm > 0.0) {
    for (auto& entry : fv.entries) entry.second /= norm;
  }
  return fv;
}

}  // namespace pseudolabel
