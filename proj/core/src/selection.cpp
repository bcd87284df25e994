#include "pseudolabel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "pseudolabel/error.hpp"

namespace pseudolabel {

std::string_view to_string(RankingScore score) {
  switch (score) {
    case RankingScore::RawLogit: return "raw_logit";
    case RankingScore::Probability: return "probability";
    case RankingScore::Margin: return "margin";
  }
  return "?";
}

std::optional<RankingScore> parse_ranking_score(std::string_view name) {
  for (RankingScore s : {RankingScore::RawLogit, RankingScore::Probability, RankingScore::Margin}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

double ranking_score(const Logits& logits, RankingScore kind) {
  const std::size_t top = index_of(argmax(logits));
  switch (kind) {
    case RankingScore::RawLogit:
      return logits[top];
    case RankingScore::Probability:
      return softmax(logits)[top];
    case RankingScore::Margin: {
      double runner_up = -INFINITY;
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (c != top) runner_up = std::max(runner_up, logits[c]);
      }
      return logits[top] - runner_up;
    }
  }
  return 0.0;
}

void SelectionConfig::validate() const {
  if (k_per_class < 1) throw ConfigError("k_per_class must be at least 1");
}

std::vector<PseudoLabeledSample> select_top_k(std::span<const Logits> logits,
                                              std::span<const Post> posts,
                                              const SelectionConfig& cfg) {
  cfg.validate();
  if (logits.size() != posts.size()) {
    throw DataError("select_top_k: " + std::to_string(logits.size()) + " logit vectors for " +
                    std::to_string(posts.size()) + " posts");
  }

  struct Candidate {
    std::size_t index;
    double score;
  };
  std::array<std::vector<Candidate>, kNumClasses> pools;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    for (double v : logits[i]) {
      if (!std::isfinite(v)) throw DataError("non-finite logit for post '" + posts[i].id + "'");
    }
    pools[index_of(argmax(logits[i]))].push_back({i, ranking_score(logits[i], cfg.ranking)});
  }

  const auto better = [&](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return posts[a.index].id < posts[b.index].id;
  };

  std::vector<PseudoLabeledSample> out;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& pool = pools[c];
    const std::size_t keep = std::min(cfg.k_per_class, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(),
                      better);
    for (std::size_t r = 0; r < keep; ++r) {
      const Candidate& cand = pool[r];
      PseudoLabeledSample sample;
      sample.post = posts[cand.index];
      sample.post.label.reset();
      sample.pseudo_label = label_from_index(c);
      sample.score = cand.score;
      sample.teacher_probability = softmax(logits[cand.index])[c];
      out.push_back(std::move(sample));
    }
  }
  return out;
}

std::array<std::size_t, kNumClasses> class_counts(std::span<const PseudoLabeledSample> samples) {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& s : samples) ++counts[index_of(s.pseudo_label)];
  return counts;
}

Dataset build_pseudo_dataset(std::span<const PseudoLabeledSample> samples) {
  std::vector<Post> posts;
  posts.reserve(samples.size());
  std::unordered_set<std::string_view> ids;
  for (const auto& s : samples) {
    if (!ids.insert(s.post.id).second) {
      throw DataError("duplicate post id '" + s.post.id + "' in pseudo-labeled samples");
    }
    Post post = s.post;
    post.label = s.pseudo_label;
    posts.push_back(std::move(post));
  }
  return Dataset(DatasetKind::Labeled, std::move(posts));
}

void save_pseudo_samples(std::span<const PseudoLabeledSample> samples,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (const auto& s : samples) {
    nlohmann::ordered_json row;
    row["id"] = s.post.id;
    row["text"] = s.post.text;
    row["pseudo_label"] = to_string(s.pseudo_label);
    row["score"] = s.score;
    row["teacher_probability"] = s.teacher_probability;
    row["subreddit"] = s.post.subreddit ? nlohmann::ordered_json(*s.post.subreddit) : nullptr;
    out << row.dump() << '\n';
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::vector<PseudoLabeledSample> load_pseudo_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<PseudoLabeledSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto row = nlohmann::json::parse(line);
      PseudoLabeledSample s;
      s.post.id = row.at("id").get<std::string>();
      s.post.text = row.at("text").get<std::string>();
      const auto label = parse_label(row.at("pseudo_label").get<std::string>());
      if (!label) throw DataError(where + "field 'pseudo_label': unknown label");
      s.pseudo_label = *label;
      s.score = row.at("score").get<double>();
      s.teacher_probability = row.at("teacher_probability").get<double>();
      if (auto it = row.find("subreddit"); it != row.end() && !it->is_null()) {
        s.post.subreddit = it->get<std::string>();
      }
      samples.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + e.what());
    }
  }
  return samples;
}

}  // namespace pseudolabel
