#include "pseudolabel/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <cstdio>
#include <set>
#include <string_view>
#include <vector>

#include "pseudolabel/error.hpp"
#include "pseudolabel/hashing.hpp"

namespace pseudolabel {
namespace {

constexpr std::array<double, kNumClasses> kClassPrior = {0.35, 0.40, 0.25};

struct SubredditMix {
  std::string_view name;
  std::array<double, kNumClasses> weight;  // relative weight per class
};

// Where unlabeled posts of each true class tend to come from.
constexpr std::array<SubredditMix, 12> kSubreddits = {{
    {"r/depression", {0.02, 0.25, 0.30}},
    {"r/adhd", {0.05, 0.10, 0.28}},
    {"r/suicidewatch", {0.00, 0.03, 0.20}},
    {"r/anxiety", {0.10, 0.20, 0.07}},
    {"r/mentalhealth", {0.10, 0.15, 0.05}},
    {"r/lonely", {0.03, 0.10, 0.05}},
    {"r/ptsd", {0.02, 0.05, 0.03}},
    {"r/bipolarreddit", {0.03, 0.05, 0.02}},
    {"r/fitness", {0.20, 0.02, 0.00}},
    {"r/personalfinance", {0.20, 0.02, 0.00}},
    {"r/jokes", {0.15, 0.01, 0.00}},
    {"r/conspiracy", {0.10, 0.02, 0.00}},
}};

class Categorical {
 public:
  explicit Categorical(std::vector<double> weights) : cdf_(std::move(weights)) {
    double sum = 0.0;
    for (double& w : cdf_) {
      sum += w;
      w = sum;
    }
    for (double& w : cdf_) w /= sum;
  }
  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

Categorical zipf(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t r = 0; r < n; ++r) w[r] = 1.0 / std::pow(static_cast<double>(r + 1), exponent);
  return Categorical(std::move(w));
}

// Pronounceable, unique pseudo-words.
std::vector<std::string> make_words(std::size_t n, Rng& rng, std::set<std::string>& used) {
  static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p",
                                                 "r", "s", "t", "v", "z", "br", "st", "tr", "sh"};
  static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  std::vector<std::string> words;
  words.reserve(n);
  while (words.size() < n) {
    std::string w;
    const std::uint64_t syllables = 2 + rng.below(2);
    for (std::uint64_t s = 0; s < syllables; ++s) {
      w += kOnsets[rng.below(std::size(kOnsets))];
      w += kVowels[rng.below(std::size(kVowels))];
    }
    if (used.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

struct Generator {
  const SyntheticConfig& cfg;
  Rng rng;
  std::array<std::vector<std::string>, kNumClasses> keywords;
  std::vector<std::string> filler;
  Categorical keyword_rank;
  Categorical filler_rank;
  Categorical class_prior;
  std::array<Categorical, kNumClasses> subreddit_by_class;

  explicit Generator(const SyntheticConfig& c)
      : cfg(c),
        rng(c.seed),
        keyword_rank(zipf(c.keywords_per_class, 1.0)),
        filler_rank(zipf(c.filler_words, 0.8)),
        class_prior({kClassPrior.begin(), kClassPrior.end()}),
        subreddit_by_class{subreddit_weights(0), subreddit_weights(1), subreddit_weights(2)} {
    std::set<std::string> used;
    for (auto& vocab : keywords) vocab = make_words(c.keywords_per_class, rng, used);
    filler = make_words(c.filler_words, rng, used);
  }

  static Categorical subreddit_weights(std::size_t cls) {
    std::vector<double> w;
    for (const auto& s : kSubreddits) w.push_back(s.weight[cls]);
    return Categorical(std::move(w));
  }

  std::size_t neighbour(std::size_t cls) {
    if (cls == 1) return rng.below(2) == 0 ? 0 : 2;
    return 1;
  }

  std::string text_for(std::size_t cls) {
    const std::uint64_t length = 12 + rng.below(21);
    std::string out;
    for (std::uint64_t t = 0; t < length; ++t) {
      const double u = rng.uniform();
      const std::string* word = nullptr;
      if (u < cfg.class_keyword_rate) {
        word = &keywords[cls][keyword_rank.draw(rng)];
      } else if (u < cfg.class_keyword_rate + cfg.neighbour_keyword_rate) {
        word = &keywords[neighbour(cls)][keyword_rank.draw(rng)];
      } else {
        word = &filler[filler_rank.draw(rng)];
      }
      if (!out.empty()) out.push_back(' ');
      out += *word;
    }
    return out;
  }

  Dataset labeled(std::string_view prefix, std::size_t n, double noise) {
    std::vector<Post> posts;
    posts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t cls = class_prior.draw(rng);
      Post p;
      p.id = make_id(prefix, i);
      p.text = text_for(cls);
      std::size_t label = cls;
      if (noise > 0.0 && rng.uniform() < noise) label = (cls + 1 + rng.below(2)) % kNumClasses;
      p.label = label_from_index(label);
      posts.push_back(std::move(p));
    }
    return Dataset(DatasetKind::Labeled, std::move(posts));
  }

  Dataset unlabeled(std::size_t n) {
    std::vector<Post> posts;
    posts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t cls = class_prior.draw(rng);
      Post p;
      p.id = make_id("unl", i);
      p.text = text_for(cls);
      p.subreddit = std::string(kSubreddits[subreddit_by_class[cls].draw(rng)].name);
      posts.push_back(std::move(p));
    }
    return Dataset(DatasetKind::Unlabeled, std::move(posts));
  }

  static std::string make_id(std::string_view prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "-%06zu", i);
    return std::string(prefix) + buf;
  }
};

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& cfg) {
  if (cfg.keywords_per_class == 0 || cfg.filler_words == 0) {
    throw ConfigError("synthetic vocabularies must be non-empty");
  }
  if (!(cfg.label_noise >= 0.0 && cfg.label_noise <= 1.0)) {
    throw ConfigError("label_noise must lie in [0, 1]");
  }
  Generator gen(cfg);
  SyntheticCorpus corpus;
  corpus.train = gen.labeled("train", cfg.n_train, cfg.label_noise);
  corpus.dev = gen.labeled("dev", cfg.n_dev, 0.0);
  corpus.test = gen.labeled("test", cfg.n_test, 0.0);
  corpus.unlabeled = gen.unlabeled(cfg.n_unlabeled);
  return corpus;
}

}  // namespace pseudolabel
