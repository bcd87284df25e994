#pragma once

// Brute-force reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pseudolabel/corpus.hpp"
#include "pseudolabel/hashing.hpp"
#include "pseudolabel/label.hpp"
#include "pseudolabel/linear_model.hpp"
#include "pseudolabel/selection.hpp"

namespace pseudolabel::oracle {

struct Scores {
  double precision[3];
  double recall[3];
  double f1[3];
  double macro;
};

// Straight from the pair lists; 0/0 counts as 0.
inline Scores score(const std::vector<int>& gold, const std::vector<int>& pred) {
  Scores s{};
  double sum = 0;
  for (int c = 0; c < 3; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (pred[i] == c && gold[i] == c) tp += 1;
      if (pred[i] == c && gold[i] != c) fp += 1;
      if (pred[i] != c && gold[i] == c) fn += 1;
    }
    s.precision[c] = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    s.recall[c] = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double pr = s.precision[c] + s.recall[c];
    s.f1[c] = pr > 0 ? 2 * s.precision[c] * s.recall[c] / pr : 0.0;
    sum += s.f1[c];
  }
  s.macro = sum / 3;
  return s;
}

inline int first_max(const Logits& z) {
  int best = 0;
  for (int c = 1; c < 3; ++c)
    if (z[c] > z[best]) best = c;
  return best;
}

inline double rank_score(const Logits& z, RankingScore kind) {
  const int top = first_max(z);
  switch (kind) {
    case RankingScore::RawLogit: return z[top];
    case RankingScore::Margin: {
      double second = -INFINITY;
      for (int c = 0; c < 3; ++c)
        if (c != top && z[c] > second) second = z[c];
      return z[top] - second;
    }
    case RankingScore::Probability: {
      double denom = 0;
      for (int c = 0; c < 3; ++c) denom += std::exp(z[c] - z[top]);
      return 1.0 / denom;
    }
  }
  return 0;
}

struct Picked {
  std::string id;
  int label;
  friend bool operator==(const Picked&, const Picked&) = default;
};

// Counts, for every post, how many same-class posts beat it; the post is
// kept when fewer than k do. O(n^2).
inline std::vector<Picked> select(const std::vector<Logits>& logits,
                                  const std::vector<Post>& posts, std::size_t k,
                                  RankingScore kind) {
  const std::size_t n = posts.size();
  std::vector<int> cls(n);
  std::vector<double> sc(n);
  for (std::size_t i = 0; i < n; ++i) {
    cls[i] = first_max(logits[i]);
    sc[i] = rank_score(logits[i], kind);
  }
  // Position of each id in sorted order, so ties compare integers.
  std::vector<std::size_t> by_id(n), id_rank(n);
  for (std::size_t i = 0; i < n; ++i) by_id[i] = i;
  std::sort(by_id.begin(), by_id.end(),
            [&](std::size_t a, std::size_t b) { return posts[a].id < posts[b].id; });
  for (std::size_t r = 0; r < n; ++r) id_rank[by_id[r]] = r;

  std::vector<Picked> out;
  for (int c = 0; c < 3; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i)
      if (cls[i] == c) members.push_back(i);
    std::vector<std::pair<std::size_t, std::size_t>> kept;  // rank, index
    for (std::size_t i : members) {
      std::size_t beaten_by = 0;
      for (std::size_t j : members) {
        if (beaten_by >= k) break;
        if (sc[j] > sc[i] || (sc[j] == sc[i] && id_rank[j] < id_rank[i])) ++beaten_by;
      }
      if (beaten_by < k) kept.emplace_back(beaten_by, i);
    }
    std::vector<Picked> block(kept.size());
    for (const auto& [rank, i] : kept) block[rank] = {posts[i].id, c};
    out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

// Random selection instance. Logits are drawn from a coarse grid often
// enough to force score ties.
inline void random_selection_instance(Rng& rng, std::size_t n, std::vector<Logits>& logits,
                                      std::vector<Post>& posts) {
  logits.clear();
  posts.clear();
  const bool coarse = rng.below(2) == 0;
  for (std::size_t i = 0; i < n; ++i) {
    Logits z;
    for (double& v : z) {
      v = coarse ? static_cast<double>(rng.below(5)) * 0.5 : rng.uniform() * 8 - 4;
    }
    logits.push_back(z);
    Post p;
    p.id = "u" + std::to_string(rng.next() % 1000000007ULL) + "_" + std::to_string(i);
    p.text = "text " + std::to_string(i);
    posts.push_back(p);
  }
}

}  // namespace pseudolabel::oracle
