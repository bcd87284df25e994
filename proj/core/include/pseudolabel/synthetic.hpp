#pragma once

#include <cstddef>
#include <cstdint>

#include "pseudolabel/corpus.hpp"

namespace pseudolabel {

// Toy 3-class corpus for end-to-end checks. Every class owns a keyword
// vocabulary with a Zipf-like frequency profile; posts mix a few class
// keywords, a few keywords of the neighbouring severity and shared filler
// words. A small labeled sample only sees the frequent keywords, so the
// unlabeled pool carries information the teacher lacks.
struct SyntheticConfig {
  std::size_t n_train = 300;
  std::size_t n_dev = 300;
  std::size_t n_test = 300;
  std::size_t n_unlabeled = 5000;
  // Fraction of train labels replaced by a different, uniformly drawn class.
  double label_noise = 0.10;
  std::size_t keywords_per_class = 300;
  std::size_t filler_words = 2000;
  // Per-token probability of drawing an own-class / neighbouring-class keyword.
  double class_keyword_rate = 0.30;
  double neighbour_keyword_rate = 0.08;
  std::uint64_t seed = 2023;
};

struct SyntheticCorpus {
  Dataset train{DatasetKind::Labeled};
  Dataset dev{DatasetKind::Labeled};
  Dataset test{DatasetKind::Labeled};
  Dataset unlabeled{DatasetKind::Unlabeled};
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& cfg);

}  // namespace pseudolabel
