#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pseudolabel/label.hpp"
#include "pseudolabel/selection.hpp"

namespace pseudolabel {

inline constexpr std::string_view kUnknownSubreddit = "unknown";
inline constexpr std::string_view kOtherSubreddits = "other";

struct SubredditRow {
  std::string subreddit;
  std::array<std::size_t, kNumClasses> counts{};
  std::size_t total = 0;
  // total / all pseudo-labels
  double fraction = 0.0;
  // counts[c] / class_totals[c]; 0 for classes with no pseudo-labels
  std::array<double, kNumClasses> class_share{};
};

struct DistributionReport {
  // Descending total, then ascending name.
  std::vector<SubredditRow> rows;
  std::array<std::size_t, kNumClasses> class_totals{};
  std::size_t total = 0;
  // Share of all pseudo-labels held by the five largest subreddits.
  double top5_concentration = 0.0;

  double top_n_concentration(std::size_t n) const;
};

DistributionReport distribution(std::span<const PseudoLabeledSample> pseudo);

std::string to_json(const DistributionReport& report);

// CSV header: subreddit,label,count,fraction_of_total,class_share
// Three rows (one per class) for each of the top_n subreddits, then one
// "other" row per class when subreddits remain.
std::string render_figure_data(const DistributionReport& report, std::size_t top_n);

}  // namespace pseudolabel
