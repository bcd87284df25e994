#include "pseudolabel/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "json.hpp"

namespace pseudolabel {

double DistributionReport::top_n_concentration(std::size_t n) const {
  if (total == 0) return 0.0;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < rows.size() && i < n; ++i) covered += rows[i].total;
  return static_cast<double>(covered) / static_cast<double>(total);
}

DistributionReport distribution(std::span<const PseudoLabeledSample> pseudo) {
  std::map<std::string, std::array<std::size_t, kNumClasses>> table;
  DistributionReport rep;
  for (const auto& s : pseudo) {
    const std::string name =
        s.post.subreddit ? *s.post.subreddit : std::string(kUnknownSubreddit);
    ++table[name][index_of(s.pseudo_label)];
    ++rep.class_totals[index_of(s.pseudo_label)];
    ++rep.total;
  }
  for (auto& [name, counts] : table) {
    SubredditRow row;
    row.subreddit = name;
    row.counts = counts;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      row.total += counts[c];
      row.class_share[c] = rep.class_totals[c] == 0
                               ? 0.0
                               : static_cast<double>(counts[c]) /
                                     static_cast<double>(rep.class_totals[c]);
    }
    row.fraction = static_cast<double>(row.total) / static_cast<double>(rep.total);
    rep.rows.push_back(std::move(row));
  }
  std::stable_sort(rep.rows.begin(), rep.rows.end(), [](const auto& a, const auto& b) {
    if (a.total != b.total) return a.total > b.total;
    return a.subreddit < b.subreddit;
  });
  rep.top5_concentration = rep.top_n_concentration(5);
  return rep;
}

std::string to_json(const DistributionReport& report) {
  nlohmann::ordered_json j;
  j["total"] = report.total;
  nlohmann::ordered_json totals;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    totals[std::string(to_string(label_from_index(c)))] = report.class_totals[c];
  }
  j["class_totals"] = totals;
  j["top5_concentration"] = report.top5_concentration;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r;
    r["subreddit"] = row.subreddit;
    r["total"] = row.total;
    r["fraction"] = row.fraction;
    nlohmann::ordered_json counts, shares;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const std::string name(to_string(label_from_index(c)));
      counts[name] = row.counts[c];
      shares[name] = row.class_share[c];
    }
    r["counts"] = counts;
    r["class_share"] = shares;
    rows.push_back(std::move(r));
  }
  j["subreddits"] = rows;
  return j.dump(2) + "\n";
}

namespace {

void append_row(std::string& out, std::string_view subreddit, std::size_t cls, std::size_t count,
                const DistributionReport& rep) {
  const double fraction =
      rep.total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(rep.total);
  const double share = rep.class_totals[cls] == 0
                           ? 0.0
                           : static_cast<double>(count) / static_cast<double>(rep.class_totals[cls]);
  const bool quote = subreddit.find_first_of(",\"\r\n") != std::string_view::npos;
  if (quote) {
    out.push_back('"');
    for (char c : subreddit) {
      if (c == '"') out.push_back('"');
      out.push_back(c);
    }
    out.push_back('"');
  } else {
    out.append(subreddit);
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, ",%s,%zu,%.6f,%.6f\n",
                std::string(to_string(label_from_index(cls))).c_str(), count, fraction, share);
  out += buf;
}

}  // namespace

std::string render_figure_data(const DistributionReport& report, std::size_t top_n) {
  std::string out = "subreddit,label,count,fraction_of_total,class_share\n";
  const std::size_t named = std::min(top_n, report.rows.size());
  for (std::size_t i = 0; i < named; ++i) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      append_row(out, report.rows[i].subreddit, c, report.rows[i].counts[c], report);
    }
  }
  if (named < report.rows.size()) {
    std::array<std::size_t, kNumClasses> other{};
    for (std::size_t i = named; i < report.rows.size(); ++i) {
      for (std::size_t c = 0; c < kNumClasses; ++c) other[c] += report.rows[i].counts[c];
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      append_row(out, kOtherSubreddits, c, other[c], report);
    }
  }
  return out;
}

}  // namespace pseudolabel
