#include "pseudolabel/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "json.hpp"
#include "pseudolabel/error.hpp"
#include "pseudolabel/text.hpp"

namespace pseudolabel {

std::string_view to_string(SeverityLabel label) {
  switch (label) {
    case SeverityLabel::Low: return "low";
    case SeverityLabel::Moderate: return "moderate";
    case SeverityLabel::Severe: return "severe";
  }
  return "?";
}

std::optional<SeverityLabel> parse_label(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (SeverityLabel label : kAllLabels) {
    if (lower == to_string(label)) return label;
  }
  return std::nullopt;
}

std::string allowed_labels() { return "low, moderate, severe"; }

Dataset::Dataset(DatasetKind kind, std::vector<Post> posts)
    : kind_(kind), posts_(std::move(posts)) {
  std::unordered_set<std::string_view> ids;
  ids.reserve(posts_.size());
  for (const Post& post : posts_) {
    if (post.id.empty()) throw DataError("post with empty id");
    if (!ids.insert(post.id).second) throw DataError("duplicate post id '" + post.id + "'");
    if (kind_ == DatasetKind::Labeled && !post.label) {
      throw DataError("post '" + post.id + "' has no label in a labeled dataset");
    }
    if (kind_ == DatasetKind::Unlabeled && post.label) {
      throw DataError("post '" + post.id + "' has a label in an unlabeled dataset");
    }
  }
}

std::vector<std::string> Dataset::texts() const {
  std::vector<std::string> out;
  out.reserve(posts_.size());
  for (const Post& p : posts_) out.push_back(p.text);
  return out;
}

std::vector<SeverityLabel> Dataset::labels() const {
  if (kind_ != DatasetKind::Labeled) throw DataError("labels() on an unlabeled dataset");
  std::vector<SeverityLabel> out;
  out.reserve(posts_.size());
  for (const Post& p : posts_) out.push_back(*p.label);
  return out;
}

Dataset as_unlabeled(const Dataset& ds) {
  std::vector<Post> posts = ds.posts();
  for (Post& p : posts) p.label.reset();
  return Dataset(DatasetKind::Unlabeled, std::move(posts));
}

CleaningReport& CleaningReport::operator+=(const CleaningReport& other) {
  n_empty_dropped += other.n_empty_dropped;
  n_dupes_dropped += other.n_dupes_dropped;
  n_cross_split_dropped += other.n_cross_split_dropped;
  return *this;
}

std::string to_json(const CleaningReport& report) {
  nlohmann::ordered_json j;
  j["n_input"] = report.n_input;
  j["n_empty_dropped"] = report.n_empty_dropped;
  j["n_dupes_dropped"] = report.n_dupes_dropped;
  j["n_cross_split_dropped"] = report.n_cross_split_dropped;
  j["n_surviving"] = report.n_surviving();
  return j.dump();
}

namespace {

bool starts_with_ci(std::string_view token, std::string_view prefix) {
  if (token.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    const auto c = static_cast<unsigned char>(token[i]);
    if (std::tolower(c) != prefix[i]) return false;
  }
  return true;
}

bool is_url_token(std::string_view token) {
  return starts_with_ci(token, "http://") || starts_with_ci(token, "https://") ||
         starts_with_ci(token, "www.");
}

}  // namespace

std::string clean_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::string_view token : text::split_whitespace(raw)) {
    if (!out.empty()) out.push_back(' ');
    if (is_url_token(token)) {
      out.append(kUrlPlaceholder);
    } else {
      out.append(token);
    }
  }
  return out;
}

std::pair<Dataset, CleaningReport> clean_posts(const Dataset& ds) {
  CleaningReport report;
  report.n_input = ds.size();
  std::vector<Post> kept;
  kept.reserve(ds.size());
  for (const Post& post : ds) {
    Post cleaned = post;
    cleaned.text = clean_text(post.text);
    if (cleaned.text.empty()) {
      ++report.n_empty_dropped;
      continue;
    }
    kept.push_back(std::move(cleaned));
  }
  return {Dataset(ds.kind(), std::move(kept)), report};
}

std::pair<Dataset, CleaningReport> dedup(const Dataset& ds) {
  CleaningReport report;
  report.n_input = ds.size();
  std::unordered_set<std::string_view> seen;
  seen.reserve(ds.size());
  std::vector<Post> kept;
  kept.reserve(ds.size());
  for (const Post& post : ds) {
    if (seen.insert(post.text).second) {
      kept.push_back(post);
    } else {
      ++report.n_dupes_dropped;
    }
  }
  return {Dataset(ds.kind(), std::move(kept)), report};
}

std::pair<Dataset, CleaningReport> drop_cross_split(const Dataset& train,
                                                    const Dataset& dev) {
  CleaningReport report;
  report.n_input = train.size();
  std::unordered_set<std::string_view> dev_texts;
  dev_texts.reserve(dev.size());
  for (const Post& post : dev) dev_texts.insert(post.text);
  std::vector<Post> kept;
  kept.reserve(train.size());
  for (const Post& post : train) {
    if (dev_texts.contains(post.text)) {
      ++report.n_cross_split_dropped;
    } else {
      kept.push_back(post);
    }
  }
  return {Dataset(train.kind(), std::move(kept)), report};
}

std::pair<Dataset, CleaningReport> clean_corpus(const Dataset& ds) {
  auto [cleaned, report] = clean_posts(ds);
  auto [deduped, dedup_report] = dedup(cleaned);
  report += dedup_report;
  return {std::move(deduped), report};
}

}  // namespace pseudolabel
