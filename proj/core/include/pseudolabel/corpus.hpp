#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pseudolabel/label.hpp"

namespace pseudolabel {

struct Post {
  std::string id;
  std::string text;
  std::optional<SeverityLabel> label;
  std::optional<std::string> subreddit;

  friend bool operator==(const Post&, const Post&) = default;
};

enum class DatasetKind { Labeled, Unlabeled };

// Ordered collection of posts. Labeled datasets carry a label on every post,
// unlabeled ones on none. Ids are unique.
class Dataset {
 public:
  explicit Dataset(DatasetKind kind = DatasetKind::Labeled) : kind_(kind) {}
  // Throws DataError if the posts violate the kind or id invariants.
  Dataset(DatasetKind kind, std::vector<Post> posts);

  DatasetKind kind() const { return kind_; }
  const std::vector<Post>& posts() const { return posts_; }
  std::size_t size() const { return posts_.size(); }
  bool empty() const { return posts_.empty(); }

  auto begin() const { return posts_.begin(); }
  auto end() const { return posts_.end(); }
  const Post& operator[](std::size_t i) const { return posts_[i]; }

  std::vector<std::string> texts() const;
  // Only valid on labeled datasets.
  std::vector<SeverityLabel> labels() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  DatasetKind kind_;
  std::vector<Post> posts_;
};

// Same posts with labels removed.
Dataset as_unlabeled(const Dataset& ds);

struct CleaningReport {
  std::size_t n_input = 0;
  std::size_t n_empty_dropped = 0;
  std::size_t n_dupes_dropped = 0;
  std::size_t n_cross_split_dropped = 0;

  std::size_t n_dropped() const {
    return n_empty_dropped + n_dupes_dropped + n_cross_split_dropped;
  }
  std::size_t n_surviving() const { return n_input - n_dropped(); }

  CleaningReport& operator+=(const CleaningReport& other);
  friend bool operator==(const CleaningReport&, const CleaningReport&) = default;
};

std::string to_json(const CleaningReport& report);

// Replaces newline/tab/CR (and every other Unicode whitespace) with a space,
// replaces URL tokens by `httpurl`, collapses whitespace runs and trims.
// A URL token is a maximal non-whitespace run starting with http://, https://
// or www. (ASCII case-insensitive).
std::string clean_text(std::string_view raw);

inline constexpr std::string_view kUrlPlaceholder = "httpurl";

// clean_text on every post; posts left empty are dropped and counted.
std::pair<Dataset, CleaningReport> clean_posts(const Dataset& ds);

// Keeps the first occurrence of each byte-identical text.
std::pair<Dataset, CleaningReport> dedup(const Dataset& ds);

// Removes every train post whose text also appears in dev. dev is untouched.
std::pair<Dataset, CleaningReport> drop_cross_split(const Dataset& train,
                                                    const Dataset& dev);

// clean_posts followed by dedup, reported together.
std::pair<Dataset, CleaningReport> clean_corpus(const Dataset& ds);

// ---------------------------------------------------------------------------
// Files

enum class DatasetFormat { Jsonl, Csv, Tsv };

// By extension: .jsonl/.json -> Jsonl, .csv -> Csv, .tsv/.tab -> Tsv.
DatasetFormat format_from_path(const std::filesystem::path& path);
std::optional<DatasetFormat> parse_format(std::string_view name);

// Errors (DataError) name the 1-based line and the field. For Unlabeled
// loads any label column is ignored.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     DatasetKind kind);
Dataset load_dataset(const std::filesystem::path& path, DatasetKind kind);
Dataset parse_dataset(std::string_view contents, DatasetFormat format,
                      DatasetKind kind, std::string_view source_name = "<memory>");

void save_dataset(const Dataset& ds, const std::filesystem::path& path,
                  DatasetFormat format);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
std::string serialize_dataset(const Dataset& ds, DatasetFormat format);

// FNV-1a-64 over the canonical JSONL serialization, as 16 hex digits.
std::string dataset_digest(const Dataset& ds);

}  // namespace pseudolabel
