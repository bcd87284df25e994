#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pseudolabel/linear_model.hpp"
#include "pseudolabel/selection.hpp"
#include "pseudolabel/selftrain.hpp"

namespace pseudolabel::cli {

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
};

// Every recognised key with its default. finetune.* keys default to empty,
// meaning "same as train.*".
const std::vector<ConfigKey>& config_keys();

// Flat key=value configuration. Keys carry their section as a prefix
// ("train.epochs"); '#' starts a comment line.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_text(std::string_view text, std::string_view source = "<config>");

  // Throws ConfigError for unknown keys.
  void set(std::string_view key, std::string value);
  const std::string& get(std::string_view key) const;
  void merge(const std::map<std::string, std::string>& values);

  const std::map<std::string, std::string>& values() const { return values_; }

  TrainConfig train() const;
  std::optional<TrainConfig> finetune() const;
  SelectionConfig selection() const;
  std::uint64_t seed() const;
  std::vector<std::uint64_t> seeds() const;
  unsigned rounds() const;
  std::string backend() const { return get("backend"); }
  std::filesystem::path out() const { return get("run.out"); }
  std::optional<std::filesystem::path> path(std::string_view split) const;

  SelfTrainOptions selftrain_options() const;

  // Values that define the experiment; run.out and log.level are omitted.
  std::map<std::string, std::string> snapshot() const;
  std::string serialize() const;

  // Parses every typed value (ConfigError on the first bad one) and checks
  // that the listed dataset paths are set and exist.
  void validate(std::initializer_list<std::string_view> required_paths = {}) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace pseudolabel::cli
