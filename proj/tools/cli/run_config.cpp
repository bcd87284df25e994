#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "pseudolabel/error.hpp"

namespace pseudolabel::cli {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"paths.train", "", "labeled training set (jsonl/csv/tsv)"},
      {"paths.dev", "", "labeled development set; also used for cross-split dedup"},
      {"paths.test", "", "labeled test set"},
      {"paths.unlabeled", "", "unlabeled pool for pseudo-labeling"},
      {"train.optimizer", "sgd", "sgd | adam"},
      {"train.learning_rate", "0.1", "step size"},
      {"train.max_input_length", "256", "tokens kept per post"},
      {"train.batch_size", "8", "minibatch size"},
      {"train.epochs", "10", "passes over the data"},
      {"train.l2_penalty", "1e-6", "L2 weight on the weights"},
      {"train.dimension", "262144", "hashed feature space size"},
      {"finetune.optimizer", "", "finetune override of train.optimizer"},
      {"finetune.learning_rate", "", "finetune override of train.learning_rate"},
      {"finetune.batch_size", "", "finetune override of train.batch_size"},
      {"finetune.epochs", "", "finetune override of train.epochs"},
      {"finetune.l2_penalty", "", "finetune override of train.l2_penalty"},
      {"select.k", "30000", "pseudo-labels kept per class"},
      {"select.ranking", "raw_logit", "raw_logit | probability | margin"},
      {"run.seed", "0", "run seed"},
      {"run.seeds", "1,2,3,4,5", "seeds for multi-run evaluation"},
      {"run.rounds", "1", "self-training rounds"},
      {"run.out", "runs/default", "run directory"},
      {"backend", "native", "native | exec:<command line>"},
      {"log.level", "info", "trace | debug | info | warn | error | off"},
  };
  return keys;
}

namespace {

bool is_known(std::string_view key) {
  for (const auto& k : config_keys()) {
    if (k.name == key) return true;
  }
  return false;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" +
                      std::string(text) + "' as a number");
  }
  return value;
}

Optimizer parse_optimizer_key(std::string_view key, std::string_view text) {
  const auto opt = parse_optimizer(text);
  if (!opt) {
    throw ConfigError("config key '" + std::string(key) + "': unknown optimizer '" +
                      std::string(text) + "' (expected sgd or adam)");
  }
  return *opt;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_.emplace(k.name, k.default_value);
}

RunConfig RunConfig::from_text(std::string_view text, std::string_view source) {
  RunConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) +
                        ": expected key=value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    try {
      cfg.set(key, std::string(trim(line.substr(eq + 1))));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), path.string());
}

void RunConfig::set(std::string_view key, std::string value) {
  if (!is_known(key)) throw ConfigError("unknown config key '" + std::string(key) + "'");
  values_[std::string(key)] = std::move(value);
}

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(std::string(key));
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

void RunConfig::merge(const std::map<std::string, std::string>& values) {
  for (const auto& [k, v] : values) set(k, v);
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.optimizer = parse_optimizer_key("train.optimizer", get("train.optimizer"));
  t.learning_rate = parse_number<double>("train.learning_rate", get("train.learning_rate"));
  t.max_input_length =
      parse_number<std::uint32_t>("train.max_input_length", get("train.max_input_length"));
  t.batch_size = parse_number<std::uint32_t>("train.batch_size", get("train.batch_size"));
  t.epochs = parse_number<std::uint32_t>("train.epochs", get("train.epochs"));
  t.l2_penalty = parse_number<double>("train.l2_penalty", get("train.l2_penalty"));
  t.dimension = parse_number<std::uint64_t>("train.dimension", get("train.dimension"));
  return t;
}

std::optional<TrainConfig> RunConfig::finetune() const {
  TrainConfig t = train();
  bool any = false;
  const auto pick = [&](std::string_view key) -> std::optional<std::string_view> {
    const std::string& v = get(key);
    if (v.empty()) return std::nullopt;
    any = true;
    return v;
  };
  if (auto v = pick("finetune.optimizer")) t.optimizer = parse_optimizer_key("finetune.optimizer", *v);
  if (auto v = pick("finetune.learning_rate")) {
    t.learning_rate = parse_number<double>("finetune.learning_rate", *v);
  }
  if (auto v = pick("finetune.batch_size")) {
    t.batch_size = parse_number<std::uint32_t>("finetune.batch_size", *v);
  }
  if (auto v = pick("finetune.epochs")) t.epochs = parse_number<std::uint32_t>("finetune.epochs", *v);
  if (auto v = pick("finetune.l2_penalty")) {
    t.l2_penalty = parse_number<double>("finetune.l2_penalty", *v);
  }
  return any ? std::optional(t) : std::nullopt;
}

SelectionConfig RunConfig::selection() const {
  SelectionConfig s;
  s.k_per_class = parse_number<std::size_t>("select.k", get("select.k"));
  const auto ranking = parse_ranking_score(get("select.ranking"));
  if (!ranking) {
    throw ConfigError("config key 'select.ranking': expected raw_logit, probability or margin");
  }
  s.ranking = *ranking;
  s.validate();
  return s;
}

std::uint64_t RunConfig::seed() const { return parse_number<std::uint64_t>("run.seed", get("run.seed")); }

std::vector<std::uint64_t> RunConfig::seeds() const {
  std::vector<std::uint64_t> out;
  std::string_view list = get("run.seeds");
  while (!list.empty()) {
    const auto comma = list.find(',');
    const std::string_view item = trim(list.substr(0, comma));
    if (!item.empty()) out.push_back(parse_number<std::uint64_t>("run.seeds", item));
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("config key 'run.seeds': at least one seed is required");
  if (std::set<std::uint64_t>(out.begin(), out.end()).size() != out.size()) {
    throw ConfigError("config key 'run.seeds': seeds must be distinct");
  }
  return out;
}

unsigned RunConfig::rounds() const {
  const auto r = parse_number<unsigned>("run.rounds", get("run.rounds"));
  if (r < 1) throw ConfigError("config key 'run.rounds': must be at least 1");
  return r;
}

std::optional<std::filesystem::path> RunConfig::path(std::string_view split) const {
  const std::string& v = get("paths." + std::string(split));
  if (v.empty()) return std::nullopt;
  return std::filesystem::path(v);
}

SelfTrainOptions RunConfig::selftrain_options() const {
  SelfTrainOptions o;
  o.train = train();
  o.finetune = finetune();
  o.selection = selection();
  o.seed = seed();
  o.rounds = rounds();
  o.config_snapshot = snapshot();
  return o;
}

std::map<std::string, std::string> RunConfig::snapshot() const {
  std::map<std::string, std::string> out = values_;
  out.erase("run.out");
  out.erase("log.level");
  return out;
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

void RunConfig::validate(std::initializer_list<std::string_view> required_paths) const {
  selftrain_options().validate();
  seeds();
  const std::string& level = get("log.level");
  static const std::set<std::string> levels = {"trace", "debug", "info", "warn", "error", "off"};
  if (!levels.contains(level)) throw ConfigError("config key 'log.level': unknown level '" + level + "'");
  const std::string& be = backend();
  if (be != "native" && !be.starts_with("exec:")) {
    throw ConfigError("config key 'backend': expected native or exec:<command line>");
  }
  for (std::string_view split : required_paths) {
    const auto p = path(split);
    if (!p) throw ConfigError("config key 'paths." + std::string(split) + "' is required");
    if (!std::filesystem::exists(*p)) {
      throw ConfigError("config key 'paths." + std::string(split) + "': '" + p->string() +
                        "' does not exist");
    }
  }
}

}  // namespace pseudolabel::cli
