#include "pseudolabel/selftrain.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "pseudolabel/error.hpp"
#include "pseudolabel/hashing.hpp"

namespace pseudolabel {

namespace fs = std::filesystem;
using json = nlohmann::json;

RunLayout RunLayout::round(unsigned r, unsigned rounds) const {
  if (rounds <= 1 || r >= rounds) return *this;
  return RunLayout{dir / ("round-" + std::to_string(r))};
}

RunLock::RunLock(const RunLayout& layout) : path_(layout.lock()) {
  fs::create_directories(layout.dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw ConfigError("run directory '" + layout.dir.string() +
                      "' is locked (remove " + path_.string() + " if no run is active)");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

StageSeeds stage_seeds(std::uint64_t run_seed, unsigned round) {
  const std::uint64_t r = round == 0 ? 0 : round - 1;
  return {derive_seed(run_seed, 1), derive_seed(run_seed, 2 + 2 * r),
          derive_seed(run_seed, 3 + 2 * r)};
}

void SelfTrainOptions::validate() const {
  train.validate();
  if (finetune) {
    finetune->validate();
    if (!(finetune->features() == train.features())) {
      throw ConfigError("finetune feature settings must match the training config");
    }
  }
  selection.validate();
  if (rounds < 1) throw ConfigError("rounds must be at least 1");
}

// ---------------------------------------------------------------------------
// Manifest

std::string serialize_manifest(const Manifest& m) {
  json j;
  j["format_version"] = m.format_version;
  j["backend"] = m.backend;
  j["seed"] = m.seed;
  j["rounds"] = m.rounds;
  j["config"] = m.config;
  j["seeds"] = m.seeds;
  json datasets = json::object();
  for (const auto& [name, rec] : m.datasets) {
    datasets[name] = {{"digest", rec.digest}, {"size", rec.size}};
  }
  j["datasets"] = datasets;
  json cleaning = json::object();
  for (const auto& [name, rep] : m.cleaning) cleaning[name] = json::parse(to_json(rep));
  j["cleaning"] = cleaning;
  json counts = json::array();
  for (const auto& round : m.selection_counts) {
    counts.push_back({{"low", round[0]}, {"moderate", round[1]}, {"severe", round[2]}});
  }
  j["selection_counts"] = counts;
  j["artifacts"] = m.artifacts;
  j["stages"] = m.stages;
  return j.dump(2) + "\n";
}

Manifest parse_manifest(std::string_view text) {
  try {
    const json j = json::parse(text);
    Manifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != 1) {
      throw DataError("manifest format version " + std::to_string(m.format_version) +
                      " is not supported");
    }
    m.backend = j.at("backend").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.rounds = j.at("rounds").get<unsigned>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    for (const auto& [name, rec] : j.at("datasets").items()) {
      m.datasets[name] = {rec.at("digest").get<std::string>(), rec.at("size").get<std::size_t>()};
    }
    for (const auto& [name, rep] : j.at("cleaning").items()) {
      CleaningReport r;
      r.n_input = rep.at("n_input").get<std::size_t>();
      r.n_empty_dropped = rep.at("n_empty_dropped").get<std::size_t>();
      r.n_dupes_dropped = rep.at("n_dupes_dropped").get<std::size_t>();
      r.n_cross_split_dropped = rep.at("n_cross_split_dropped").get<std::size_t>();
      m.cleaning[name] = r;
    }
    for (const auto& round : j.at("selection_counts")) {
      m.selection_counts.push_back({round.at("low").get<std::size_t>(),
                                    round.at("moderate").get<std::size_t>(),
                                    round.at("severe").get<std::size_t>()});
    }
    m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    m.stages = j.at("stages").get<std::vector<std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
}

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spill(const fs::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace

Manifest read_manifest(const fs::path& path) { return parse_manifest(slurp(path)); }

void write_manifest(const Manifest& manifest, const fs::path& path) {
  spill(path, serialize_manifest(manifest));
}

std::string file_digest(const fs::path& path) { return to_hex(fnv1a64(slurp(path))); }

void record_artifacts(Manifest& manifest, const RunLayout& layout) {
  manifest.artifacts.clear();
  for (const fs::path& artifact : {layout.teacher_model(), layout.teacher_logits(),
                                   layout.pseudo(), layout.student_model(),
                                   layout.final_model()}) {
    if (fs::is_regular_file(artifact)) {
      manifest.artifacts[artifact.filename().string()] = file_digest(artifact);
    }
  }
}

// ---------------------------------------------------------------------------
// Logits cache

void save_logits(std::span<const Post> posts, std::span<const Logits> logits,
                 const fs::path& path) {
  if (posts.size() != logits.size()) throw DataError("save_logits: size mismatch");
  std::string out;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    nlohmann::ordered_json row;
    row["id"] = posts[i].id;
    row["logits"] = {logits[i][0], logits[i][1], logits[i][2]};
    out += row.dump();
    out.push_back('\n');
  }
  spill(path, out);
}

std::vector<ScoredPost> load_logits(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<ScoredPost> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json row = json::parse(line);
      ScoredPost s;
      s.id = row.at("id").get<std::string>();
      const auto& l = row.at("logits");
      if (!l.is_array() || l.size() != kNumClasses) throw DataError("expected 3 logits");
      for (std::size_t c = 0; c < kNumClasses; ++c) s.logits[c] = l[c].get<double>();
      rows.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Stages

void train_teacher(const Dataset& labeled, const SelfTrainOptions& opts, Backend& backend,
                   const RunLayout& layout) {
  TrainConfig cfg = opts.train;
  cfg.seed = stage_seeds(opts.seed).teacher;
  backend.fit(labeled, cfg, layout.teacher_model(), std::nullopt);
}

std::vector<Logits> predict_unlabeled(const Dataset& unlabeled, Backend& backend,
                                      const fs::path& teacher, const RunLayout& layout) {
  const std::vector<std::string> texts = unlabeled.texts();
  std::vector<Logits> logits = backend.predict(teacher, texts);
  if (logits.size() != texts.size()) {
    throw BackendError("backend returned " + std::to_string(logits.size()) + " predictions for " +
                       std::to_string(texts.size()) + " texts");
  }
  save_logits(unlabeled.posts(), logits, layout.teacher_logits());
  return logits;
}

std::vector<PseudoLabeledSample> select_pseudo_labels(const Dataset& unlabeled,
                                                      std::span<const Logits> logits,
                                                      const SelectionConfig& cfg,
                                                      const RunLayout& layout) {
  std::vector<PseudoLabeledSample> pseudo = select_top_k(logits, unlabeled.posts(), cfg);
  if (pseudo.empty()) throw DataError("teacher produced no confident predictions");
  save_pseudo_samples(pseudo, layout.pseudo());
  return pseudo;
}

void train_student(std::span<const PseudoLabeledSample> pseudo, const SelfTrainOptions& opts,
                   unsigned round, Backend& backend, const RunLayout& layout) {
  const Dataset ds = build_pseudo_dataset(pseudo);
  TrainConfig cfg = opts.train;
  cfg.seed = stage_seeds(opts.seed, round).student;
  backend.fit(ds, cfg, layout.student_model(), std::nullopt);
}

void finetune_student(const Dataset& labeled, const SelfTrainOptions& opts, unsigned round,
                      Backend& backend, const RunLayout& layout) {
  TrainConfig cfg = opts.finetune_config();
  cfg.seed = stage_seeds(opts.seed, round).finetune;
  backend.fit(labeled, cfg, layout.final_model(), layout.student_model());
}

SelfTrainRun run_self_training(const Dataset& labeled, const Dataset& unlabeled,
                               const SelfTrainOptions& opts, Backend& backend,
                               const RunLayout& layout) {
  opts.validate();
  if (labeled.empty() || labeled.kind() != DatasetKind::Labeled) {
    throw DataError("self-training needs a non-empty labeled dataset");
  }
  if (unlabeled.empty()) throw DataError("self-training needs a non-empty unlabeled dataset");
  fs::create_directories(layout.dir);

  SelfTrainRun run;
  run.layout = layout;
  Manifest& m = run.manifest;
  m.backend = backend.describe();
  m.seed = opts.seed;
  m.rounds = opts.rounds;
  m.config = opts.config_snapshot;
  m.cleaning = opts.cleaning;
  m.datasets["labeled"] = {dataset_digest(labeled), labeled.size()};
  m.datasets["unlabeled"] = {dataset_digest(unlabeled), unlabeled.size()};

  using clock = std::chrono::steady_clock;
  const auto timed = [&](const std::string& stage, auto&& body) {
    const auto start = clock::now();
    body();
    run.stage_seconds[stage] =
        std::chrono::duration<double>(clock::now() - start).count();
    m.stages.push_back(stage);
  };

  fs::path teacher;
  for (unsigned round = 1; round <= opts.rounds; ++round) {
    const RunLayout rl = layout.round(round, opts.rounds);
    fs::create_directories(rl.dir);
    const std::string suffix = opts.rounds > 1 ? "@" + std::to_string(round) : "";
    const StageSeeds seeds = stage_seeds(opts.seed, round);

    if (round == 1) {
      m.seeds["teacher"] = seeds.teacher;
      timed("teacher" + suffix, [&] { train_teacher(labeled, opts, backend, rl); });
    } else {
      fs::copy(teacher, rl.teacher_model(),
               fs::copy_options::overwrite_existing | fs::copy_options::recursive);
    }
    teacher = rl.teacher_model();
    m.seeds["student" + suffix] = seeds.student;
    m.seeds["finetune" + suffix] = seeds.finetune;

    std::vector<Logits> logits;
    timed("predict" + suffix, [&] { logits = predict_unlabeled(unlabeled, backend, teacher, rl); });
    timed("select" + suffix,
          [&] { run.pseudo = select_pseudo_labels(unlabeled, logits, opts.selection, rl); });
    m.selection_counts.push_back(class_counts(run.pseudo));
    timed("student" + suffix, [&] { train_student(run.pseudo, opts, round, backend, rl); });
    timed("finetune" + suffix, [&] { finetune_student(labeled, opts, round, backend, rl); });
    teacher = rl.final_model();
  }

  const Dataset pseudo_ds = build_pseudo_dataset(run.pseudo);
  m.datasets["pseudo"] = {dataset_digest(pseudo_ds), pseudo_ds.size()};
  record_artifacts(m, layout);
  write_manifest(m, layout.manifest());

  json timings = run.stage_seconds;
  spill(layout.timings(), timings.dump(2) + "\n");

  run.teacher = layout.teacher_model();
  run.student = layout.student_model();
  run.final_model = layout.final_model();
  return run;
}

}  // namespace pseudolabel
