#include "commands.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <deque>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <optional>

#include "json.hpp"
#include "pseudolabel/backend.hpp"
#include "pseudolabel/corpus.hpp"
#include "pseudolabel/error.hpp"
#include "pseudolabel/metrics.hpp"
#include "pseudolabel/report.hpp"
#include "pseudolabel/selftrain.hpp"
#include "pseudolabel/synthetic.hpp"
#include "run_config.hpp"

namespace pseudolabel::cli {
namespace {

namespace fs = std::filesystem;

std::shared_ptr<spdlog::logger> logger() {
  if (auto existing = spdlog::get("pseudolabel")) return existing;
  return spdlog::stderr_logger_mt("pseudolabel");
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

// Options shared by every subcommand.
struct GlobalArgs {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

// Defaults, then the config file (or the manifest of an existing run),
// then command-line overrides.
RunConfig resolve_config(const GlobalArgs& g, std::optional<fs::path> run_dir = std::nullopt) {
  RunConfig cfg;
  if (!g.config_path.empty()) {
    cfg = RunConfig::from_file(g.config_path);
  } else {
    fs::path dir = run_dir ? *run_dir : fs::path(cfg.get("run.out"));
    for (const auto& [k, v] : g.overrides) {
      if (k == "run.out" && !run_dir) dir = v;
    }
    const RunLayout layout{dir};
    if (fs::exists(layout.manifest())) cfg.merge(read_manifest(layout.manifest()).config);
  }
  for (const auto& [k, v] : g.overrides) cfg.set(k, v);
  if (run_dir) cfg.set("run.out", run_dir->string());
  spdlog::level::level_enum level = spdlog::level::from_str(cfg.get("log.level"));
  logger()->set_level(level);
  return cfg;
}

void log_cleaning(std::string_view name, const CleaningReport& report) {
  logger()->info("cleaning {}: {}", name, to_json(report));
}

Dataset load_dev(const RunConfig& cfg, CleaningReport* report = nullptr) {
  auto [dev, rep] = clean_corpus(load_dataset(*cfg.path("dev"), DatasetKind::Labeled));
  if (report) *report = rep;
  return dev;
}

// Labeled training data as every stage sees it: cleaned, deduplicated and,
// when a dev set is configured, stripped of dev texts.
Dataset load_labeled_train(const RunConfig& cfg, std::map<std::string, CleaningReport>* reports) {
  auto [train, report] = clean_corpus(load_dataset(*cfg.path("train"), DatasetKind::Labeled));
  if (cfg.path("dev")) {
    CleaningReport dev_report;
    const Dataset dev = load_dev(cfg, &dev_report);
    auto [kept, cross] = drop_cross_split(train, dev);
    report += cross;
    train = std::move(kept);
    if (reports) (*reports)["dev"] = dev_report;
  }
  if (reports) (*reports)["labeled"] = report;
  log_cleaning("labeled", report);
  return train;
}

Dataset load_unlabeled(const RunConfig& cfg, std::map<std::string, CleaningReport>* reports) {
  auto [pool, report] = clean_corpus(load_dataset(*cfg.path("unlabeled"), DatasetKind::Unlabeled));
  if (reports) (*reports)["unlabeled"] = report;
  log_cleaning("unlabeled", report);
  return pool;
}

void validate_with_optional_dev(const RunConfig& cfg,
                                std::initializer_list<std::string_view> required) {
  cfg.validate(required);
  if (cfg.path("dev")) cfg.validate({"dev"});
}

// Rewrites the manifest of `layout` after a single-stage command.
void update_manifest(const RunLayout& layout, const RunConfig& cfg, const Backend& backend,
                     const std::string& stage, const std::function<void(Manifest&)>& edit) {
  Manifest m = fs::exists(layout.manifest()) ? read_manifest(layout.manifest()) : Manifest{};
  m.backend = backend.describe();
  m.seed = cfg.seed();
  m.rounds = cfg.rounds();
  m.config = cfg.snapshot();
  edit(m);
  m.stages.push_back(stage);
  record_artifacts(m, layout);
  write_manifest(m, layout.manifest());
}

// ---------------------------------------------------------------------------

struct CleanArgs {
  std::string in;
  std::string out;
  std::string dev;
  std::string dev_out;
  std::string report;
  std::string kind = "labeled";
  std::string format;
};

int cmd_clean(const CleanArgs& a, const GlobalArgs& g, std::ostream& out) {
  resolve_config(g);
  const DatasetKind kind = a.kind == "unlabeled" ? DatasetKind::Unlabeled : DatasetKind::Labeled;
  const auto fmt_of = [&](const std::string& path) {
    if (a.format.empty()) return format_from_path(path);
    return *parse_format(a.format);
  };
  if (!fs::exists(a.in)) throw ConfigError("input '" + a.in + "' does not exist");
  if (!a.dev.empty() && !fs::exists(a.dev)) throw ConfigError("dev '" + a.dev + "' does not exist");

  auto [train, report] = clean_corpus(load_dataset(a.in, fmt_of(a.in), kind));
  nlohmann::ordered_json summary;
  if (!a.dev.empty()) {
    auto [dev, dev_report] = clean_corpus(load_dataset(a.dev, fmt_of(a.dev), DatasetKind::Labeled));
    auto [kept, cross] = drop_cross_split(train, dev);
    report += cross;
    train = std::move(kept);
    if (!a.dev_out.empty()) save_dataset(dev, a.dev_out, fmt_of(a.dev_out));
    summary["dev"] = nlohmann::ordered_json::parse(to_json(dev_report));
  }
  summary["input"] = nlohmann::ordered_json::parse(to_json(report));
  save_dataset(train, a.out, fmt_of(a.out));

  const std::string json = summary.dump(2) + "\n";
  logger()->info("cleaning report: {}", summary.dump());
  if (!a.report.empty()) write_text(a.report, json);
  out << json;
  return kOk;
}

int cmd_selftrain(const GlobalArgs& g, std::ostream& out) {
  const RunConfig cfg = resolve_config(g);
  validate_with_optional_dev(cfg, {"train", "unlabeled"});

  SelfTrainOptions opts = cfg.selftrain_options();
  const Dataset labeled = load_labeled_train(cfg, &opts.cleaning);
  const Dataset unlabeled = load_unlabeled(cfg, &opts.cleaning);
  auto backend = make_backend(cfg.backend());

  const RunLayout layout{cfg.out()};
  const RunLock lock(layout);
  logger()->info("self-training into {} ({} labeled, {} unlabeled, k={})", layout.dir.string(),
                 labeled.size(), unlabeled.size(), opts.selection.k_per_class);
  const SelfTrainRun run = run_self_training(labeled, unlabeled, opts, *backend, layout);
  for (const auto& [stage, seconds] : run.stage_seconds) {
    logger()->info("stage {} took {:.3f}s", stage, seconds);
  }
  const auto& counts = run.manifest.selection_counts.back();
  logger()->info("pseudo-labels: low={} moderate={} severe={}", counts[0], counts[1], counts[2]);
  out << layout.manifest().string() << "\n";
  return kOk;
}

int cmd_pseudolabel(const GlobalArgs& g, std::ostream& out) {
  const RunConfig cfg = resolve_config(g);
  cfg.validate({"unlabeled"});
  const RunLayout layout{cfg.out()};
  if (!fs::exists(layout.teacher_model())) {
    throw DataError("no teacher model at " + layout.teacher_model().string() +
                    "; run selftrain first");
  }
  std::map<std::string, CleaningReport> reports;
  const Dataset unlabeled = load_unlabeled(cfg, &reports);
  auto backend = make_backend(cfg.backend());
  const RunLock lock(layout);

  std::vector<Logits> logits;
  if (fs::exists(layout.teacher_logits()) && fs::exists(layout.manifest())) {
    const Manifest m = read_manifest(layout.manifest());
    const auto recorded = m.artifacts.find("teacher.model");
    const bool teacher_unchanged = fs::is_regular_file(layout.teacher_model())
                                       ? recorded != m.artifacts.end() &&
                                             recorded->second == file_digest(layout.teacher_model())
                                       : false;
    const auto cached = load_logits(layout.teacher_logits());
    bool aligned = teacher_unchanged && cached.size() == unlabeled.size();
    for (std::size_t i = 0; aligned && i < cached.size(); ++i) {
      aligned = cached[i].id == unlabeled[i].id;
    }
    if (aligned) {
      for (const auto& row : cached) logits.push_back(row.logits);
      logger()->info("reusing cached teacher logits ({} posts)", logits.size());
    }
  }
  if (logits.empty()) {
    logits = predict_unlabeled(unlabeled, *backend, layout.teacher_model(), layout);
  }
  const auto pseudo = select_pseudo_labels(unlabeled, logits, cfg.selection(), layout);
  const auto counts = class_counts(pseudo);
  update_manifest(layout, cfg, *backend, "pseudolabel", [&](Manifest& m) {
    m.cleaning["unlabeled"] = reports["unlabeled"];
    m.datasets["unlabeled"] = {dataset_digest(unlabeled), unlabeled.size()};
    const Dataset ds = build_pseudo_dataset(pseudo);
    m.datasets["pseudo"] = {dataset_digest(ds), ds.size()};
    if (m.selection_counts.empty()) {
      m.selection_counts.push_back(counts);
    } else {
      m.selection_counts.back() = counts;
    }
  });
  logger()->info("pseudo-labels: low={} moderate={} severe={}", counts[0], counts[1], counts[2]);
  out << layout.pseudo().string() << "\n";
  return kOk;
}

int cmd_train_student(const GlobalArgs& g, std::ostream& out) {
  const RunConfig cfg = resolve_config(g);
  cfg.validate();
  const RunLayout layout{cfg.out()};
  if (!fs::exists(layout.pseudo())) {
    throw DataError("no pseudo-labels at " + layout.pseudo().string() + "; run pseudolabel first");
  }
  const auto pseudo = load_pseudo_samples(layout.pseudo());
  auto backend = make_backend(cfg.backend());
  const RunLock lock(layout);
  const SelfTrainOptions opts = cfg.selftrain_options();
  train_student(pseudo, opts, opts.rounds, *backend, layout);
  update_manifest(layout, cfg, *backend, "train-student", [](Manifest&) {});
  out << layout.student_model().string() << "\n";
  return kOk;
}

int cmd_finetune(const GlobalArgs& g, std::ostream& out) {
  const RunConfig cfg = resolve_config(g);
  validate_with_optional_dev(cfg, {"train"});
  const RunLayout layout{cfg.out()};
  if (!fs::exists(layout.student_model())) {
    throw DataError("no student model at " + layout.student_model().string() +
                    "; run train-student first");
  }
  std::map<std::string, CleaningReport> reports;
  const Dataset labeled = load_labeled_train(cfg, &reports);
  auto backend = make_backend(cfg.backend());
  const RunLock lock(layout);
  const SelfTrainOptions opts = cfg.selftrain_options();
  finetune_student(labeled, opts, opts.rounds, *backend, layout);
  update_manifest(layout, cfg, *backend, "finetune", [&](Manifest& m) {
    m.cleaning["labeled"] = reports["labeled"];
    m.datasets["labeled"] = {dataset_digest(labeled), labeled.size()};
  });
  out << layout.final_model().string() << "\n";
  return kOk;
}

struct EvalArgs {
  std::string run_dir;
  std::string split = "dev";
  std::string model = "final";
  std::string seeds;
};

fs::path model_path(const RunLayout& layout, const std::string& model) {
  if (model == "teacher") return layout.teacher_model();
  if (model == "student") return layout.student_model();
  return layout.final_model();
}

EvalReport score_model(Backend& backend, const fs::path& model, const Dataset& gold_ds,
                       std::uint64_t seed) {
  if (!fs::exists(model)) throw DataError("model '" + model.string() + "' does not exist");
  const auto logits = backend.predict(model, gold_ds.texts());
  std::vector<SeverityLabel> predicted;
  predicted.reserve(logits.size());
  for (const Logits& l : logits) predicted.push_back(argmax(l));
  const auto gold = gold_ds.labels();
  return evaluate(gold, predicted, seed);
}

int cmd_eval(const EvalArgs& a, const GlobalArgs& g, std::ostream& out) {
  static const std::vector<std::string> kSplits = {"train", "dev", "test"};
  if (std::find(kSplits.begin(), kSplits.end(), a.split) == kSplits.end()) {
    throw ConfigError("unknown split '" + a.split + "' (valid splits: train, dev, test)");
  }
  std::optional<fs::path> run_dir;
  if (!a.run_dir.empty()) run_dir = fs::path(a.run_dir);
  RunConfig cfg = resolve_config(g, run_dir);
  cfg.validate({a.split});
  const RunLayout layout{cfg.out()};

  const Dataset gold = a.split == "train" ? load_labeled_train(cfg, nullptr)
                       : a.split == "dev"  ? load_dev(cfg)
                                           : clean_corpus(load_dataset(*cfg.path("test"),
                                                                       DatasetKind::Labeled))
                                                 .first;
  auto backend = make_backend(cfg.backend());
  const std::string stem = "eval-" + a.split + "-" + a.model;

  if (a.seeds.empty()) {
    const std::uint64_t seed = cfg.seed();
    const EvalReport report = score_model(*backend, model_path(layout, a.model), gold, seed);
    const std::string json = to_json(report) + "\n";
    write_text(layout.dir / (stem + ".json"), json);
    logger()->info("{} macro-F1 on {}: {:.4f}", a.model, a.split, report.macro_f1);
    out << json;
    return kOk;
  }

  RunConfig seeded = cfg;
  seeded.set("run.seeds", a.seeds);
  validate_with_optional_dev(cfg, {"train", "unlabeled"});
  SelfTrainOptions base = cfg.selftrain_options();
  const Dataset labeled = load_labeled_train(cfg, &base.cleaning);
  const Dataset unlabeled = load_unlabeled(cfg, &base.cleaning);
  const std::vector<std::uint64_t> seeds = seeded.seeds();

  const RunLock lock(layout);
  const MultiRunReport report = evaluate_runs(
      [&](std::uint64_t seed) {
        RunConfig per_seed = cfg;
        per_seed.set("run.seed", std::to_string(seed));
        SelfTrainOptions opts = per_seed.selftrain_options();
        opts.cleaning = base.cleaning;
        const RunLayout seed_layout{layout.dir / "seeds" / ("seed-" + std::to_string(seed))};
        run_self_training(labeled, unlabeled, opts, *backend, seed_layout);
        EvalReport r = score_model(*backend, model_path(seed_layout, a.model), gold, seed);
        logger()->info("seed {}: {} macro-F1 on {} = {:.4f}", seed, a.model, a.split, r.macro_f1);
        return r;
      },
      seeds);
  const std::string json = to_json(report) + "\n";
  write_text(layout.dir / (stem + ".json"), json);
  write_text(layout.dir / (stem + ".csv"), to_csv(report));
  logger()->info("{} macro-F1 on {} over {} seeds: mean {:.4f}, std {:.4f}", a.model, a.split,
                 seeds.size(), report.mean_macro_f1, report.std_macro_f1);
  out << json;
  return kOk;
}

struct ReportArgs {
  std::string run_dir;
  std::size_t top_n = 5;
};

int cmd_report(const ReportArgs& a, const GlobalArgs& g, std::ostream& out) {
  std::optional<fs::path> run_dir;
  if (!a.run_dir.empty()) run_dir = fs::path(a.run_dir);
  const RunConfig cfg = resolve_config(g, run_dir);
  const RunLayout layout{cfg.out()};
  if (!fs::exists(layout.pseudo())) {
    throw DataError("no pseudo-labels at " + layout.pseudo().string());
  }
  const auto pseudo = load_pseudo_samples(layout.pseudo());
  const DistributionReport rep = distribution(pseudo);
  if (fs::exists(layout.manifest())) {
    const Manifest m = read_manifest(layout.manifest());
    if (!m.selection_counts.empty() && m.selection_counts.back() != rep.class_totals) {
      throw DataError("pseudo.jsonl class totals disagree with the manifest selection counts");
    }
  }
  const std::string json = to_json(rep);
  write_text(layout.dir / "distribution.json", json);
  write_text(layout.dir / "subreddit_distribution.csv", render_figure_data(rep, a.top_n));
  logger()->info("{} pseudo-labels over {} subreddits; top-5 share {:.3f}", rep.total,
                 rep.rows.size(), rep.top5_concentration);
  out << json;
  return kOk;
}

struct SynthArgs {
  std::string dir;
  SyntheticConfig cfg;
  std::size_t k = 500;
};

int cmd_synth(const SynthArgs& a, const GlobalArgs& g, std::ostream& out) {
  resolve_config(g);
  const fs::path dir = a.dir;
  fs::create_directories(dir);
  const SyntheticCorpus corpus = generate_synthetic_corpus(a.cfg);
  save_dataset(corpus.train, dir / "train.jsonl");
  save_dataset(corpus.dev, dir / "dev.jsonl");
  save_dataset(corpus.test, dir / "test.jsonl");
  save_dataset(corpus.unlabeled, dir / "unlabeled.jsonl");
  RunConfig cfg;
  cfg.set("paths.train", (dir / "train.jsonl").string());
  cfg.set("paths.dev", (dir / "dev.jsonl").string());
  cfg.set("paths.test", (dir / "test.jsonl").string());
  cfg.set("paths.unlabeled", (dir / "unlabeled.jsonl").string());
  cfg.set("select.k", std::to_string(a.k));
  cfg.set("run.out", (dir / "run").string());
  write_text(dir / "selftrain.conf", "# synthetic corpus, seed " + std::to_string(a.cfg.seed) +
                                         "\n" + cfg.serialize());
  out << (dir / "selftrain.conf").string() << "\n";
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kUsageError;
  if (dynamic_cast<const BackendError*>(&e)) return kBackendError;
  return kDataError;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out) {
  CLI::App app{"Self-training with confidence-ranked pseudo-labels for 3-class severity "
               "classification",
               "pseudolabel"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  GlobalArgs global;
  app.add_option("--config", global.config_path, "key=value config file")->check(CLI::ExistingFile);

  struct KeyFlag {
    std::string key;
    std::string value;
    CLI::Option* option = nullptr;
  };
  std::deque<KeyFlag> key_flags;
  const auto bind = [&](const std::string& flag, const std::string& key, const std::string& help) {
    KeyFlag& kf = key_flags.emplace_back(KeyFlag{key, {}, nullptr});
    kf.option = app.add_option(flag, kf.value, help);
  };
  bind("--seed", "run.seed", "run seed (run.seed)");
  bind("--out", "run.out", "run directory (run.out)");
  bind("--backend", "backend", "native | exec:<argv> (backend)");
  bind("--k", "select.k", "pseudo-labels per class (select.k)");
  bind("--log-level", "log.level", "trace|debug|info|warn|error|off (log.level)");
  for (const auto& key : config_keys()) {
    const std::string name(key.name);
    if (name == "backend") continue;  // already bound above
    bind("--" + name, name, std::string(key.help));
  }

  CleanArgs clean;
  auto* clean_cmd = app.add_subcommand("clean", "Clean, deduplicate and drop cross-split texts");
  clean_cmd->add_option("--in", clean.in, "input dataset")->required();
  clean_cmd->add_option("--out", clean.out, "cleaned output dataset")->required();
  clean_cmd->add_option("--dev", clean.dev, "development set; train texts found in it are dropped");
  clean_cmd->add_option("--dev-out", clean.dev_out, "where to write the cleaned development set");
  clean_cmd->add_option("--report", clean.report, "write the cleaning report JSON here");
  clean_cmd->add_option("--kind", clean.kind, "labeled | unlabeled")
      ->check(CLI::IsMember({"labeled", "unlabeled"}));
  clean_cmd->add_option("--format", clean.format, "jsonl | csv | tsv (default: by extension)")
      ->check(CLI::IsMember({"jsonl", "csv", "tsv"}));

  auto* selftrain_cmd = app.add_subcommand("selftrain", "Run teacher, pseudo-labeling, student "
                                                        "and finetuning into a run directory");
  auto* pseudolabel_cmd = app.add_subcommand(
      "pseudolabel", "Score the unlabeled pool with the teacher and select pseudo-labels");
  auto* student_cmd = app.add_subcommand("train-student", "Train the student on pseudo.jsonl");
  auto* finetune_cmd = app.add_subcommand("finetune", "Finetune the student on the labeled set");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Macro-F1 of a run's model on a split");
  eval_cmd->add_option("run_dir", eval.run_dir, "run directory (default: run.out)");
  eval_cmd->add_option("--split", eval.split, "train | dev | test");
  eval_cmd->add_option("--model", eval.model, "teacher | student | final")
      ->check(CLI::IsMember({"teacher", "student", "final"}));
  eval_cmd->add_option("--seeds", eval.seeds,
                       "comma-separated seeds; retrain once per seed and aggregate");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Pseudo-label distribution over subreddits");
  report_cmd->add_option("run_dir", report.run_dir, "run directory (default: run.out)");
  report_cmd->add_option("--top-n", report.top_n, "named subreddits in the figure CSV");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus and matching config");
  synth_cmd->add_option("--dir", synth.dir, "output directory")->required();
  synth_cmd->add_option("--corpus-seed", synth.cfg.seed, "generator seed");
  synth_cmd->add_option("--n-train", synth.cfg.n_train);
  synth_cmd->add_option("--n-dev", synth.cfg.n_dev);
  synth_cmd->add_option("--n-test", synth.cfg.n_test);
  synth_cmd->add_option("--n-unlabeled", synth.cfg.n_unlabeled);
  synth_cmd->add_option("--noise", synth.cfg.label_noise, "train label noise rate");
  synth_cmd->add_option("--select-k", synth.k, "select.k written to the config");

  std::vector<std::string> argv;
  argv.reserve(args.size());
  for (auto it = args.rbegin(); it != args.rend(); ++it) argv.push_back(*it);
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  for (const KeyFlag& kf : key_flags) {
    if (kf.option->count() > 0) global.overrides.emplace_back(kf.key, kf.value);
  }

  try {
    if (*clean_cmd) return cmd_clean(clean, global, out);
    if (*selftrain_cmd) return cmd_selftrain(global, out);
    if (*pseudolabel_cmd) return cmd_pseudolabel(global, out);
    if (*student_cmd) return cmd_train_student(global, out);
    if (*finetune_cmd) return cmd_finetune(global, out);
    if (*eval_cmd) return cmd_eval(eval, global, out);
    if (*report_cmd) return cmd_report(report, global, out);
    if (*synth_cmd) return cmd_synth(synth, global, out);
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    logger()->error("{}", e.what());
    return kDataError;
  }
  return kUsageError;
}

}  // namespace pseudolabel::cli
