#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pseudolabel/backend.hpp"
#include "pseudolabel/corpus.hpp"
#include "pseudolabel/linear_model.hpp"
#include "pseudolabel/selection.hpp"

namespace pseudolabel {

// Files of one run directory. With more than one round, every round but the
// last lives under round-<r>/ and the last round at the top level.
struct RunLayout {
  std::filesystem::path dir;

  std::filesystem::path manifest() const { return dir / "manifest.json"; }
  std::filesystem::path timings() const { return dir / "timings.json"; }
  std::filesystem::path lock() const { return dir / ".lock"; }
  std::filesystem::path teacher_model() const { return dir / "teacher.model"; }
  std::filesystem::path teacher_logits() const { return dir / "teacher_logits.jsonl"; }
  std::filesystem::path pseudo() const { return dir / "pseudo.jsonl"; }
  std::filesystem::path student_model() const { return dir / "student.model"; }
  std::filesystem::path final_model() const { return dir / "final.model"; }

  RunLayout round(unsigned r, unsigned rounds) const;
};

// Exclusive claim on a run directory via an O_EXCL lock file. Throws
// ConfigError when another process holds it.
class RunLock {
 public:
  explicit RunLock(const RunLayout& layout);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

// Seeds of one round, all derived from the run seed:
//   teacher  = derive_seed(run_seed, 1)                 (round 1 only)
//   student  = derive_seed(run_seed, 2 + 2 * (round - 1))
//   finetune = derive_seed(run_seed, 3 + 2 * (round - 1))
struct StageSeeds {
  std::uint64_t teacher = 0;
  std::uint64_t student = 0;
  std::uint64_t finetune = 0;
};
StageSeeds stage_seeds(std::uint64_t run_seed, unsigned round = 1);

struct SelfTrainOptions {
  TrainConfig train;
  // Falls back to `train` when unset.
  std::optional<TrainConfig> finetune;
  SelectionConfig selection;
  std::uint64_t seed = 0;
  unsigned rounds = 1;
  // Recorded verbatim in the manifest so the run can be replayed.
  std::map<std::string, std::string> config_snapshot;
  // Input cleaning that happened before the run, copied into the manifest.
  std::map<std::string, CleaningReport> cleaning;

  const TrainConfig& finetune_config() const { return finetune ? *finetune : train; }
  void validate() const;
};

struct DatasetRecord {
  std::string digest;
  std::size_t size = 0;
  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

// Everything needed to replay a run. Wall-clock timings are written to
// timings.json instead so that identical runs give identical manifests.
struct Manifest {
  int format_version = 1;
  std::string backend;
  std::uint64_t seed = 0;
  unsigned rounds = 1;
  std::map<std::string, std::string> config;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, DatasetRecord> datasets;
  std::map<std::string, CleaningReport> cleaning;
  // One entry per round, canonical class order.
  std::vector<std::array<std::size_t, kNumClasses>> selection_counts;
  // Artifact file name -> FNV-1a-64 of its bytes (directories are skipped).
  std::map<std::string, std::string> artifacts;
  std::vector<std::string> stages;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

std::string serialize_manifest(const Manifest& manifest);
Manifest parse_manifest(std::string_view json);
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

std::string file_digest(const std::filesystem::path& path);

// Refreshes manifest.artifacts from the top-level files of `layout`.
void record_artifacts(Manifest& manifest, const RunLayout& layout);

struct SelfTrainRun {
  RunLayout layout;
  std::filesystem::path teacher;
  std::filesystem::path student;
  std::filesystem::path final_model;
  std::vector<PseudoLabeledSample> pseudo;
  Manifest manifest;
  std::map<std::string, double> stage_seconds;
};

// Scored unlabeled pool, persisted so selection can be rerun with another K.
struct ScoredPost {
  std::string id;
  Logits logits{};
};
void save_logits(std::span<const Post> posts, std::span<const Logits> logits,
                 const std::filesystem::path& path);
std::vector<ScoredPost> load_logits(const std::filesystem::path& path);

// Individual stages. Each persists its output into the layout.
void train_teacher(const Dataset& labeled, const SelfTrainOptions& opts,
                   Backend& backend, const RunLayout& layout);
std::vector<Logits> predict_unlabeled(const Dataset& unlabeled, Backend& backend,
                                      const std::filesystem::path& teacher,
                                      const RunLayout& layout);
// Throws DataError when every class comes back empty.
std::vector<PseudoLabeledSample> select_pseudo_labels(const Dataset& unlabeled,
                                                      std::span<const Logits> logits,
                                                      const SelectionConfig& cfg,
                                                      const RunLayout& layout);
void train_student(std::span<const PseudoLabeledSample> pseudo,
                   const SelfTrainOptions& opts, unsigned round, Backend& backend,
                   const RunLayout& layout);
void finetune_student(const Dataset& labeled, const SelfTrainOptions& opts,
                      unsigned round, Backend& backend, const RunLayout& layout);

// Teacher, prediction, selection, student, finetune; repeated `rounds` times
// with the previous final model as teacher. Writes manifest.json and
// timings.json into layout.dir.
SelfTrainRun run_self_training(const Dataset& labeled, const Dataset& unlabeled,
                               const SelfTrainOptions& opts, Backend& backend,
                               const RunLayout& layout);

}  // namespace pseudolabel
