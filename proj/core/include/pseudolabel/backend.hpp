#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pseudolabel/corpus.hpp"
#include "pseudolabel/linear_model.hpp"

namespace pseudolabel {

// A classifier that can be trained into, and scored from, a model path.
// Teacher and student always go through the same backend.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string describe() const = 0;

  // Trains on `train` (continuing from `init` when given) and persists the
  // result at `model_path`.
  virtual void fit(const Dataset& train, const TrainConfig& cfg,
                   const std::filesystem::path& model_path,
                   const std::optional<std::filesystem::path>& init) = 0;

  virtual std::vector<Logits> predict(const std::filesystem::path& model_path,
                                      std::span<const std::string> texts) = 0;
};

// In-process linear model; model_path is a binary model file.
class NativeBackend final : public Backend {
 public:
  explicit NativeBackend(unsigned predict_threads = 0) : threads_(predict_threads) {}

  std::string describe() const override { return "native"; }
  void fit(const Dataset& train, const TrainConfig& cfg,
           const std::filesystem::path& model_path,
           const std::optional<std::filesystem::path>& init) override;
  std::vector<Logits> predict(const std::filesystem::path& model_path,
                              std::span<const std::string> texts) override;

 private:
  unsigned threads_;
};

// Child process speaking the line protocol (see protocol.hpp). The
// handshake runs in the constructor; shutdown is sent on destruction.
class ProcessBackend final : public Backend {
 public:
  explicit ProcessBackend(std::vector<std::string> argv,
                          std::size_t predict_chunk = 512);
  ~ProcessBackend() override;
  ProcessBackend(const ProcessBackend&) = delete;
  ProcessBackend& operator=(const ProcessBackend&) = delete;

  std::string describe() const override;
  void fit(const Dataset& train, const TrainConfig& cfg,
           const std::filesystem::path& model_path,
           const std::optional<std::filesystem::path>& init) override;
  std::vector<Logits> predict(const std::filesystem::path& model_path,
                              std::span<const std::string> texts) override;

  class Child;

 private:
  std::vector<std::string> argv_;
  std::size_t predict_chunk_;
  std::unique_ptr<Child> child_;
};

// Shell-like word splitting: whitespace separates, single and double quotes
// group, backslash escapes the next character.
std::vector<std::string> split_command_line(std::string_view command);

// "native" or "exec:<command line>". Throws ConfigError otherwise.
std::unique_ptr<Backend> make_backend(std::string_view choice);

}  // namespace pseudolabel
