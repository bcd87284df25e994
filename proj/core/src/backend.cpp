#include "pseudolabel/backend.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "pseudolabel/error.hpp"
#include "pseudolabel/protocol.hpp"

namespace pseudolabel {

void NativeBackend::fit(const Dataset& train, const TrainConfig& cfg,
                        const std::filesystem::path& model_path,
                        const std::optional<std::filesystem::path>& init) {
  FitResult result = init ? pseudolabel::fit(train, cfg, load_model(*init))
                          : pseudolabel::fit(train, cfg);
  save_model(result.model, model_path);
}

std::vector<Logits> NativeBackend::predict(const std::filesystem::path& model_path,
                                           std::span<const std::string> texts) {
  const LinearModel model = load_model(model_path);
  return predict_logits(model, texts, threads_);
}

// Owns the child process and both pipe ends.
class ProcessBackend::Child {
 public:
  explicit Child(const std::vector<std::string>& argv) {
    if (argv.empty()) throw ConfigError("backend command line is empty");
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0) {
      throw BackendError(std::string("pipe: ") + std::strerror(errno));
    }
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    pid_ = ::fork();
    if (pid_ < 0) throw BackendError(std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execvp(args[0], args.data());
      const std::string msg = std::string("{\"ok\":false,\"error\":\"cannot execute backend: ") +
                              std::strerror(errno) + "\"}\n";
      [[maybe_unused]] auto n = ::write(STDOUT_FILENO, msg.data(), msg.size());
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  ~Child() {
    close_fd(write_fd_);
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    int status = 0;
    while (::waitpid(pid_, &status, WNOHANG) == 0) {
      if (std::chrono::steady_clock::now() > deadline) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    close_fd(read_fd_);
  }

  Child(const Child&) = delete;
  Child& operator=(const Child&) = delete;

  void write_line(const std::string& line) {
    std::string buf = line;
    buf.push_back('\n');
    std::size_t off = 0;
    while (off < buf.size()) {
      const ssize_t n = ::write(write_fd_, buf.data() + off, buf.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("backend stdin closed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    while (true) {
      if (const auto nl = pending_.find('\n'); nl != std::string::npos) {
        std::string line = pending_.substr(0, nl);
        pending_.erase(0, nl + 1);
        return line;
      }
      char buf[65536];
      const ssize_t n = ::read(read_fd_, buf, sizeof buf);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("reading backend stdout: ") + std::strerror(errno));
      }
      if (n == 0) throw BackendError("backend exited without answering");
      pending_.append(buf, static_cast<std::size_t>(n));
    }
  }

  void close_input() { close_fd(write_fd_); }

 private:
  static void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }

  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string pending_;
};

namespace {

protocol::Response exchange(ProcessBackend::Child& child, const protocol::Request& request) {
  try {
    child.write_line(protocol::encode(request));
  } catch (const BackendError&) {
    // A child that died early may have left an error line behind.
    std::optional<protocol::Response> last;
    try {
      last = protocol::decode_response(child.read_line());
    } catch (const Error&) {
    }
    if (last && !last->ok) throw BackendError("backend error: " + last->error);
    throw;
  }
  protocol::Response response = protocol::decode_response(child.read_line());
  if (!response.ok) throw BackendError("backend error: " + response.error);
  return response;
}

}  // namespace

ProcessBackend::ProcessBackend(std::vector<std::string> argv, std::size_t predict_chunk)
    : argv_(std::move(argv)), predict_chunk_(predict_chunk == 0 ? 1 : predict_chunk) {
  child_ = std::make_unique<Child>(argv_);
  const protocol::Response hello = exchange(*child_, protocol::Hello{});
  if (hello.proto != protocol::kVersion) {
    throw BackendError("backend speaks protocol " +
                       (hello.proto ? std::to_string(*hello.proto) : std::string("<none>")) +
                       ", expected " + std::to_string(protocol::kVersion));
  }
}

ProcessBackend::~ProcessBackend() {
  if (!child_) return;
  try {
    child_->write_line(protocol::encode(protocol::Shutdown{}));
  } catch (const Error&) {
  }
}

std::string ProcessBackend::describe() const {
  std::string out = "exec:";
  for (std::size_t i = 0; i < argv_.size(); ++i) {
    if (i != 0) out.push_back(' ');
    out += argv_[i];
  }
  return out;
}

void ProcessBackend::fit(const Dataset& train, const TrainConfig& cfg,
                         const std::filesystem::path& model_path,
                         const std::optional<std::filesystem::path>& init) {
  const std::filesystem::path train_path = model_path.string() + ".train.jsonl";
  save_dataset(train, train_path, DatasetFormat::Jsonl);
  protocol::Fit request;
  request.train_path = train_path.string();
  request.config = cfg;
  if (init) request.init_model_dir = init->string();
  request.model_dir = model_path.string();
  exchange(*child_, request);
}

std::vector<Logits> ProcessBackend::predict(const std::filesystem::path& model_path,
                                            std::span<const std::string> texts) {
  std::vector<Logits> out;
  out.reserve(texts.size());
  for (std::size_t first = 0; first < texts.size(); first += predict_chunk_) {
    const std::size_t count = std::min(predict_chunk_, texts.size() - first);
    protocol::Predict request;
    request.texts.assign(texts.begin() + static_cast<std::ptrdiff_t>(first),
                         texts.begin() + static_cast<std::ptrdiff_t>(first + count));
    request.model_dir = model_path.string();
    protocol::Response response = exchange(*child_, request);
    if (!response.logits || response.logits->size() != count) {
      throw BackendError("backend returned " +
                         std::to_string(response.logits ? response.logits->size() : 0) +
                         " logit rows for " + std::to_string(count) + " texts");
    }
    out.insert(out.end(), response.logits->begin(), response.logits->end());
  }
  return out;
}

std::vector<std::string> split_command_line(std::string_view command) {
  std::vector<std::string> words;
  std::string current;
  bool in_word = false;
  char quote = 0;
  for (std::size_t i = 0; i < command.size(); ++i) {
    const char c = command[i];
    if (quote != 0) {
      if (c == quote) {
        quote = 0;
      } else if (c == '\\' && quote == '"' && i + 1 < command.size()) {
        current.push_back(command[++i]);
      } else {
        current.push_back(c);
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (c == '\\' && i + 1 < command.size()) {
      current.push_back(command[++i]);
      in_word = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_word) words.push_back(std::move(current));
      current.clear();
      in_word = false;
    } else {
      current.push_back(c);
      in_word = true;
    }
  }
  if (quote != 0) throw ConfigError("unterminated quote in backend command line");
  if (in_word) words.push_back(std::move(current));
  return words;
}

std::unique_ptr<Backend> make_backend(std::string_view choice) {
  if (choice == "native") return std::make_unique<NativeBackend>();
  if (choice.starts_with("exec:")) {
    auto argv = split_command_line(choice.substr(5));
    if (argv.empty()) throw ConfigError("backend 'exec:' needs a command line");
    return std::make_unique<ProcessBackend>(std::move(argv));
  }
  throw ConfigError("unknown backend '" + std::string(choice) + "' (expected native or exec:<argv>)");
}

}  // namespace pseudolabel
