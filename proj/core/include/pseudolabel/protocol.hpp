#pragma once

// Line-delimited JSON protocol spoken to external classifier backends over
// the child's stdin/stdout. One request in flight at a time.
//
//   {"cmd":"hello"}                                   -> {"ok":true,"proto":1}
//   {"cmd":"fit","train_path":p,"config":{..},"model_dir":d} -> {"ok":true}
//   {"cmd":"predict","texts":[..]}                   -> {"ok":true,"logits":[[a,b,c],..]}
//   {"cmd":"shutdown"}
//
// Failures are {"ok":false,"error":msg}. Two optional extensions are sent by
// this client: config.init_model_dir (continue training from a saved model)
// and predict.model_dir (which saved model to score with).

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pseudolabel/linear_model.hpp"

namespace pseudolabel::protocol {

inline constexpr int kVersion = 1;

struct Hello {};
struct Fit {
  std::string train_path;
  TrainConfig config;
  std::optional<std::string> init_model_dir;
  std::string model_dir;
};
struct Predict {
  std::vector<std::string> texts;
  std::optional<std::string> model_dir;
};
struct Shutdown {};

using Request = std::variant<Hello, Fit, Predict, Shutdown>;

struct Response {
  bool ok = true;
  std::string error;
  std::optional<int> proto;
  std::optional<std::vector<Logits>> logits;

  static Response failure(std::string message) {
    Response r;
    r.ok = false;
    r.error = std::move(message);
    return r;
  }
};

// Single line, no trailing newline.
std::string encode(const Request& request);
std::string encode(const Response& response);

// Throw BackendError on malformed lines.
Request decode_request(std::string_view line);
Response decode_response(std::string_view line);

}  // namespace pseudolabel::protocol
