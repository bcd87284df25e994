#include "pseudolabel/protocol.hpp"

#include <cmath>

#include "json.hpp"
#include "pseudolabel/error.hpp"

namespace pseudolabel::protocol {

using json = nlohmann::ordered_json;

namespace {

json config_to_json(const TrainConfig& cfg, const std::optional<std::string>& init) {
  json j;
  j["optimizer"] = to_string(cfg.optimizer);
  j["learning_rate"] = cfg.learning_rate;
  j["max_input_length"] = cfg.max_input_length;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["l2_penalty"] = cfg.l2_penalty;
  j["seed"] = cfg.seed;
  j["dimension"] = cfg.dimension;
  if (init) j["init_model_dir"] = *init;
  return j;
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw BackendError(std::string("protocol: config field '") + key + "' has the wrong type");
    }
  }
}

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) throw BackendError("protocol: 'config' must be an object");
  TrainConfig cfg;
  if (auto it = j.find("optimizer"); it != j.end()) {
    auto opt = it->is_string() ? parse_optimizer(it->get<std::string>()) : std::nullopt;
    if (!opt) throw BackendError("protocol: unknown optimizer");
    cfg.optimizer = *opt;
  }
  read_field(j, "learning_rate", cfg.learning_rate);
  read_field(j, "max_input_length", cfg.max_input_length);
  read_field(j, "batch_size", cfg.batch_size);
  read_field(j, "epochs", cfg.epochs);
  read_field(j, "l2_penalty", cfg.l2_penalty);
  read_field(j, "seed", cfg.seed);
  read_field(j, "dimension", cfg.dimension);
  return cfg;
}

json parse_line(std::string_view line) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw BackendError("protocol: message is not a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("protocol: malformed message: ") + e.what());
  }
}

std::string require_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw BackendError(std::string("protocol: missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

std::string encode(const Request& request) {
  json j;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Hello>) {
          j["cmd"] = "hello";
        } else if constexpr (std::is_same_v<T, Fit>) {
          j["cmd"] = "fit";
          j["train_path"] = r.train_path;
          j["config"] = config_to_json(r.config, r.init_model_dir);
          j["model_dir"] = r.model_dir;
        } else if constexpr (std::is_same_v<T, Predict>) {
          j["cmd"] = "predict";
          j["texts"] = r.texts;
          if (r.model_dir) j["model_dir"] = *r.model_dir;
        } else {
          j["cmd"] = "shutdown";
        }
      },
      request);
  return j.dump();
}

std::string encode(const Response& response) {
  json j;
  j["ok"] = response.ok;
  if (!response.ok) j["error"] = response.error;
  if (response.proto) j["proto"] = *response.proto;
  if (response.logits) {
    json rows = json::array();
    for (const Logits& l : *response.logits) rows.push_back({l[0], l[1], l[2]});
    j["logits"] = std::move(rows);
  }
  return j.dump();
}

Request decode_request(std::string_view line) {
  const json j = parse_line(line);
  const std::string cmd = require_string(j, "cmd");
  if (cmd == "hello") return Hello{};
  if (cmd == "shutdown") return Shutdown{};
  if (cmd == "fit") {
    Fit fit;
    fit.train_path = require_string(j, "train_path");
    fit.model_dir = require_string(j, "model_dir");
    auto cfg = j.find("config");
    if (cfg != j.end()) {
      fit.config = config_from_json(*cfg);
      if (auto init = cfg->find("init_model_dir"); init != cfg->end() && init->is_string()) {
        fit.init_model_dir = init->get<std::string>();
      }
    }
    return fit;
  }
  if (cmd == "predict") {
    Predict predict;
    auto texts = j.find("texts");
    if (texts == j.end() || !texts->is_array()) {
      throw BackendError("protocol: predict needs a 'texts' array");
    }
    for (const auto& t : *texts) {
      if (!t.is_string()) throw BackendError("protocol: predict texts must be strings");
      predict.texts.push_back(t.get<std::string>());
    }
    if (auto dir = j.find("model_dir"); dir != j.end() && dir->is_string()) {
      predict.model_dir = dir->get<std::string>();
    }
    return predict;
  }
  throw BackendError("protocol: unknown cmd '" + cmd + "'");
}

Response decode_response(std::string_view line) {
  const json j = parse_line(line);
  auto ok = j.find("ok");
  if (ok == j.end() || !ok->is_boolean()) throw BackendError("protocol: response lacks boolean 'ok'");
  Response r;
  r.ok = ok->get<bool>();
  if (!r.ok) {
    auto err = j.find("error");
    r.error = (err != j.end() && err->is_string()) ? err->get<std::string>()
                                                   : std::string("unspecified backend error");
    return r;
  }
  if (auto proto = j.find("proto"); proto != j.end()) {
    if (!proto->is_number_integer()) throw BackendError("protocol: 'proto' must be an integer");
    r.proto = proto->get<int>();
  }
  if (auto rows = j.find("logits"); rows != j.end()) {
    if (!rows->is_array()) throw BackendError("protocol: 'logits' must be an array");
    std::vector<Logits> logits;
    logits.reserve(rows->size());
    for (const auto& row : *rows) {
      if (!row.is_array() || row.size() != kNumClasses) {
        throw BackendError("protocol: every logit row must have exactly 3 numbers");
      }
      Logits l{};
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (!row[c].is_number()) throw BackendError("protocol: logits must be numbers");
        l[c] = row[c].get<double>();
        if (!std::isfinite(l[c])) throw BackendError("protocol: non-finite logit");
      }
      logits.push_back(l);
    }
    r.logits = std::move(logits);
  }
  return r;
}

}  // namespace pseudolabel::protocol
