// Reference implementation of the backend line protocol, backed by the
// native linear model. Used to exercise the external-backend path and as a
// transcript template for other backends.
//
//   pseudolabel-stub-backend [--fail-on hello|fit|predict] [--proto N] [--drop-row]

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pseudolabel/corpus.hpp"
#include "pseudolabel/error.hpp"
#include "pseudolabel/linear_model.hpp"
#include "pseudolabel/protocol.hpp"

namespace proto = pseudolabel::protocol;

int main(int argc, char** argv) {
  CLI::App app{"Stub classifier backend speaking the line protocol on stdin/stdout"};
  std::string fail_on;
  int version = proto::kVersion;
  bool drop_row = false;
  app.add_option("--fail-on", fail_on, "answer this command with an error");
  app.add_option("--proto", version, "protocol version to announce");
  app.add_flag("--drop-row", drop_row, "return one logit row too few from predict");
  CLI11_PARSE(app, argc, argv);

  bool greeted = false;
  std::optional<pseudolabel::LinearModel> current;
  std::string line;
  while (std::getline(std::cin, line)) {
    proto::Response response;
    try {
      const proto::Request request = proto::decode_request(line);
      if (std::holds_alternative<proto::Shutdown>(request)) break;
      const std::string cmd = std::holds_alternative<proto::Hello>(request) ? "hello"
                              : std::holds_alternative<proto::Fit>(request) ? "fit"
                                                                             : "predict";
      if (cmd == fail_on) throw pseudolabel::Error("injected failure on " + cmd);
      if (cmd != "hello" && !greeted) throw pseudolabel::Error("expected hello first");

      if (cmd == "hello") {
        greeted = true;
        response.proto = version;
      } else if (const auto* fit = std::get_if<proto::Fit>(&request)) {
        const auto train = pseudolabel::load_dataset(fit->train_path, pseudolabel::DatasetFormat::Jsonl,
                                                     pseudolabel::DatasetKind::Labeled);
        auto result = fit->init_model_dir
                          ? pseudolabel::fit(train, fit->config,
                                             pseudolabel::load_model(*fit->init_model_dir))
                          : pseudolabel::fit(train, fit->config);
        pseudolabel::save_model(result.model, fit->model_dir);
        current = std::move(result.model);
      } else {
        const auto& predict = std::get<proto::Predict>(request);
        if (predict.model_dir) current = pseudolabel::load_model(*predict.model_dir);
        if (!current) throw pseudolabel::Error("predict before fit");
        auto logits = pseudolabel::predict_logits(*current, predict.texts, 1);
        if (drop_row && !logits.empty()) logits.pop_back();
        response.logits = std::move(logits);
      }
    } catch (const std::exception& e) {
      response = proto::Response::failure(e.what());
    }
    std::cout << proto::encode(response) << '\n' << std::flush;
  }
  return 0;
}
