#include "pseudolabel/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "json.hpp"
#include "pseudolabel/error.hpp"

namespace pseudolabel {

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) {
    for (std::size_t v : row) n += v;
  }
  return n;
}

ConfusionMatrix confusion(std::span<const SeverityLabel> gold,
                          std::span<const SeverityLabel> predicted) {
  if (gold.size() != predicted.size()) {
    throw DataError("confusion: " + std::to_string(gold.size()) + " gold labels but " +
                    std::to_string(predicted.size()) + " predictions");
  }
  if (gold.empty()) throw DataError("confusion: no samples");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++cm.counts[index_of(gold[i])][index_of(predicted[i])];
  }
  return cm;
}

std::array<ClassScores, kNumClasses> per_class_scores(const ConfusionMatrix& cm) {
  std::array<ClassScores, kNumClasses> scores{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double tp = static_cast<double>(cm.counts[c][c]);
    double predicted = 0.0;
    double actual = 0.0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      predicted += static_cast<double>(cm.counts[k][c]);
      actual += static_cast<double>(cm.counts[c][k]);
    }
    ClassScores& s = scores[c];
    s.support = static_cast<std::size_t>(actual);
    s.precision = predicted > 0.0 ? tp / predicted : 0.0;
    s.recall = actual > 0.0 ? tp / actual : 0.0;
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  }
  return scores;
}

double macro_f1(const ConfusionMatrix& cm) {
  double sum = 0.0;
  for (const ClassScores& s : per_class_scores(cm)) sum += s.f1;
  return sum / static_cast<double>(kNumClasses);
}

EvalReport evaluate(std::span<const SeverityLabel> gold, std::span<const SeverityLabel> predicted,
                    std::uint64_t seed) {
  EvalReport r;
  r.confusion = confusion(gold, predicted);
  r.per_class = per_class_scores(r.confusion);
  r.macro_f1 = macro_f1(r.confusion);
  r.n = gold.size();
  r.seed = seed;
  return r;
}

MultiRunReport aggregate(std::vector<EvalReport> runs) {
  MultiRunReport out;
  out.runs = std::move(runs);
  if (out.runs.empty()) return out;
  double sum = 0.0;
  for (const auto& r : out.runs) sum += r.macro_f1;
  const double n = static_cast<double>(out.runs.size());
  out.mean_macro_f1 = sum / n;
  if (out.runs.size() > 1) {
    double sq = 0.0;
    for (const auto& r : out.runs) sq += (r.macro_f1 - out.mean_macro_f1) * (r.macro_f1 - out.mean_macro_f1);
    out.std_macro_f1 = std::sqrt(sq / (n - 1.0));
  }
  return out;
}

MultiRunReport evaluate_runs(const std::function<EvalReport(std::uint64_t)>& run_one,
                             std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw ConfigError("evaluate_runs: no seeds");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("evaluate_runs: seeds must be distinct");
  }
  std::vector<EvalReport> runs;
  runs.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    try {
      EvalReport r = run_one(seed);
      r.seed = seed;
      runs.push_back(std::move(r));
    } catch (const ConfigError& e) {
      throw ConfigError("run with seed " + std::to_string(seed) + " failed: " + e.what());
    } catch (const BackendError& e) {
      throw BackendError("run with seed " + std::to_string(seed) + " failed: " + e.what());
    } catch (const std::exception& e) {
      throw DataError("run with seed " + std::to_string(seed) + " failed: " + e.what());
    }
  }
  return aggregate(std::move(runs));
}

namespace {

nlohmann::ordered_json report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["n"] = r.n;
  j["macro_f1"] = r.macro_f1;
  nlohmann::ordered_json per_class;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const ClassScores& s = r.per_class[c];
    per_class[std::string(to_string(label_from_index(c)))] = {
        {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
  }
  j["per_class"] = per_class;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : r.confusion.counts) rows.push_back(row);
  j["confusion"] = rows;
  return j;
}

}  // namespace

std::string to_json(const EvalReport& report) { return report_json(report).dump(2); }

std::string to_json(const MultiRunReport& report) {
  nlohmann::ordered_json j;
  j["mean_macro_f1"] = report.mean_macro_f1;
  j["std_macro_f1"] = report.std_macro_f1;
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& r : report.runs) runs.push_back(report_json(r));
  j["runs"] = runs;
  return j.dump(2);
}

std::string to_csv(const MultiRunReport& report) {
  std::string out = "seed,n,macro_f1,f1_low,f1_moderate,f1_severe\n";
  char buf[256];
  for (const auto& r : report.runs) {
    std::snprintf(buf, sizeof buf, "%llu,%zu,%.6f,%.6f,%.6f,%.6f\n",
                  static_cast<unsigned long long>(r.seed), r.n, r.macro_f1, r.per_class[0].f1,
                  r.per_class[1].f1, r.per_class[2].f1);
    out += buf;
  }
  return out;
}

}  // namespace pseudolabel
