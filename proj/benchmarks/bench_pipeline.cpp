#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "pseudolabel/features.hpp"
#include "pseudolabel/hashing.hpp"
#include "pseudolabel/linear_model.hpp"
#include "pseudolabel/selection.hpp"
#include "pseudolabel/synthetic.hpp"

using namespace pseudolabel;

namespace {

const SyntheticCorpus& corpus() {
  static const SyntheticCorpus c = [] {
    SyntheticConfig cfg;
    cfg.n_unlabeled = 20000;
    return generate_synthetic_corpus(cfg);
  }();
  return c;
}

const LinearModel& teacher() {
  static const LinearModel m = fit(corpus().train, TrainConfig{}).model;
  return m;
}

void BM_Featurize(benchmark::State& state) {
  const auto texts = corpus().unlabeled.texts();
  const FeatureConfig cfg;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(featurize(texts[i++ % texts.size()], cfg));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Featurize);

void BM_Fit(benchmark::State& state) {
  TrainConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(fit(corpus().train, cfg));
  state.SetItemsProcessed(state.iterations() * corpus().train.size() * cfg.epochs);
}
BENCHMARK(BM_Fit)->Unit(benchmark::kMillisecond);

void BM_PredictLogits(benchmark::State& state) {
  const auto texts = corpus().unlabeled.texts();
  const LinearModel& m = teacher();
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(predict_logits(m, texts, threads));
  state.SetItemsProcessed(state.iterations() * texts.size());
}
BENCHMARK(BM_PredictLogits)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_SelectTopK(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<Logits> logits(n);
  std::vector<Post> posts(n);
  for (std::size_t i = 0; i < n; ++i) {
    logits[i] = {rng.uniform(), rng.uniform(), rng.uniform()};
    posts[i].id = "p" + std::to_string(i);
    posts[i].text = "t";
  }
  const SelectionConfig cfg{n / 10, RankingScore::RawLogit};
  for (auto _ : state) benchmark::DoNotOptimize(select_top_k(logits, posts, cfg));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SelectTopK)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
