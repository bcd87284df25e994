#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "pseudolabel/error.hpp"
#include "pseudolabel/metrics.hpp"

using namespace pseudolabel;

namespace {

std::vector<SeverityLabel> labels(const std::vector<int>& v) {
  std::vector<SeverityLabel> out;
  for (int x : v) out.push_back(label_from_index(static_cast<std::size_t>(x)));
  return out;
}

EvalReport eval_ints(const std::vector<int>& g, const std::vector<int>& p) {
  return evaluate(labels(g), labels(p));
}

}  // namespace

TEST_CASE("worked example") {
  const std::vector<int> gold = {0, 0, 1, 1, 2, 2};
  const std::vector<int> pred = {0, 1, 1, 1, 2, 0};
  const EvalReport r = eval_ints(gold, pred);
  CHECK(r.confusion.counts[0][1] == 1);
  CHECK(r.confusion.counts[2][0] == 1);
  CHECK(r.confusion.total() == 6);
  CHECK(r.per_class[0].f1 == doctest::Approx(0.5));
  CHECK(r.per_class[1].f1 == doctest::Approx(0.8));
  CHECK(r.per_class[2].f1 == doctest::Approx(2.0 / 3.0));
  CHECK(r.per_class[1].precision == doctest::Approx(2.0 / 3.0));
  CHECK(r.per_class[2].recall == doctest::Approx(0.5));
  CHECK(r.macro_f1 == doctest::Approx((0.5 + 0.8 + 2.0 / 3.0) / 3.0));
  CHECK(r.macro_f1 == doctest::Approx(0.6556).epsilon(1e-4));
  CHECK(r.per_class[0].support == 2);
  CHECK(r.n == 6);
}

TEST_CASE("absent classes count as zero") {
  const EvalReport r = eval_ints({0, 0, 0}, {0, 0, 0});
  CHECK(r.per_class[0].f1 == 1.0);
  CHECK(r.per_class[1].f1 == 0.0);
  CHECK(r.per_class[1].precision == 0.0);
  CHECK(r.per_class[2].recall == 0.0);
  CHECK(r.macro_f1 == doctest::Approx(1.0 / 3.0));

  const EvalReport perfect = eval_ints({0, 1, 2}, {0, 1, 2});
  CHECK(perfect.macro_f1 == 1.0);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(eval_ints({0, 1}, {0}), DataError);
  CHECK_THROWS_AS(eval_ints({}, {}), DataError);
}

TEST_CASE("agrees with an independent scorer on random instances") {
  Rng rng(2718);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    std::vector<int> g(n), p(n);
    // Skewed draws so absent classes show up.
    const std::uint64_t classes = 1 + rng.below(3);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = static_cast<int>(rng.below(classes));
      p[i] = static_cast<int>(rng.below(3));
    }
    const EvalReport r = eval_ints(g, p);
    const oracle::Scores o = oracle::score(g, p);
    for (int c = 0; c < 3; ++c) {
      CHECK(std::abs(r.per_class[c].precision - o.precision[c]) <= 1e-12);
      CHECK(std::abs(r.per_class[c].recall - o.recall[c]) <= 1e-12);
      CHECK(std::abs(r.per_class[c].f1 - o.f1[c]) <= 1e-12);
    }
    CHECK(std::abs(r.macro_f1 - o.macro) <= 1e-12);
  }
}

TEST_CASE("invariant under sample permutation and class relabelling") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    std::vector<int> g(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = static_cast<int>(rng.below(3));
      p[i] = static_cast<int>(rng.below(3));
    }
    const double base = eval_ints(g, p).macro_f1;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    std::vector<int> g2(n), p2(n);
    for (std::size_t i = 0; i < n; ++i) {
      g2[i] = g[order[i]];
      p2[i] = p[order[i]];
    }
    CHECK(eval_ints(g2, p2).macro_f1 == doctest::Approx(base).epsilon(1e-12));

    int perm[3] = {0, 1, 2};
    std::next_permutation(perm, perm + 1 + rng.below(3));
    for (std::size_t i = 0; i < n; ++i) {
      g2[i] = perm[g[i]];
      p2[i] = perm[p[i]];
    }
    CHECK(eval_ints(g2, p2).macro_f1 == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("multi-run aggregation uses the sample deviation") {
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  const MultiRunReport m = evaluate_runs(
      [](std::uint64_t seed) {
        // macro-F1 of 1/3, 2/3 (approx) and 1 for seeds 1, 2, 3.
        if (seed == 1) return evaluate(labels({0, 0}), labels({0, 0}), seed);
        if (seed == 2) return evaluate(labels({0, 1, 2}), labels({0, 1, 1}), seed);
        return evaluate(labels({0, 1, 2}), labels({0, 1, 2}), seed);
      },
      seeds);
  REQUIRE(m.runs.size() == 3);
  CHECK(m.runs[1].seed == 2);
  std::vector<double> v;
  for (const auto& r : m.runs) v.push_back(r.macro_f1);
  const double mean = (v[0] + v[1] + v[2]) / 3;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  CHECK(m.mean_macro_f1 == doctest::Approx(mean).epsilon(1e-12));
  CHECK(m.std_macro_f1 == doctest::Approx(std::sqrt(ss / 2)).epsilon(1e-12));

  const std::string csv = to_csv(m);
  CHECK(csv.rfind("seed,n,macro_f1,f1_low,f1_moderate,f1_severe\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(to_json(m).find("\"std_macro_f1\"") != std::string::npos);
}

TEST_CASE("a single run has zero deviation") {
  const std::vector<std::uint64_t> seeds = {9};
  const MultiRunReport m = evaluate_runs(
      [](std::uint64_t s) { return evaluate(labels({0, 1}), labels({0, 0}), s); }, seeds);
  CHECK(m.std_macro_f1 == 0.0);
  CHECK(m.mean_macro_f1 == m.runs[0].macro_f1);
}

TEST_CASE("evaluate_runs rejects repeated seeds and names failing seeds") {
  const auto ok = [](std::uint64_t s) { return evaluate(labels({0}), labels({0}), s); };
  const std::vector<std::uint64_t> repeated = {4, 4};
  CHECK_THROWS_AS(evaluate_runs(ok, repeated), ConfigError);

  const std::vector<std::uint64_t> seeds = {1, 77};
  try {
    evaluate_runs(
        [](std::uint64_t s) -> EvalReport {
          if (s == 77) throw DataError("boom");
          return evaluate(labels({0}), labels({0}), s);
        },
        seeds);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("77") != std::string::npos);
    CHECK(msg.find("boom") != std::string::npos);
  }
}
