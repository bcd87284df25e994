#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "pseudolabel/corpus.hpp"
#include "pseudolabel/error.hpp"
#include "pseudolabel/hashing.hpp"
#include "pseudolabel/text.hpp"
#include "test_support.hpp"

using namespace pseudolabel;
using pseudolabel::testing::labeled_post;
using pseudolabel::testing::random_unicode;

namespace {

Dataset labeled(std::vector<Post> posts) { return Dataset(DatasetKind::Labeled, std::move(posts)); }

std::string expect_data_error(std::string_view contents, DatasetFormat fmt,
                              DatasetKind kind = DatasetKind::Labeled) {
  try {
    parse_dataset(contents, fmt, kind, "input");
  } catch (const DataError& e) {
    return e.what();
  }
  FAIL("expected DataError");
  return {};
}

}  // namespace

TEST_CASE("clean_text examples") {
  CHECK(clean_text("I feel\n\nso  tired\t today") == "I feel so tired today");
  CHECK(clean_text("see https://x.co/a?b=1 now") == "see httpurl now");
  CHECK(clean_text("WWW.Example.com and HTTP://foo") == "httpurl and httpurl");
  CHECK(clean_text("   ") == "");
  CHECK(clean_text("") == "");
  CHECK(clean_text("a b　c d") == "a b c d");
  // Prefix must start the token.
  CHECK(clean_text("xhttp://a") == "xhttp://a");
  CHECK(clean_text("http:/a") == "http:/a");
  CHECK(clean_text("ok\r\nhttpurl") == "ok httpurl");
}

TEST_CASE("clean_text is idempotent on random unicode") {
  Rng rng(17);
  for (int i = 0; i < 10000; ++i) {
    const std::string raw = random_unicode(rng, 40);
    const std::string once = clean_text(raw);
    CHECK(clean_text(once) == once);
    // No leading/trailing or doubled whitespace, no control whitespace left.
    CHECK(once.find("  ") == std::string::npos);
    if (!once.empty()) {
      CHECK(text::whitespace_length(once, 0) == 0);
      CHECK(once.back() != ' ');
    }
    for (std::size_t p = 0; p < once.size(); ++p) {
      const std::size_t w = text::whitespace_length(once, p);
      if (w > 0) CHECK(once[p] == ' ');
    }
  }
}

TEST_CASE("clean_posts drops posts that become empty") {
  const Dataset ds = labeled({labeled_post("1", " \t ", SeverityLabel::Low),
                              labeled_post("2", "fine\nday", SeverityLabel::Severe)});
  const auto [out, rep] = clean_posts(ds);
  REQUIRE(out.size() == 1);
  CHECK(out[0].id == "2");
  CHECK(out[0].text == "fine day");
  CHECK(rep.n_input == 2);
  CHECK(rep.n_empty_dropped == 1);
  CHECK(rep.n_surviving() == 1);
  // Input untouched.
  CHECK(ds[1].text == "fine\nday");
}

TEST_CASE("dedup keeps the first occurrence") {
  const Dataset ds = labeled({labeled_post("a", "same", SeverityLabel::Low),
                              labeled_post("b", "other", SeverityLabel::Low),
                              labeled_post("c", "same", SeverityLabel::Severe),
                              labeled_post("d", "Same", SeverityLabel::Low)});
  const auto [out, rep] = dedup(ds);
  REQUIRE(out.size() == 3);
  CHECK(out[0].id == "a");
  CHECK(out[1].id == "b");
  CHECK(out[2].id == "d");
  CHECK(rep.n_dupes_dropped == 1);

  const auto [again, rep2] = dedup(out);
  CHECK(again == out);
  CHECK(rep2.n_dupes_dropped == 0);
}

TEST_CASE("drop_cross_split removes train posts whose text appears in dev") {
  std::vector<Post> train_posts, dev_posts;
  for (int i = 0; i < 10; ++i) {
    train_posts.push_back(labeled_post("t" + std::to_string(i), "text " + std::to_string(i),
                                       SeverityLabel::Moderate));
  }
  for (int i : {2, 5, 7}) {
    dev_posts.push_back(labeled_post("d" + std::to_string(i), "text " + std::to_string(i),
                                     SeverityLabel::Low));
  }
  dev_posts.push_back(labeled_post("dx", "dev only", SeverityLabel::Low));
  const Dataset train = labeled(train_posts);
  const Dataset dev = labeled(dev_posts);

  const auto [out, rep] = drop_cross_split(train, dev);
  CHECK(rep.n_cross_split_dropped == 3);
  CHECK(out.size() == 7);
  for (const Post& p : out) {
    CHECK(p.text != "text 2");
    CHECK(p.text != "text 5");
    CHECK(p.text != "text 7");
  }
  const auto [again, rep2] = drop_cross_split(out, dev);
  CHECK(again == out);
  CHECK(rep2.n_cross_split_dropped == 0);
}

TEST_CASE("drop_cross_split matches a set-intersection oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Post> tp, dp;
    const auto nt = rng.below(30), nd = rng.below(30);
    for (std::uint64_t i = 0; i < nt; ++i)
      tp.push_back(labeled_post("t" + std::to_string(i), "w" + std::to_string(rng.below(20)),
                                SeverityLabel::Low));
    for (std::uint64_t i = 0; i < nd; ++i)
      dp.push_back(labeled_post("d" + std::to_string(i), "w" + std::to_string(rng.below(20)),
                                SeverityLabel::Low));
    std::set<std::string> dev_texts;
    for (const Post& p : dp) dev_texts.insert(p.text);
    std::vector<Post> expected;
    for (const Post& p : tp)
      if (!dev_texts.count(p.text)) expected.push_back(p);

    const auto [out, rep] = drop_cross_split(labeled(tp), labeled(dp));
    CHECK(out.posts() == expected);
    CHECK(rep.n_cross_split_dropped == tp.size() - expected.size());
  }
}

TEST_CASE("cleaning report accumulates") {
  CleaningReport a{10, 1, 2, 0};
  a += CleaningReport{0, 0, 0, 3};
  CHECK(a.n_input == 10);
  CHECK(a.n_dropped() == 6);
  CHECK(a.n_surviving() == 4);
  const std::string json = to_json(a);
  CHECK(json.find("\"n_cross_split_dropped\":3") != std::string::npos);
}

TEST_CASE("dataset invariants") {
  CHECK_THROWS_AS(Dataset(DatasetKind::Labeled, {Post{"1", "x", std::nullopt, std::nullopt}}),
                  DataError);
  CHECK_THROWS_AS(Dataset(DatasetKind::Unlabeled, {labeled_post("1", "x", SeverityLabel::Low)}),
                  DataError);
  CHECK_THROWS_AS(labeled({labeled_post("1", "x", SeverityLabel::Low),
                           labeled_post("1", "y", SeverityLabel::Low)}),
                  DataError);
  const Dataset u = as_unlabeled(labeled({labeled_post("1", "x", SeverityLabel::Low)}));
  CHECK(u.kind() == DatasetKind::Unlabeled);
  CHECK_FALSE(u[0].label.has_value());
}

TEST_CASE("jsonl parsing") {
  const Dataset ds = parse_dataset(
      "{\"id\":\"a\",\"text\":\"hi\",\"label\":\"low\"}\n"
      "\n"
      "{\"id\":7,\"text\":\"yo\",\"label\":\"SEVERE\",\"subreddit\":\"depression\"}\n",
      DatasetFormat::Jsonl, DatasetKind::Labeled);
  REQUIRE(ds.size() == 2);
  CHECK(ds[0].label == SeverityLabel::Low);
  CHECK(ds[1].id == "7");
  CHECK(ds[1].label == SeverityLabel::Severe);
  CHECK(ds[1].subreddit == "depression");
}

TEST_CASE("unlabeled loads ignore the label column") {
  const Dataset ds = parse_dataset("{\"id\":\"a\",\"text\":\"hi\",\"label\":\"whatever\"}\n",
                                   DatasetFormat::Jsonl, DatasetKind::Unlabeled);
  REQUIRE(ds.size() == 1);
  CHECK_FALSE(ds[0].label.has_value());
}

TEST_CASE("load errors name the line and field") {
  const std::string unknown = expect_data_error(
      "{\"id\":\"a\",\"text\":\"x\",\"label\":\"low\"}\n"
      "{\"id\":\"b\",\"text\":\"x\",\"label\":\"mild\"}\n",
      DatasetFormat::Jsonl);
  CHECK(unknown.find("input:2") != std::string::npos);
  CHECK(unknown.find("field 'label'") != std::string::npos);
  CHECK(unknown.find("mild") != std::string::npos);
  CHECK(unknown.find("low, moderate, severe") != std::string::npos);

  const std::string malformed = expect_data_error(
      "{\"id\":\"a\",\"text\":\"x\",\"label\":\"low\"}\n{\"id\":\n", DatasetFormat::Jsonl);
  CHECK(malformed.find("input:2") != std::string::npos);

  const std::string dup = expect_data_error(
      "id,text,label\n1,a,low\n2,b,low\n1,c,low\n", DatasetFormat::Csv);
  CHECK(dup.find("input:4") != std::string::npos);
  CHECK(dup.find("duplicate id") != std::string::npos);

  const std::string missing_text = expect_data_error(
      "{\"id\":\"a\",\"label\":\"low\"}\n", DatasetFormat::Jsonl);
  CHECK(missing_text.find("field 'text'") != std::string::npos);

  const std::string width = expect_data_error("id,text,label\n1,a\n", DatasetFormat::Csv);
  CHECK(width.find("input:2") != std::string::npos);

  const std::string no_label = expect_data_error("id,text\n1,a\n", DatasetFormat::Csv);
  CHECK(no_label.find("label") != std::string::npos);

  const std::string bad_utf8 = expect_data_error(
      "id,text,label\n1,ok,low\n2,bad \xC3\x28 byte,low\n", DatasetFormat::Csv);
  CHECK(bad_utf8.find("input:3") != std::string::npos);
  CHECK(bad_utf8.find("UTF-8") != std::string::npos);
}

TEST_CASE("csv quoting handles commas, quotes and newlines") {
  const Dataset ds = parse_dataset(
      "id,text,label,subreddit\n"
      "1,\"a, \"\"quoted\"\"\nline\",moderate,\n"
      "2,plain,severe,SuicideWatch\n",
      DatasetFormat::Csv, DatasetKind::Labeled);
  REQUIRE(ds.size() == 2);
  CHECK(ds[0].text == "a, \"quoted\"\nline");
  CHECK_FALSE(ds[0].subreddit.has_value());
  CHECK(ds[1].subreddit == "SuicideWatch");
}

TEST_CASE("format detection") {
  CHECK(format_from_path("a/b.jsonl") == DatasetFormat::Jsonl);
  CHECK(format_from_path("b.CSV") == DatasetFormat::Csv);
  CHECK(format_from_path("b.tsv") == DatasetFormat::Tsv);
  CHECK_THROWS_AS(format_from_path("b.txt"), DataError);
  CHECK(parse_format("csv") == DatasetFormat::Csv);
  CHECK_FALSE(parse_format("xml").has_value());
}

TEST_CASE("serialize then parse round-trips in every format") {
  Rng rng(99);
  for (DatasetFormat fmt : {DatasetFormat::Jsonl, DatasetFormat::Csv, DatasetFormat::Tsv}) {
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Post> posts;
      const auto n = rng.below(12);
      for (std::uint64_t i = 0; i < n; ++i) {
        Post p;
        p.id = "id" + std::to_string(i) + random_unicode(rng, 3);
        p.text = random_unicode(rng, 20);
        p.label = label_from_index(rng.below(3));
        if (rng.below(2)) p.subreddit = "sub" + std::to_string(rng.below(5));
        posts.push_back(p);
      }
      const Dataset ds = labeled(posts);
      const Dataset back = parse_dataset(serialize_dataset(ds, fmt), fmt, DatasetKind::Labeled);
      CHECK(back == ds);
    }
  }
}

TEST_CASE("save and load through files") {
  pseudolabel::testing::TempDir dir;
  const Dataset ds = labeled({labeled_post("x", "héllo wörld", SeverityLabel::Moderate)});
  save_dataset(ds, dir / "d.csv");
  CHECK(load_dataset(dir / "d.csv", DatasetKind::Labeled) == ds);
  CHECK_THROWS_AS(load_dataset(dir / "missing.jsonl", DatasetKind::Labeled), DataError);
}

TEST_CASE("dataset digest depends on content only") {
  const Dataset a = labeled({labeled_post("1", "x", SeverityLabel::Low)});
  const Dataset b = labeled({labeled_post("1", "x", SeverityLabel::Low)});
  const Dataset c = labeled({labeled_post("1", "x", SeverityLabel::Severe)});
  CHECK(dataset_digest(a) == dataset_digest(b));
  CHECK(dataset_digest(a) != dataset_digest(c));
  CHECK(dataset_digest(a).size() == 16);
}
