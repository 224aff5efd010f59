#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "ecsp/dataset.hpp"
#include "fixtures.hpp"

using namespace ecsp;

TEST_CASE("parse_dataset happy path and partial failure") {
  const auto ok = parse_dataset(
      "{\"id\": \"a\", \"sentence\": \"x y\", \"context\": [\"c\"]}\n"
      "{\"id\": 2, \"sentence\": \"z\", \"context\": \"One. Two.\", \"decontextualised\": \"Z\"}\n"
      "{\"id\": \"c\", \"sentence\": \"w\"}\n");
  CHECK(ok.errors.empty());
  REQUIRE(ok.records.size() == 3);
  CHECK(ok.records[1].id == "2");
  CHECK(ok.records[1].context == std::vector<std::string>{"One.", "Two."});
  CHECK(ok.records[1].gold == std::optional<std::string>("Z"));
  CHECK(ok.records[2].context.empty());

  const auto bad = parse_dataset(
      "{\"id\": \"a\", \"sentence\": \"x\"}\n"
      "{\"id\": \"b\", \"context\": []}\n"
      "not json\n"
      "{\"id\": \"a\", \"sentence\": \"dup\"}\n");
  CHECK(bad.records.size() == 1);
  REQUIRE(bad.errors.size() == 3);
  CHECK(bad.errors[0].line == 2);
  CHECK(bad.errors[0].reason.find("sentence") != std::string::npos);
  CHECK(bad.errors[1].line == 3);
  CHECK(bad.errors[2].line == 4);
}

TEST_CASE("field map") {
  FieldMap f;
  f.id_field = "uid";
  f.sentence_field = "target";
  f.context_field = "paragraph";
  f.gold_field = "gold";
  const auto r = parse_dataset("{\"uid\": 1, \"target\": \"s\", \"paragraph\": [\"p\"], \"gold\": \"g\"}", f);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].sentence == "s");
  CHECK(r.records[0].gold == std::optional<std::string>("g"));
}

TEST_CASE("load_dataset") {
  CHECK_THROWS_AS(load_dataset("/nonexistent/file.jsonl"), FileNotFound);
  const auto r = load_dataset(fixtures::dir() / "records.jsonl");
  CHECK(r.errors.empty());
  CHECK(r.records.size() == 10);
  // The last fixture record gives its context as one paragraph string.
  CHECK(r.records.back().context ==
        std::vector<std::string>{"Work on the Empire State Building began in 1930.",
                                 "The project was financed by John J. Raskob.",
                                 "Dr. Al Smith led the company that built it."});
}

TEST_CASE("split_sentences") {
  CHECK(split_sentences("Mr. Smith left. He came back!") == std::vector<std::string>{"Mr. Smith left.", "He came back!"});
  CHECK(split_sentences("It was 3.5 km. \"Really?\" she asked.") ==
        std::vector<std::string>{"It was 3.5 km.", "\"Really?\" she asked."});
  CHECK(split_sentences("Built by J. R. Smith in 1990.") == std::vector<std::string>{"Built by J. R. Smith in 1990."});
  CHECK(split_sentences("e.g. this one. Next.") == std::vector<std::string>{"e.g. this one.", "Next."});
}

TEST_CASE("save/load round trip on generated corpora") {
  std::mt19937 rng(5);
  const std::vector<std::string> words{"alpha", "Beta", "\"q\"", "é", "x\ty", "{b}", "a,b", "end."};
  for (int round = 0; round < 50; ++round) {
    std::vector<SourceRecord> recs;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      SourceRecord r;
      r.id = "r" + std::to_string(i);
      r.sentence = words[rng() % words.size()] + " " + words[rng() % words.size()];
      const int c = static_cast<int>(rng() % 3);
      for (int k = 0; k < c; ++k) r.context.push_back(words[rng() % words.size()]);
      if (rng() % 2) r.gold = words[rng() % words.size()];
      if (rng() % 3 == 0) r.meta["source"] = "gen";
      recs.push_back(r);
    }
    const auto back = parse_dataset(dump_dataset(recs));
    CHECK(back.errors.empty());
    CHECK(back.records == recs);
  }
  const auto tmp = std::filesystem::temp_directory_path() / "ecsp_roundtrip.jsonl";
  const auto recs = load_dataset(fixtures::dir() / "records.jsonl").records;
  save_dataset(tmp, recs);
  CHECK(load_dataset(tmp).records == recs);
  std::filesystem::remove(tmp);
}

TEST_CASE("stats") {
  const SourceRecord one{"1", "a b c", {}, std::nullopt, {}};
  const auto s = compute_stats({one});
  CHECK(s.n_samples == 1);
  CHECK(s.avg_context_words == 0.0);
  CHECK(s.avg_sentence_words == 3.0);
  CHECK_THROWS_AS(compute_stats({}), EmptyDataset);
  CHECK(word_count("The cat, sat.") == 3);

  auto recs = load_dataset(fixtures::dir() / "records.jsonl").records;
  const auto a = compute_stats(recs);
  std::reverse(recs.begin(), recs.end());
  const auto b = compute_stats(recs);
  CHECK(a.avg_context_words == b.avg_context_words);
  CHECK(a.avg_sentence_words == b.avg_sentence_words);
}

TEST_CASE("added_words") {
  CHECK(added_words("she ran", "mary ran home") == 2);
  CHECK(added_words("She ran.", "She ran.") == 0);
  CHECK(added_words("the the", "the the the") == 1);
  for (const auto& r : load_dataset(fixtures::dir() / "records.jsonl").records) {
    CHECK(added_words(r.sentence, r.sentence) == 0);
  }
}
