#include <doctest.h>

#include <cmath>
#include <random>

#include "ecsp/dataset.hpp"
#include "ecsp/metrics.hpp"
#include "oracles.hpp"

using namespace ecsp;

TEST_CASE("hand-derived metric values") {
  CHECK(rouge_l("the cat sat on mat", "the cat on the mat") == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(meteor("the cat", "the cat") == doctest::Approx(0.9375).epsilon(1e-12));
  CHECK(meteor("cats sleep", "cat sleeps") == doctest::Approx(0.9375).epsilon(1e-12));
  CHECK(sari("he went home", "john went home", {"john went home"}) == doctest::Approx(1.0));
  CHECK(bleu("the the the the", {"the cat"}) == doctest::Approx(std::pow(96.0, -0.25)).epsilon(1e-12));
  CHECK(chrf("abcd", "abce") == doctest::Approx(23.0 / 48.0).epsilon(1e-12));
}

TEST_CASE("identity and disjoint values") {
  const std::string s = "The Statue of Liberty was dedicated in 1886.";
  CHECK(bleu(s, {s}, 4, false) == 1.0);
  CHECK(chrf(s, s) == 1.0);
  CHECK(rouge_l(s, s) == 1.0);
  CHECK(rouge_l("alpha beta", "gamma delta") == 0.0);
  CHECK(bleu("alpha beta", {"gamma delta"}, 4, false) == 0.0);
  CHECK(chrf("abc", "xyz") == 0.0);
  CHECK(meteor("alpha beta", "gamma delta") == 0.0);
  CHECK(sari("alpha beta", "gamma delta", {"epsilon zeta"}) == doctest::Approx(oracle::sari("alpha beta", "gamma delta", {"epsilon zeta"})));
}

TEST_CASE("empty inputs raise") {
  CHECK_THROWS_AS(sari("", "x", {"y"}), EmptyInput);
  CHECK_THROWS_AS(sari("x", "x", {}), EmptyInput);
  CHECK_THROWS_AS(chrf("x", ""), EmptyInput);
  CHECK_THROWS_AS(bleu("x", {}), EmptyInput);
  CHECK_THROWS_AS(rouge_l("x", ""), EmptyInput);
  CHECK_THROWS_AS(meteor("x", " "), EmptyInput);
}

TEST_CASE("metrics agree with brute-force oracles on curated cases") {
  for (const auto& c : oracle::curated()) {
    INFO(c.candidate << " | " << c.reference);
    CHECK(std::abs(sari(c.source, c.candidate, {c.reference}) - oracle::sari(c.source, c.candidate, {c.reference})) < 1e-9);
    CHECK(std::abs(chrf(c.candidate, c.reference) - oracle::chrf(c.candidate, c.reference)) < 1e-9);
    CHECK(std::abs(bleu(c.candidate, {c.reference}) - oracle::bleu(c.candidate, {c.reference})) < 1e-9);
    CHECK(std::abs(bleu(c.candidate, {c.reference}, 4, false) - oracle::bleu(c.candidate, {c.reference}, false)) < 1e-9);
    CHECK(std::abs(rouge_l(c.candidate, c.reference) - oracle::rouge_l(c.candidate, c.reference)) < 1e-9);
    CHECK(std::abs(meteor(c.candidate, c.reference) - oracle::meteor(c.candidate, c.reference)) < 1e-9);
  }
}

TEST_CASE("multi-reference SARI and BLEU agree with oracles") {
  const std::vector<std::string> refs{"john went home early", "john walked home"};
  for (const char* cand : {"john went home", "he went home", "john walked home early", "home"}) {
    CHECK(std::abs(sari("he went home", cand, refs) - oracle::sari("he went home", cand, refs)) < 1e-9);
    CHECK(std::abs(bleu(cand, refs) - oracle::bleu(cand, refs)) < 1e-9);
  }
}

TEST_CASE("meteor alignment reports chunks and exhaustiveness") {
  const auto a = meteor_alignment(tokenize("a b c d"), tokenize("c d a b"));
  CHECK(a.matches == 4);
  CHECK(a.chunks == 2);
  CHECK(a.exhaustive);
}

TEST_CASE("corpus BLEU aggregates counts") {
  const std::vector<std::string> c{"the cat sat", "a dog ran fast today"};
  const std::vector<std::vector<std::string>> r{{"the cat sat"}, {"a dog ran fast today"}};
  CHECK(corpus_bleu(c, r) == doctest::Approx(1.0));
  CHECK_THROWS(corpus_bleu({"x"}, {}));
}

TEST_CASE("embed_score") {
  HashEmbeddingProvider p;
  const auto same = embed_score("the copper statue", "the copper statue", p);
  CHECK(same.precision == doctest::Approx(1.0));
  CHECK(same.f1 == doctest::Approx(1.0));

  const std::vector<std::vector<double>> a{{1, 0}, {0, 1}, {1, 1}};
  const std::vector<std::vector<double>> b{{1, 0}, {1, -1}};
  const auto s = embed_score(a, b);
  CHECK(s.precision == doctest::Approx(oracle::greedy(a, b)).epsilon(1e-12));
  CHECK(s.recall == doctest::Approx(oracle::greedy(b, a)).epsilon(1e-12));

  const std::vector<std::vector<double>> x{{1, 0}}, y{{0, 1}};
  CHECK(embed_score(x, y).f1 == 0.0);
  CHECK_THROWS_AS(embed_score({{1, 0}}, {{1, 0, 0}}), DimensionMismatch);
}

namespace {
struct BadProvider : EmbeddingProvider {
  std::vector<std::vector<double>> embed(const std::vector<std::string>&) override { return {}; }
  std::string id() const override { return "bad"; }
};
}  // namespace

TEST_CASE("embed_score rejects providers returning the wrong count") {
  BadProvider bad;
  CHECK_THROWS_AS(embed_score("a b", "a b", bad), ProviderError);
}

TEST_CASE("metric range property on random pairs") {
  std::mt19937 rng(11);
  const std::vector<std::string> vocab{"the", "cat", "sat", "on", "mat", "dog", "ran", "running", "runs", ",", "."};
  auto gen = [&] {
    std::string s;
    const int n = 1 + static_cast<int>(rng() % 7);
    for (int i = 0; i < n; ++i) s += vocab[rng() % vocab.size()] + " ";
    return s;
  };
  for (int i = 0; i < 500; ++i) {
    const std::string a = gen(), b = gen(), src = gen();
    for (double v : {sari(src, a, {b}), chrf(a, b), bleu(a, {b}), rouge_l(a, b), meteor(a, b)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("evaluate_corpus") {
  std::vector<SourceRecord> recs{{"1", "She ran.", {"Mary is a runner."}, "Mary ran.", {}},
                                 {"2", "It fell.", {"The vase was old."}, std::nullopt, {}}};
  std::vector<DecontextResult> res(2);
  res[0].record_id = "1";
  res[0].rewritten = "Mary ran.";
  res[0].status = Status::Decontextualised;
  res[1].record_id = "2";
  res[1].rewritten = "It fell.";
  res[1].status = Status::UnchangedNoAmbiguity;

  const auto report = evaluate_corpus(res, recs, {});
  CHECK(report.n_samples == 1);
  CHECK(report.skipped == 1);
  CHECK(report.columns == std::vector<std::string>{"SARI", "ChrF", "RougeL", "BLEU", "METEOR"});
  CHECK(report.aggregate.at("ChrF") == 1.0);
  CHECK(report.aggregate.at("BLEU") == 1.0);
  CHECK(report.aggregate.at("RougeL") == 1.0);
  CHECK(report.aggregate.at("METEOR") == doctest::Approx(oracle::meteor("Mary ran.", "Mary ran.")));
  const std::string md = report.to_markdown("mock");
  CHECK(md.find("| SARI | BERTScore | ChrF | RougeL | BLEU | METEOR |") != std::string::npos);
  CHECK(md.find("1.0000") != std::string::npos);
  const std::string csv = report.to_csv();
  CHECK(csv.rfind("record_id,") == 0);
  CHECK(csv.find("\nMEAN,") != std::string::npos);

  MetricConfig with_embed;
  with_embed.provider = std::make_shared<HashEmbeddingProvider>();
  CHECK(evaluate_corpus(res, recs, with_embed).aggregate.at("BERTScore") == doctest::Approx(1.0));

  MetricConfig subset;
  subset.metrics = {"BLEU"};
  CHECK(evaluate_corpus(res, recs, subset).columns == std::vector<std::string>{"BLEU"});

  CHECK_THROWS_AS(evaluate_corpus({}, recs, {}), NoReferences);
  CHECK_THROWS_AS(evaluate_corpus({res[1]}, recs, {}), NoReferences);
}
