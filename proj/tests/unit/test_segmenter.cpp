#include <doctest.h>

#include <random>

#include "ecsp/backend.hpp"
#include "ecsp/mock_backend.hpp"
#include "ecsp/segmenter.hpp"
#include "ecsp/text.hpp"
#include "fixtures.hpp"

using namespace ecsp;

TEST_CASE("rule_segment reproduces the segmentation fixture") {
  for (const auto& row : fixtures::jsonl("segmentation.jsonl")) {
    const auto text = row["text"].get<std::string>();
    CHECK_MESSAGE(rule_segment(text) == row["expected_edus"].get<std::vector<std::string>>(), text);
  }
}

TEST_CASE("rule_segment never splits inside parentheses") {
  CHECK(rule_segment("a (b, and c) d and he ran") == std::vector<std::string>{"a (b, and c) d", "and he ran"});
  CHECK(rule_segment("Paris is the capital of France.") == std::vector<std::string>{"Paris is the capital of France."});
  CHECK(rule_segment("Hi.") == std::vector<std::string>{"Hi."});
  CHECK_THROWS(rule_segment("   "));
}

TEST_CASE("rule_segment span invariants on random texts") {
  std::mt19937 rng(3);
  const std::vector<std::string> words{"the", "cat", "and", "but", "he", "she", "who", "which", "that", "was",
                                       "walked", "runs", "before", "after", "because", "--", "(", ")", "\"",
                                       "home,", "city.", "is", "a", "big", "dog", "when", "they", "or"};
  for (int i = 0; i < 1000; ++i) {
    std::string text;
    const int n = 1 + static_cast<int>(rng() % 25);
    for (int k = 0; k < n; ++k) text += (k ? " " : "") + words[rng() % words.size()];
    const auto spans = rule_segment_spans(text);
    const auto edus = rule_segment(text);
    REQUIRE(!spans.empty());
    REQUIRE(spans.size() == edus.size());
    std::string joined;
    for (std::size_t k = 0; k < spans.size(); ++k) {
      CHECK(spans[k].start < spans[k].end);
      CHECK(spans[k].end <= text.size());
      if (k) CHECK(spans[k - 1].end <= spans[k].start);
      CHECK(text.substr(spans[k].start, spans[k].end - spans[k].start) == edus[k]);
      if (split_whitespace(text).size() >= 2) CHECK(split_whitespace(edus[k]).size() >= 2);
      joined += (k ? " " : "") + edus[k];
    }
    CHECK(normalize_text(joined) == normalize_text(text));
  }
}

TEST_CASE("align") {
  const std::string src = "He said “stop” and left.";
  CHECK(align("and left.", src) == Span{src.find("and"), src.size()});
  const auto quoted = align("He said \"stop\"", src);
  REQUIRE(quoted);
  CHECK(src.substr(quoted->start, quoted->end - quoted->start) == "He said “stop”");
  CHECK(align("he said", src).has_value());
  CHECK_FALSE(align("completely fabricated words", src).has_value());
  CHECK(align("and left", src, src.size()) == std::nullopt);
}

TEST_CASE("segment with the mock backend aligns every EDU") {
  MockBackend mock;
  CallTrace trace;
  for (const auto& row : fixtures::jsonl("segmentation.jsonl")) {
    const auto text = row["text"].get<std::string>();
    const auto out = segment(text, Origin::sentence(), mock, {}, trace);
    CHECK_FALSE(out.degraded);
    std::string joined;
    std::size_t prev_end = 0;
    for (const auto& e : out.edus) {
      REQUIRE(e.aligned());
      CHECK(e.span()->start >= prev_end);
      prev_end = e.span()->end;
      joined += (joined.empty() ? "" : " ") + text.substr(e.span()->start, e.span()->end - e.span()->start);
    }
    CHECK(normalize_text(joined) == normalize_text(text));
    CHECK(out.coverage_ratio == doctest::Approx(1.0));
  }
  CHECK(trace.calls == 10);
}

TEST_CASE("segment keeps unaligned EDUs and falls back to rules on ParseError") {
  FunctionBackend invented([](const CompletionRequest&) {
    return std::string(R"(["She ran home,", "completely unrelated words entirely"])");
  }, "invented");
  CallTrace trace;
  const std::string text = "She ran home, and he stayed behind.";
  const auto out = segment(text, Origin::sentence(), invented, {}, trace);
  CHECK_FALSE(out.degraded);
  REQUIRE(out.edus.size() == 2);
  CHECK(out.edus[0].aligned());
  CHECK_FALSE(out.edus[1].aligned());
  CHECK(out.coverage_ratio < 1.0);

  // A single prose line matches no list form.
  FunctionBackend prose([](const CompletionRequest&) { return std::string("I am unable to help with that."); }, "prose");
  CallTrace t1;
  CHECK(segment(text, Origin::sentence(), prose, {}, t1).degraded);
  CHECK(t1.calls == 2);

  FunctionBackend empty([](const CompletionRequest&) { return std::string(""); }, "empty");
  CallTrace t2;
  const auto out2 = segment(text, Origin::sentence(), empty, {}, t2);
  CHECK(out2.degraded);
  CHECK(out2.edus.size() == rule_segment(text).size());
  CHECK(t2.calls == 2);
  CHECK(t2.repairs == 1);
}

TEST_CASE("segment_units attributes EDUs to their source unit") {
  MockBackend mock;
  CallTrace trace;
  const std::vector<SegmentUnit> units{{Origin::context(0), "The museum opened in 1902."},
                                       {Origin::context(1), "It houses maps, and it hosts talks."}};
  const auto outs = segment_units(units, mock, {}, trace);
  REQUIRE(outs.size() == 2);
  CHECK(trace.calls == 1);
  CHECK(outs[0].edus.size() == 1);
  CHECK(outs[1].edus.size() == 2);
  for (const auto& e : outs[1].edus) CHECK(e.origin() == Origin::context(1));
}
