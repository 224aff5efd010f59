#include <doctest.h>

#include <random>

#include "ecsp/metrics.hpp"
#include "ecsp/text.hpp"

using namespace ecsp;

TEST_CASE("normalize_text collapses whitespace and maps dashes") {
  CHECK(normalize_text("  a  b ") == "a b");
  CHECK(normalize_text("a—b") == "a--b");
  CHECK(normalize_text("a–b") == "a-b");
  CHECK(normalize_text("“quoted” ‘x’") == "\"quoted\" 'x'");
  CHECK(normalize_text("") == "");
  CHECK(normalize_text("a  b\n\tc") == "a b c");
}

TEST_CASE("normalize_text is idempotent") {
  for (const char* s : {"  a — b ", "x“y”", "plain", "\xff\xfe bad bytes"}) {
    const auto once = normalize_text(s);
    CHECK(normalize_text(once) == once);
  }
}

TEST_CASE("normalize_with_offsets maps back to source bytes") {
  const std::string raw = "  a—b";
  const auto n = normalize_with_offsets(raw);
  REQUIRE(n.text == "a--b");
  REQUIRE(n.source_begin.size() == n.text.size());
  CHECK(raw.substr(n.source_begin[0], n.source_end[0] - n.source_begin[0]) == "a");
  CHECK(raw.substr(n.source_begin[1], n.source_end[1] - n.source_begin[1]) == "—");
}

TEST_CASE("tokenize examples") {
  CHECK(tokenize("The cat, sat.") == std::vector<std::string>{"the", "cat", ",", "sat", "."});
  CHECK(tokenize("").empty());
  CHECK(tokenize("Gaudí's death") == std::vector<std::string>{"gaudí", "'s", "death"});
  CHECK(tokenize("didn't") == std::vector<std::string>{"did", "n't"});
  CHECK(tokenize("(BAU),") == std::vector<std::string>{"(", "bau", ")", ","});
}

TEST_CASE("tokenize is idempotent through the canonical join") {
  std::mt19937 rng(7);
  const std::vector<std::string> parts{"The", "cat's", "(x)", "don't", ",", "Été", "--", "'s", "a.b.",
                                       "\"q\"", "Why?", "n't", "2010-11"};
  for (int i = 0; i < 500; ++i) {
    std::string text;
    const int len = 1 + static_cast<int>(rng() % 8);
    for (int k = 0; k < len; ++k) text += parts[rng() % parts.size()] + (rng() % 3 ? " " : "");
    const auto t = tokenize(text);
    std::string joined;
    for (const auto& tok : t) joined += (joined.empty() ? "" : " ") + tok;
    CHECK_MESSAGE(tokenize(joined) == t, text);
    for (const auto& tok : t) CHECK(!tok.empty());
  }
}

TEST_CASE("longest_common_substring") {
  const auto c = longest_common_substring("xxabcdyy", "zabcdz");
  CHECK(c.length == 4);
  CHECK(c.pos_a == 2);
  CHECK(c.pos_b == 1);
  CHECK(longest_common_substring("", "abc").length == 0);
}
