#include "ecsp/segmenter.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

#include "ecsp/log.hpp"
#include "ecsp/text.hpp"

namespace ecsp {

namespace {

struct Token {
  std::size_t begin;
  std::size_t end;
  std::string raw;
  std::string word;  // lowercased, surrounding punctuation stripped
};

bool is_strip_char(unsigned char c) { return std::ispunct(c) != 0; }

std::string strip_word(const std::string& raw) {
  std::size_t b = 0;
  std::size_t e = raw.size();
  while (b < e && is_strip_char(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && is_strip_char(static_cast<unsigned char>(raw[e - 1]))) --e;
  // Typographic quotes (3-byte sequences starting 0xE2 0x80).
  while (e - b >= 3 && static_cast<unsigned char>(raw[b]) == 0xE2 && static_cast<unsigned char>(raw[b + 1]) == 0x80) {
    b += 3;
  }
  while (e - b >= 3 && static_cast<unsigned char>(raw[e - 3]) == 0xE2 &&
         static_cast<unsigned char>(raw[e - 2]) == 0x80) {
    e -= 3;
  }
  return utf8_lower(std::string_view(raw).substr(b, e - b));
}

std::vector<Token> tokenize_with_offsets(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp;
    std::size_t len = utf8_decode(text, i, cp);
    if (is_unicode_space(cp)) {
      i += len;
      continue;
    }
    const std::size_t start = i;
    while (i < text.size()) {
      len = utf8_decode(text, i, cp);
      if (is_unicode_space(cp)) break;
      i += len;
    }
    Token t{start, i, std::string(text.substr(start, i - start)), {}};
    t.word = strip_word(t.raw);
    tokens.push_back(std::move(t));
  }
  return tokens;
}

const std::set<std::string>& conjunctions() {
  static const std::set<std::string> s{"and", "but", "or"};
  return s;
}

const std::set<std::string>& subject_pronouns() {
  static const std::set<std::string> s{"he", "she", "it", "they", "we", "i", "you"};
  return s;
}

const std::set<std::string>& subordinators() {
  static const std::set<std::string> s{"before", "after", "when",   "because", "although", "though",
                                       "while",  "whereas", "unless", "until",   "since"};
  return s;
}

// Words that start noun phrases or adjuncts rather than a new predicate.
const std::set<std::string>& non_predicate_starters() {
  static const std::set<std::string> s{
      "the",   "a",    "an",   "his",  "her",     "its",   "their", "our",  "my",   "your", "this",
      "that",  "these", "those", "some", "many",  "all",   "other", "another", "each", "every", "several",
      "in",    "on",   "at",   "of",   "to",      "for",   "with",  "by",   "from", "as",   "then",
      "also",  "not",  "more", "most", "less",    "other", "both",  "either", "no", "into", "over"};
  return s;
}

const std::set<std::string>& auxiliaries() {
  static const std::set<std::string> s{"is",    "are",    "was",  "were",  "be",  "been",  "has",
                                       "have",  "had",    "do",   "does",  "did", "can",   "could",
                                       "will",  "would",  "shall", "should", "may", "might", "must"};
  return s;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool verb_like(const std::string& w, bool allow_s_suffix) {
  if (auxiliaries().count(w)) return true;
  if (w.size() >= 4 && ends_with(w, "ed")) return true;
  if (allow_s_suffix && w.size() >= 4 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") &&
      !ends_with(w, "is")) {
    return true;
  }
  return false;
}

bool is_dash_token(const std::string& raw) {
  return raw == "--" || raw == "---" || raw == "\xE2\x80\x94" || raw == "\xE2\x80\x93" || raw == "-";
}

bool is_lower_alpha_start(const std::string& raw) {
  return !raw.empty() && std::islower(static_cast<unsigned char>(raw[0]));
}

bool ends_clause_punct(const std::string& raw) {
  if (raw.empty()) return false;
  const char c = raw.back();
  return c == ',' || c == ';' || c == ':';
}

struct Nesting {
  int brackets = 0;
  bool in_quote = false;

  void consume(const std::string& raw) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const unsigned char c = static_cast<unsigned char>(raw[i]);
      if (c == '(' || c == '[') ++brackets;
      if ((c == ')' || c == ']') && brackets > 0) --brackets;
      if (c == '"') in_quote = !in_quote;
      if (c == 0xE2 && i + 2 < raw.size() && static_cast<unsigned char>(raw[i + 1]) == 0x80) {
        const unsigned char d = static_cast<unsigned char>(raw[i + 2]);
        if (d == 0x9C) in_quote = true;   // left double quote
        if (d == 0x9D) in_quote = false;  // right double quote
      }
    }
  }
  bool open() const { return brackets > 0 || in_quote; }
};

// Token indices at which a new unit starts (always includes 0).
std::vector<std::size_t> boundaries(const std::vector<Token>& tokens) {
  std::vector<std::size_t> starts{0};
  const std::size_t n = tokens.size();
  Nesting nest;
  std::size_t piece_start = 0;
  bool relative_piece = false;
  bool comma_in_piece = false;

  for (std::size_t i = 0; i < n; ++i) {
    bool cut = false;
    bool relative = false;
    if (i > 0 && !nest.open()) {
      const Token& tok = tokens[i];
      const Token& prev = tokens[i - 1];
      const std::string& w = tok.word;
      const bool prev_comma = ends_clause_punct(prev.raw);
      const std::size_t piece_len = i - piece_start;
      const std::size_t remaining = n - i;
      const Token* next = i + 1 < n ? &tokens[i + 1] : nullptr;

      if (is_dash_token(tok.raw) && remaining >= 2) {
        cut = true;
      } else if (conjunctions().count(w) && next && remaining >= 2) {
        if (prev_comma) {
          cut = true;
        } else if (subject_pronouns().count(next->word)) {
          cut = true;
        } else if (is_lower_alpha_start(next->raw) && !non_predicate_starters().count(next->word) && piece_len >= 8 &&
                   remaining >= 3) {
          cut = true;
        }
      } else if (next && (w == "who" || w == "which" || w == "whom" || w == "whose") && prev_comma) {
        cut = true;
        relative = true;
      } else if (next && (w == "who" || w == "which" || w == "that") &&
                 verb_like(next->word, w != "that")) {
        cut = true;
        relative = true;
      } else if (subordinators().count(w) && !(relative_piece && !comma_in_piece) && piece_len >= 2 &&
                 remaining >= 2) {
        cut = true;
      }
    }
    if (cut) {
      starts.push_back(i);
      piece_start = i;
      relative_piece = relative;
      comma_in_piece = false;
    }
    nest.consume(tokens[i].raw);
    if (i > piece_start && ends_clause_punct(tokens[i].raw)) comma_in_piece = true;
  }

  // Merge units shorter than two tokens: into the left neighbour, or the
  // right one for the first unit.
  bool changed = true;
  while (changed && starts.size() > 1) {
    changed = false;
    for (std::size_t k = 0; k < starts.size(); ++k) {
      const std::size_t end = k + 1 < starts.size() ? starts[k + 1] : n;
      if (end - starts[k] >= 2) continue;
      if (k == 0) {
        starts.erase(starts.begin() + 1);
      } else {
        starts.erase(starts.begin() + static_cast<std::ptrdiff_t>(k));
      }
      changed = true;
      break;
    }
  }
  return starts;
}

bool is_space_at(std::string_view s, std::size_t pos) {
  char32_t cp;
  utf8_decode(s, pos, cp);
  return is_unicode_space(cp);
}

// Shrinks a span so that it neither starts nor ends on whitespace.
std::optional<Span> tighten(std::string_view source, std::size_t start, std::size_t end) {
  end = std::min(end, source.size());
  while (start < end && is_space_at(source, start)) {
    char32_t cp;
    start += utf8_decode(source, start, cp);
  }
  while (end > start && std::isspace(static_cast<unsigned char>(source[end - 1]))) --end;
  if (start >= end) return std::nullopt;
  return Span{start, end};
}

std::optional<Span> align_normalized(const NormalizedText& src, std::string_view needle, std::size_t from,
                                     bool case_insensitive) {
  if (needle.empty() || src.text.empty()) return std::nullopt;
  std::size_t first = 0;
  while (first < src.text.size() && src.source_begin[first] < from) ++first;
  const std::string hay = case_insensitive ? utf8_lower(src.text) : src.text;
  const std::string ned = case_insensitive ? utf8_lower(needle) : std::string(needle);
  if (hay.size() != src.text.size()) return std::nullopt;
  const auto pos = hay.find(ned, first);
  if (pos == std::string::npos) return std::nullopt;
  return Span{src.source_begin[pos], src.source_end[pos + ned.size() - 1]};
}

std::optional<Span> align_exact(std::string_view edu, std::string_view source, std::size_t from) {
  const std::string needle = trim(edu);
  if (needle.empty() || from >= source.size()) return std::nullopt;
  const auto pos = source.find(needle, from);
  if (pos != std::string_view::npos) return Span{pos, pos + needle.size()};
  const NormalizedText src = normalize_with_offsets(source);
  const std::string ne = normalize_text(needle);
  if (auto s = align_normalized(src, ne, from, false)) return s;
  return align_normalized(src, ne, from, true);
}

std::optional<Span> align_fuzzy(std::string_view edu, std::string_view source, std::size_t from) {
  const std::string ne = utf8_lower(normalize_text(edu));
  if (ne.empty() || from >= source.size()) return std::nullopt;
  const NormalizedText src = normalize_with_offsets(source);
  std::size_t first = 0;
  while (first < src.text.size() && src.source_begin[first] < from) ++first;
  if (first >= src.text.size()) return std::nullopt;
  const std::string lowered = utf8_lower(src.text);
  if (lowered.size() != src.text.size()) return std::nullopt;
  const std::string_view hay = std::string_view(lowered).substr(first);
  const CommonSubstring lcs = longest_common_substring(ne, hay);
  if (lcs.length == 0 || static_cast<double>(lcs.length) < 0.8 * static_cast<double>(ne.size())) return std::nullopt;
  // Extend the common block to the whole EDU extent, clamped to the source.
  const std::size_t b_start = lcs.pos_b >= lcs.pos_a ? lcs.pos_b - lcs.pos_a : 0;
  const std::size_t b_end = std::min(hay.size(), b_start + ne.size());
  const std::size_t n_start = first + b_start;
  const std::size_t n_end = first + b_end;
  if (n_start >= n_end) return std::nullopt;
  std::size_t start = std::max(src.source_begin[n_start], from);
  std::size_t end = src.source_end[n_end - 1];
  return tighten(source, start, end);
}

double covered_fraction(const std::vector<Span>& spans, std::string_view source) {
  std::size_t total = 0;
  std::size_t covered = 0;
  std::size_t i = 0;
  while (i < source.size()) {
    char32_t cp;
    const std::size_t len = utf8_decode(source, i, cp);
    if (!is_unicode_space(cp)) {
      ++total;
      for (const Span& s : spans) {
        if (i >= s.start && i < s.end) {
          ++covered;
          break;
        }
      }
    }
    i += len;
  }
  return total == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(total);
}

SegmentationOutput rule_output(const std::string& text, const Origin& origin) {
  SegmentationOutput out;
  std::size_t ordinal = 0;
  for (const Span& span : rule_segment_spans(text)) {
    out.edus.emplace_back(text.substr(span.start, span.end - span.start), ordinal++, origin, span);
  }
  out.coverage_ratio = coverage_ratio(out.edus, text);
  out.degraded = true;
  return out;
}

}  // namespace

std::vector<Span> rule_segment_spans(std::string_view text) {
  const auto tokens = tokenize_with_offsets(text);
  if (tokens.empty()) throw std::invalid_argument("rule_segment: text is empty");
  const auto starts = boundaries(tokens);
  std::vector<Span> spans;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::size_t last = (k + 1 < starts.size() ? starts[k + 1] : tokens.size()) - 1;
    spans.push_back({tokens[starts[k]].begin, tokens[last].end});
  }
  return spans;
}

std::vector<std::string> rule_segment(std::string_view text) {
  std::vector<std::string> out;
  for (const Span& s : rule_segment_spans(text)) out.emplace_back(text.substr(s.start, s.end - s.start));
  return out;
}

std::optional<Span> align(std::string_view edu_text, std::string_view source_text, std::size_t search_from) {
  if (auto s = align_exact(edu_text, source_text, search_from)) return s;
  return align_fuzzy(edu_text, source_text, search_from);
}

double coverage_ratio(const std::vector<Edu>& edus, std::string_view source) {
  std::vector<Span> spans;
  for (const Edu& e : edus) {
    if (e.span()) spans.push_back(*e.span());
  }
  return covered_fraction(spans, source);
}

std::vector<SegmentationOutput> segment_units(const std::vector<SegmentUnit>& units, CompletionBackend& backend,
                                              const SegmentConfig& config, CallTrace& trace) {
  std::vector<SegmentationOutput> outputs(units.size());
  if (units.empty()) return outputs;
  std::string joined;
  for (const auto& u : units) {
    if (trim(u.text).empty()) throw std::invalid_argument("segment: text is empty");
    if (!joined.empty()) joined += ' ';
    joined += u.text;
  }

  ordered_json inputs = ordered_json::object();
  inputs["Sentence"] = joined;
  const auto request = make_request(PromptKind::Segment, render(PromptKind::Segment, inputs, config.demos),
                                    config.generation);
  std::optional<ParsedEduList> parsed;
  try {
    parsed = complete_and_parse(backend, request, trace, config.max_repairs,
                                [](const std::string& text) { return parse_edu_list(text); });
  } catch (const ParseError&) {
    trace.warnings.push_back("segmentation output unparseable; rule fallback used");
    log_warning("segmentation output unparseable after repair; using rule segmenter");
  }

  if (!parsed) {
    for (std::size_t u = 0; u < units.size(); ++u) outputs[u] = rule_output(units[u].text, units[u].origin);
    return outputs;
  }

  // Sequential attribution: an EDU belongs to the current unit or a later one.
  std::vector<std::vector<std::pair<std::string, std::optional<Span>>>> assigned(units.size());
  std::size_t current = 0;
  std::size_t cursor = 0;
  for (const std::string& item : parsed->items) {
    std::optional<Span> span;
    std::size_t owner = current;
    for (std::size_t u = current; u < units.size() && !span; ++u) {
      span = align_exact(item, units[u].text, u == current ? cursor : 0);
      if (span) owner = u;
    }
    for (std::size_t u = current; u < units.size() && !span; ++u) {
      span = align_fuzzy(item, units[u].text, u == current ? cursor : 0);
      if (span) owner = u;
    }
    if (span) {
      current = owner;
      cursor = span->end;
    } else {
      trace.warnings.push_back("unaligned EDU: " + item);
    }
    assigned[owner].emplace_back(item, span);
  }

  for (std::size_t u = 0; u < units.size(); ++u) {
    if (assigned[u].empty()) {
      trace.warnings.push_back("no EDU returned for a segmented text; rule fallback used");
      outputs[u] = rule_output(units[u].text, units[u].origin);
      continue;
    }
    SegmentationOutput& out = outputs[u];
    std::size_t ordinal = 0;
    for (auto& [text, span] : assigned[u]) {
      out.edus.emplace_back(trim(text), ordinal++, units[u].origin, span);
    }
    out.coverage_ratio = coverage_ratio(out.edus, units[u].text);
    out.degraded = false;
  }
  return outputs;
}

SegmentationOutput segment(const std::string& text, Origin origin, CompletionBackend& backend,
                           const SegmentConfig& config, CallTrace& trace) {
  return segment_units({SegmentUnit{origin, text}}, backend, config, trace).front();
}

}  // namespace ecsp
