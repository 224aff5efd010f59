#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecsp/backend.hpp"
#include "ecsp/prompting.hpp"
#include "ecsp/types.hpp"

namespace ecsp {

/// Deterministic clause-level segmenter used offline and as the fallback
/// when a model's segmentation cannot be parsed.
///
/// Boundaries are placed before
///   - and/but/or after a comma, before a subject pronoun, or (without a
///     comma) before a lowercase verb-like word once the current unit has
///     at least eight tokens,
///   - who/which/whom/whose after a comma, and who/which/that followed by a
///     verb-like word,
///   - before/after/when/because/although/though/while/whereas/unless/
///     until/since, except inside a relative clause that has not yet
///     reached a comma,
///   - a standalone dash ("--", em or en dash).
/// No boundary is placed inside parentheses, brackets or double quotes.
/// Units shorter than two tokens are merged into their left neighbour.
std::vector<std::string> rule_segment(std::string_view text);

/// Same boundaries as rule_segment, as byte spans into `text`.
std::vector<Span> rule_segment_spans(std::string_view text);

/// Span of `edu_text` in `source_text` at or after `search_from`: exact
/// substring, then match after normalize_text (case-sensitive, then
/// case-insensitive), then the longest common substring when it covers at
/// least 80% of the EDU. Absent when every stage fails.
std::optional<Span> align(std::string_view edu_text, std::string_view source_text, std::size_t search_from = 0);

struct SegmentationOutput {
  std::vector<Edu> edus;
  double coverage_ratio = 0.0;
  bool degraded = false;
};

struct SegmentConfig {
  GenerationSettings generation;
  std::vector<DemoInstance> demos;
  int max_repairs = 1;
};

struct SegmentUnit {
  Origin origin;
  std::string text;
};

/// Segments several texts with one SEGMENT call (texts joined by a space)
/// and attributes the returned EDUs back to their unit by alignment. A
/// response that stays unparseable after the repair round, or a unit that
/// receives no EDU, falls back to rule_segment and is flagged degraded.
std::vector<SegmentationOutput> segment_units(const std::vector<SegmentUnit>& units, CompletionBackend& backend,
                                              const SegmentConfig& config, CallTrace& trace);

SegmentationOutput segment(const std::string& text, Origin origin, CompletionBackend& backend,
                           const SegmentConfig& config, CallTrace& trace);

/// Fraction of non-whitespace code points of `source` inside aligned spans.
double coverage_ratio(const std::vector<Edu>& edus, std::string_view source);

}  // namespace ecsp
