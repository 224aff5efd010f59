#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecsp/relation.hpp"

namespace ecsp {

using json = nlohmann::json;

class InvariantViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One benchmark triplet: sentence, its context, optional gold rewrite.
struct SourceRecord {
  std::string id;
  std::string sentence;
  std::vector<std::string> context;
  std::optional<std::string> gold;
  std::map<std::string, std::string> meta;

  /// Throws InvariantViolation on empty sentence or empty context entries.
  void validate() const;

  friend bool operator==(const SourceRecord&, const SourceRecord&) = default;
};

enum class OriginKind { Sentence, Context };

struct Origin {
  OriginKind kind = OriginKind::Sentence;
  std::size_t sentence_index = 0;  // meaningful for Context only

  static Origin sentence() { return {OriginKind::Sentence, 0}; }
  static Origin context(std::size_t index) { return {OriginKind::Context, index}; }

  friend bool operator==(const Origin&, const Origin&) = default;
};

/// Byte offsets [start, end) into the origin text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

/// Elementary discourse unit. `aligned` is true exactly when a span is known.
class Edu {
 public:
  Edu(std::string text, std::size_t ordinal, Origin origin, std::optional<Span> span = std::nullopt);

  const std::string& text() const noexcept { return text_; }
  std::size_t ordinal() const noexcept { return ordinal_; }
  const Origin& origin() const noexcept { return origin_; }
  const std::optional<Span>& span() const noexcept { return span_; }
  bool aligned() const noexcept { return span_.has_value(); }

  /// Span bounds check against the text the EDU was segmented from.
  void check_bounds(std::size_t origin_length) const;

  friend bool operator==(const Edu&, const Edu&) = default;

 private:
  std::string text_;
  std::size_t ordinal_;
  Origin origin_;
  std::optional<Span> span_;
};

struct DiscoursePair {
  DiscoursePair(Edu dominant, RelationLabel relation, Edu subordinate);

  Edu dominant;
  RelationLabel relation;
  Edu subordinate;
};

struct RelevantEdu {
  Edu edu;
  std::optional<RelationLabel> relation;
  friend bool operator==(const RelevantEdu&, const RelevantEdu&) = default;
};

struct AmbiguousEdu {
  Edu edu;
  std::vector<RelevantEdu> relevant;
  friend bool operator==(const AmbiguousEdu&, const AmbiguousEdu&) = default;
};

/// Output of content selection. Construction checks membership and order:
/// every ambiguous EDU belongs to the sentence EDUs (ascending ordinal),
/// every relevant EDU to the context EDUs, and, when `gain_filtered`, every
/// labeled relevant EDU carries a gain relation.
class ContentSelection {
 public:
  ContentSelection() = default;
  ContentSelection(std::vector<Edu> edus_sentence, std::vector<Edu> edus_context,
                   std::vector<AmbiguousEdu> ambiguous, int calls_used, bool gain_filtered = true);

  const std::vector<Edu>& edus_sentence() const noexcept { return edus_sentence_; }
  const std::vector<Edu>& edus_context() const noexcept { return edus_context_; }
  const std::vector<AmbiguousEdu>& ambiguous() const noexcept { return ambiguous_; }
  int calls_used() const noexcept { return calls_used_; }
  bool gain_filtered() const noexcept { return gain_filtered_; }

  /// (dominant = relevant context EDU, relation, subordinate = ambiguous EDU)
  /// for every labeled relevant entry.
  std::vector<DiscoursePair> discourse_pairs() const;

  friend bool operator==(const ContentSelection&, const ContentSelection&) = default;

 private:
  std::vector<Edu> edus_sentence_;
  std::vector<Edu> edus_context_;
  std::vector<AmbiguousEdu> ambiguous_;
  int calls_used_ = 0;
  bool gain_filtered_ = true;
};

enum class Status { Decontextualised, UnchangedNoAmbiguity, Infeasible, Error };

std::string status_name(Status s);
Status status_from_name(const std::string& name);

struct Provenance {
  std::string backend_id;
  std::vector<std::string> prompt_digests;
  int backend_calls = 0;
  int cache_hits = 0;
  std::int64_t wall_time_ms = 0;
  bool degraded_segmentation = false;
  int repairs = 0;
};

struct DecontextResult {
  std::string record_id;
  std::string rewritten;
  Status status = Status::Error;
  std::optional<ContentSelection> selection;
  Provenance provenance;
  std::optional<std::string> error;
  std::vector<std::string> warnings;

  /// Status invariants against the original sentence; throws InvariantViolation.
  void check_invariants(const std::string& original_sentence) const;
};

/// Whitespace/quote-insensitive equality used for status classification.
bool same_text(const std::string& a, const std::string& b);

// JSON (results JSONL, resume, python bindings). wall_time_ms is written only
// when include_timing is set so that result files stay reproducible.
json to_json(const Edu& edu);
Edu edu_from_json(const json& j);
json to_json(const RelationLabel& label);
RelationLabel relation_from_json(const json& j);
json to_json(const ContentSelection& sel);
ContentSelection selection_from_json(const json& j);
json to_json(const DecontextResult& result, bool include_timing = false);
DecontextResult result_from_json(const json& j);
json to_json(const SourceRecord& record);

}  // namespace ecsp
