#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecsp/backend.hpp"
#include "ecsp/relation.hpp"

namespace ecsp {

using ordered_json = nlohmann::ordered_json;

inline constexpr std::string_view kSeparator = "------------------------------";
inline constexpr std::string_view kDemoCue = "Generate the output as shown in the examples below.";

/// Task instruction for a prompt kind (the first paragraph of the prompt).
std::string_view instruction(PromptKind kind);

/// Field names, in render order, that a kind's input block requires.
const std::vector<std::string>& required_fields(PromptKind kind);

class MissingField : public std::invalid_argument {
 public:
  explicit MissingField(const std::string& name)
      : std::invalid_argument("missing prompt field: " + name), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(std::string raw, const std::string& why = "no list form matched")
      : std::runtime_error("cannot parse model output (" + why + ")"), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

struct DemoInstance {
  PromptKind kind = PromptKind::Segment;
  ordered_json input_fields;
  /// Structured answer: array of strings (SEGMENT, AMBIGUITY) or object of
  /// label -> array of strings (SELECT).
  ordered_json expected;
  /// `expected` rendered in the prompt's output shape.
  std::string expected_output;
};

/// Versioned demonstration set, one JSON object per line:
/// {"kind": "SEGMENT", "input": {...}, "expected": [...]}.
class DemoStore {
 public:
  DemoStore() = default;
  static DemoStore load(const std::filesystem::path& path);
  static DemoStore from_jsonl(std::string_view text);

  void add(DemoInstance demo);
  /// First `n` demos of `kind` (fewer if the store has fewer).
  std::vector<DemoInstance> take(PromptKind kind, std::size_t n) const;
  std::size_t count(PromptKind kind) const;
  std::size_t size() const noexcept { return demos_.size(); }

 private:
  std::vector<DemoInstance> demos_;
};

DemoInstance make_demo(PromptKind kind, ordered_json input_fields, ordered_json expected);

/// Renders a prompt. Inputs is a JSON object keyed by field name; strings
/// render as `{text}`, string arrays as `{"a", "b"}`, objects as JSON-style
/// objects. Throws MissingField, or std::invalid_argument when demos are
/// given for DECONTEXT/VANILLA.
std::string render(PromptKind kind, const ordered_json& inputs, const std::vector<DemoInstance>& demos);

/// Inverse of the input block rendering: raw field values (without the
/// enclosing braces) of the final Input block of a rendered prompt.
std::map<std::string, std::string> extract_input_fields(PromptKind kind, std::string_view prompt);

/// `{"a", "b"}` with JSON string escaping; `{}` when empty.
std::string format_list(const std::vector<std::string>& items);
/// `{"A1": "a", "A2": "b"}`.
std::string format_labeled(const std::vector<std::string>& items);
/// `{"A1": ["x", "y"], "A2": []}`.
std::string format_groups(const std::vector<std::vector<std::string>>& groups);
/// "A1", "A2", ...
std::string ambiguous_label(std::size_t index);

/// Parses the inner text of a rendered list value (`"a", "b"`).
std::vector<std::string> parse_list_value(std::string_view inner);

enum class ListForm { JsonArray, BraceList, BracketSequence, Enumeration };

struct ParsedEduList {
  std::vector<std::string> items;
  std::string raw;
  bool repair_applied = false;
  ListForm form = ListForm::JsonArray;
};

/// Accepts, in order: a JSON array of strings; a brace list `{a, b}`; a
/// bracket sequence `[a] [b]`; a numbered, dashed or newline/semicolon
/// separated enumeration. Comma splitting applies only to the brace form and
/// is disabled when the list holds an odd number of double quotes.
/// repair_applied is set for the last two forms. Throws ParseError when no
/// form yields an item.
ParsedEduList parse_edu_list(std::string_view response);

/// True for answers that denote an empty set: `{}`, `[]`, "none", ...
bool is_empty_list_answer(std::string_view response);

struct RelevantItem {
  std::string text;
  std::optional<RelationLabel> relation;
};

struct RelevantMap {
  /// groups[i] holds the relevant EDUs of ambiguous[i].
  std::vector<std::vector<RelevantItem>> groups;
  bool flat_assignment = false;
  bool repair_applied = false;
};

/// Groups are read from a JSON object (keys "A1".. or ambiguous EDU text) or
/// from headed lines ("A1: {...}"). A flat list is assigned to every
/// ambiguous EDU and sets flat_assignment. A trailing "(Relation)" on an item
/// becomes its label when it names a known relation.
RelevantMap parse_relevant_map(std::string_view response, const std::vector<std::string>& ambiguous);

/// Splits a trailing "(Relation)" annotation off an item when it parses.
RelevantItem split_relation_annotation(std::string_view item);

/// Rewritten sentence from a DECONTEXT/VANILLA answer: drops code fences, an
/// "Output:" label, and enclosing braces or quotes.
std::string parse_rewrite(std::string_view response);

/// Heuristic for refusals such as "cannot be decontextualised".
bool declares_inability(std::string_view text);

std::string_view repair_suffix(PromptKind kind);

/// Same request with a format-repair instruction placed before the final
/// output cue. Idempotent: a request already carrying the suffix is returned
/// unchanged.
CompletionRequest repair_reask(const CompletionRequest& request, const ParseError& error);

// ---------------------------------------------------------------------------
// Backend calls with bookkeeping, shared by the segmenter and the pipeline.

struct GenerationSettings {
  std::string model_id = "mock";
  int max_output_tokens = 512;
  double temperature = 0.0;
};

/// Per-record call accounting; becomes the result's provenance.
struct CallTrace {
  int calls = 0;
  int cache_hits = 0;
  int repairs = 0;
  std::vector<std::string> prompt_digests;
  std::vector<std::string> warnings;
};

/// First 16 hex digits of the prompt's SHA-256.
std::string prompt_digest(std::string_view prompt);

CompletionRequest make_request(PromptKind kind, std::string prompt, const GenerationSettings& settings);

CompletionResponse traced_complete(CompletionBackend& backend, const CompletionRequest& request, CallTrace& trace);

/// Completes `request` and parses the text with `parse`. A ParseError
/// triggers up to `max_repairs` re-asks with the repair suffix; the last
/// ParseError propagates.
template <class Parse>
auto complete_and_parse(CompletionBackend& backend, CompletionRequest request, CallTrace& trace, int max_repairs,
                        Parse&& parse) -> decltype(parse(std::string{})) {
  for (int round = 0;; ++round) {
    const CompletionResponse response = traced_complete(backend, request, trace);
    try {
      return parse(response.text);
    } catch (const ParseError& e) {
      if (round >= max_repairs) throw;
      ++trace.repairs;
      request = repair_reask(request, e);
    }
  }
}

}  // namespace ecsp
