#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ecsp/types.hpp"

namespace ecsp {

class FileNotFound : public std::runtime_error {
 public:
  explicit FileNotFound(const std::filesystem::path& p) : std::runtime_error("file not found: " + p.string()) {}
};

class EmptyDataset : public std::invalid_argument {
 public:
  EmptyDataset() : std::invalid_argument("dataset is empty") {}
};

/// JSON keys of the four record fields in an input file.
struct FieldMap {
  std::string id_field = "id";
  std::string sentence_field = "sentence";
  std::string context_field = "context";
  std::string gold_field = "decontextualised";
};

struct SchemaError {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct LoadResult {
  std::vector<SourceRecord> records;
  std::vector<SchemaError> errors;
};

/// Reads JSONL records. Invalid lines and duplicate ids are reported in
/// `errors`; the remaining lines still load. A string context is split with
/// split_sentences. Throws FileNotFound.
LoadResult load_dataset(const std::filesystem::path& path, const FieldMap& fields = {});
LoadResult parse_dataset(std::string_view jsonl, const FieldMap& fields = {});

/// One JSON object per record, context as a list, gold under
/// "decontextualised", meta only when non-empty.
std::string dump_dataset(const std::vector<SourceRecord>& records);
void save_dataset(const std::filesystem::path& path, const std::vector<SourceRecord>& records);

/// Splits after ., ! or ? (plus closing quotes or brackets) when whitespace
/// and an uppercase letter, digit or opening quote follow. No split after a
/// known abbreviation ("Mr.", "Dr.", "St.", "e.g.", ...) or a single-letter
/// initial.
std::vector<std::string> split_sentences(std::string_view text);

struct DatasetStats {
  std::size_t n_samples = 0;
  double avg_context_words = 0.0;
  double avg_sentence_words = 0.0;

  json to_json() const;
};

/// Tokens of `tokenize` that are not punctuation-only.
std::size_t word_count(std::string_view text);

/// Throws EmptyDataset.
DatasetStats compute_stats(const std::vector<SourceRecord>& records);

/// Word tokens of `rewritten` left after removing the original's word
/// tokens as a multiset.
std::size_t added_words(std::string_view original, std::string_view rewritten);
std::size_t added_words(const SourceRecord& record, const DecontextResult& result);

}  // namespace ecsp
