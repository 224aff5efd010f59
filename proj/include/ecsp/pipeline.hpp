#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecsp/backend.hpp"
#include "ecsp/prompting.hpp"
#include "ecsp/types.hpp"

namespace ecsp {

enum class SelectionMode { Batched, PerAmbiguous };
enum class SegmentationCalls { Split, Unified };
enum class RunMode { Ecsp, Vanilla };

struct PipelineConfig {
  RunMode mode = RunMode::Ecsp;
  SelectionMode selection_mode = SelectionMode::Batched;
  SegmentationCalls segmentation_calls = SegmentationCalls::Unified;
  int demos_per_stage = 10;
  bool apply_gain_filter = true;
  int max_repairs = 1;
  int parallel_records = 1;
  /// One DECONTEXT call per ambiguous EDU, each rewriting the previous output.
  bool sequential_rewrite = false;
  GenerationSettings generation;
  /// Source of SEGMENT/AMBIGUITY/SELECT demonstrations; none when null.
  std::shared_ptr<const DemoStore> demos;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
  /// Output-relevant settings (parallelism excluded) plus the demos used.
  json to_json() const;
  std::string digest() const;
};

class StageError : public std::runtime_error {
 public:
  StageError(PromptKind stage, const std::string& cause)
      : std::runtime_error(kind_name(stage) + ": " + cause), stage_(stage) {}
  PromptKind stage() const noexcept { return stage_; }

 private:
  PromptKind stage_;
};

/// Segmentation, ambiguity identification and EDU selection. Returned
/// strings that match no EDU are dropped with a warning in `trace`.
/// `degraded` reports whether any segmentation used the rule fallback.
ContentSelection select_content(const SourceRecord& record, CompletionBackend& backend, const PipelineConfig& config,
                                CallTrace& trace, bool* degraded = nullptr);
ContentSelection select_content(const SourceRecord& record, CompletionBackend& backend, const PipelineConfig& config);

/// Rewrites the sentence from the content plan (ambiguous EDUs in sentence
/// order with their relevant EDUs). No call is made when nothing is
/// ambiguous.
DecontextResult plan_and_rewrite(const SourceRecord& record, const ContentSelection& selection,
                                 CompletionBackend& backend, const PipelineConfig& config, CallTrace& trace);
DecontextResult plan_and_rewrite(const SourceRecord& record, const ContentSelection& selection,
                                 CompletionBackend& backend, const PipelineConfig& config = {});

/// Single VANILLA call with the sentence and its full context.
DecontextResult run_vanilla(const SourceRecord& record, CompletionBackend& backend, const PipelineConfig& config = {});

/// Full per-record processing in the configured mode. Stage failures become
/// status ERROR; authentication and configuration errors propagate.
DecontextResult process_record(const SourceRecord& record, CompletionBackend& backend, const PipelineConfig& config);

/// Same-text matching used to map model strings back to EDUs: normalized
/// equality, else the candidate with the largest common substring covering
/// at least 80% of `text`.
std::optional<std::size_t> match_edu(const std::string& text, const std::vector<Edu>& edus);

struct RunManifest {
  std::string config_digest;
  std::string backend_id;
  std::string mode;
  std::string started_at;
  std::string finished_at;
  std::map<std::string, int> status_counts;
  long total_calls = 0;
  long cache_hits = 0;
  long live_calls = 0;
  int records_processed = 0;
  int records_resumed = 0;
  double mean_added_words = 0.0;
  int feasible = 0;
  int unfeasible = 0;
  int no_ambiguity = 0;
  int degraded_segmentations = 0;
  bool interrupted = false;
  std::optional<std::string> fatal_error;

  json to_json() const;
};

struct RunOptions {
  /// Results JSONL; empty keeps results in memory only.
  std::filesystem::path out;
  /// Skip record ids already present in `out`.
  bool resume = false;
  bool include_timing = false;
  /// Set from another thread (e.g. a signal handler) to stop dispatching.
  const std::atomic<bool>* cancel = nullptr;
};

struct RunOutput {
  /// Every result in `out` after the run (resumed ones first), input order.
  std::vector<DecontextResult> results;
  RunManifest manifest;
};

/// Processes records with up to `parallel_records` workers, writing results
/// in input order as they complete. Record failures are captured in their
/// result; a fatal backend error stops dispatch and is reported in the
/// manifest (the failing record is not written, so --resume retries it).
RunOutput run_dataset(const std::vector<SourceRecord>& records, const PipelineConfig& config,
                      CompletionBackend& backend, const RunOptions& options = {});

/// Results JSONL line for a result.
std::string result_line(const DecontextResult& result, bool include_timing = false);

std::string selection_mode_name(SelectionMode m);
std::string segmentation_calls_name(SegmentationCalls c);
std::string run_mode_name(RunMode m);

}  // namespace ecsp
