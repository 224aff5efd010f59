#include "ecsp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "ecsp/cache.hpp"
#include "ecsp/dataset.hpp"
#include "ecsp/log.hpp"
#include "ecsp/segmenter.hpp"
#include "ecsp/text.hpp"

namespace ecsp {

namespace {

std::vector<DemoInstance> demos_for(const PipelineConfig& config, PromptKind kind) {
  if (!config.demos || config.demos_per_stage <= 0) return {};
  return config.demos->take(kind, static_cast<std::size_t>(config.demos_per_stage));
}

SegmentConfig segment_config(const PipelineConfig& config) {
  SegmentConfig sc;
  sc.generation = config.generation;
  sc.demos = demos_for(config, PromptKind::Segment);
  sc.max_repairs = config.max_repairs;
  return sc;
}

std::vector<std::string> texts_of(const std::vector<Edu>& edus) {
  std::vector<std::string> out;
  out.reserve(edus.size());
  for (const auto& e : edus) out.push_back(e.text());
  return out;
}

ordered_json string_array(const std::vector<std::string>& items) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : items) arr.push_back(s);
  return arr;
}

bool is_fatal(const BackendError& e) {
  return e.kind() == BackendError::Kind::Auth || e.kind() == BackendError::Kind::Config;
}

// Runs a stage body, turning recoverable failures into StageError.
template <class F>
auto stage(PromptKind kind, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const BackendError& e) {
    if (is_fatal(e)) throw;
    throw StageError(kind, e.what());
  } catch (const ParseError& e) {
    throw StageError(kind, e.what());
  } catch (const std::exception& e) {
    throw StageError(kind, e.what());
  }
}

std::vector<std::string> parse_ambiguity_answer(const std::string& text) {
  if (is_empty_list_answer(text)) return {};
  return parse_edu_list(text).items;
}

struct SegmentedRecord {
  std::vector<Edu> sentence;
  std::vector<Edu> context;
  bool degraded = false;
};

SegmentedRecord segment_record(const SourceRecord& record, CompletionBackend& backend, const PipelineConfig& config,
                               CallTrace& trace) {
  const SegmentConfig sc = segment_config(config);
  std::vector<SegmentUnit> context_units;
  for (std::size_t i = 0; i < record.context.size(); ++i) {
    context_units.push_back({Origin::context(i), record.context[i]});
  }
  std::vector<SegmentationOutput> outputs;
  if (config.segmentation_calls == SegmentationCalls::Unified) {
    std::vector<SegmentUnit> units{{Origin::sentence(), record.sentence}};
    units.insert(units.end(), context_units.begin(), context_units.end());
    outputs = segment_units(units, backend, sc, trace);
  } else {
    outputs = segment_units({{Origin::sentence(), record.sentence}}, backend, sc, trace);
    if (!context_units.empty()) {
      auto ctx = segment_units(context_units, backend, sc, trace);
      outputs.insert(outputs.end(), std::make_move_iterator(ctx.begin()), std::make_move_iterator(ctx.end()));
    }
  }
  SegmentedRecord seg;
  for (std::size_t u = 0; u < outputs.size(); ++u) {
    seg.degraded = seg.degraded || outputs[u].degraded;
    auto& target = u == 0 ? seg.sentence : seg.context;
    target.insert(target.end(), outputs[u].edus.begin(), outputs[u].edus.end());
  }
  return seg;
}

std::vector<Edu> identify_ambiguous(const SourceRecord& record, const std::vector<Edu>& sentence_edus,
                                    CompletionBackend& backend, const PipelineConfig& config, CallTrace& trace) {
  ordered_json inputs = ordered_json::object();
  inputs["Sentence"] = record.sentence;
  inputs["EDUs"] = string_array(texts_of(sentence_edus));
  const auto request = make_request(
      PromptKind::Ambiguity, render(PromptKind::Ambiguity, inputs, demos_for(config, PromptKind::Ambiguity)),
      config.generation);
  const auto items = complete_and_parse(backend, request, trace, config.max_repairs, parse_ambiguity_answer);
  std::vector<std::size_t> picked;
  for (const auto& item : items) {
    if (auto idx = match_edu(item, sentence_edus)) {
      if (std::find(picked.begin(), picked.end(), *idx) == picked.end()) picked.push_back(*idx);
    } else {
      trace.warnings.push_back("ambiguous EDU matches no sentence EDU: " + item);
    }
  }
  std::sort(picked.begin(), picked.end(),
            [&](std::size_t a, std::size_t b) { return sentence_edus[a].ordinal() < sentence_edus[b].ordinal(); });
  std::vector<Edu> out;
  for (const auto i : picked) out.push_back(sentence_edus[i]);
  return out;
}

// One SELECT call over `group` (indices into `ambiguous`); fills `relevant`.
void select_group(const SourceRecord& record, const std::vector<Edu>& context_edus, const std::vector<Edu>& ambiguous,
                  const std::vector<std::size_t>& group, std::vector<std::vector<RelevantEdu>>& relevant,
                  CompletionBackend& backend, const PipelineConfig& config, CallTrace& trace) {
  std::vector<std::string> amb_texts;
  for (const auto i : group) amb_texts.push_back(ambiguous[i].text());
  ordered_json labeled = ordered_json::object();
  for (std::size_t k = 0; k < amb_texts.size(); ++k) labeled[ambiguous_label(k)] = amb_texts[k];

  ordered_json inputs = ordered_json::object();
  inputs["Paragraph"] = string_array(record.context);
  inputs["EDUs in Paragraph"] = string_array(texts_of(context_edus));
  inputs["Sentence"] = record.sentence;
  inputs["Ambiguous EDUs in Sentence"] = labeled;
  const auto request = make_request(
      PromptKind::Select, render(PromptKind::Select, inputs, demos_for(config, PromptKind::Select)), config.generation);
  const RelevantMap map = complete_and_parse(backend, request, trace, config.max_repairs, [&](const std::string& text) {
    return parse_relevant_map(text, amb_texts);
  });
  if (map.flat_assignment && amb_texts.size() > 1) {
    trace.warnings.push_back("selection output was not grouped; relevant EDUs assigned to every ambiguous EDU");
  }
  for (std::size_t k = 0; k < group.size(); ++k) {
    auto& target = relevant[group[k]];
    for (const auto& item : map.groups[k]) {
      const auto idx = match_edu(item.text, context_edus);
      if (!idx) {
        trace.warnings.push_back("relevant EDU matches no context EDU: " + item.text);
        continue;
      }
      if (config.apply_gain_filter && item.relation && !gain_flag(*item.relation)) {
        trace.warnings.push_back("dropped relevant EDU with non-gain relation " + item.relation->display() + ": " +
                                 item.text);
        continue;
      }
      const Edu& edu = context_edus[*idx];
      const bool dup = std::any_of(target.begin(), target.end(), [&](const RelevantEdu& r) { return r.edu == edu; });
      if (!dup) target.push_back({edu, item.relation});
    }
  }
}

std::string annotate(const RelevantEdu& r) {
  return r.relation ? r.edu.text() + " (" + std::string(coarse_name(r.relation->coarse)) + ")" : r.edu.text();
}

ordered_json relevant_object(const std::vector<const AmbiguousEdu*>& plan) {
  ordered_json groups = ordered_json::object();
  for (std::size_t k = 0; k < plan.size(); ++k) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : plan[k]->relevant) arr.push_back(annotate(r));
    groups[ambiguous_label(k)] = arr;
  }
  return groups;
}

std::string parse_rewrite_strict(const std::string& text) {
  std::string out = parse_rewrite(text);
  if (trim(out).empty()) throw ParseError(text, "empty rewrite");
  if (declares_inability(out)) throw ParseError(text, "model declined the rewrite");
  return out;
}

// DECONTEXT call over the given plan; nullopt when the model gave no usable rewrite.
std::optional<std::string> rewrite_call(const std::string& sentence, const std::vector<const AmbiguousEdu*>& plan,
                                        CompletionBackend& backend, const PipelineConfig& config, CallTrace& trace) {
  ordered_json labeled = ordered_json::object();
  for (std::size_t k = 0; k < plan.size(); ++k) labeled[ambiguous_label(k)] = plan[k]->edu.text();
  ordered_json inputs = ordered_json::object();
  inputs["Sentence"] = sentence;
  inputs["Ambiguous EDUs in Sentence"] = labeled;
  inputs["EDUs relevant to the sentence"] = relevant_object(plan);
  const auto request = make_request(PromptKind::Decontext, render(PromptKind::Decontext, inputs, {}),
                                    config.generation);
  try {
    return complete_and_parse(backend, request, trace, config.max_repairs, parse_rewrite_strict);
  } catch (const ParseError& e) {
    trace.warnings.push_back(std::string("rewrite unusable: ") + e.what());
    return std::nullopt;
  }
}

void fill_provenance(DecontextResult& result, const CallTrace& trace, const std::string& backend_id) {
  result.provenance.backend_id = backend_id;
  result.provenance.prompt_digests = trace.prompt_digests;
  result.provenance.backend_calls = trace.calls;
  result.provenance.cache_hits = trace.cache_hits;
  result.provenance.repairs = trace.repairs;
  result.warnings = trace.warnings;
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string selection_mode_name(SelectionMode m) {
  return m == SelectionMode::Batched ? "batched" : "per-ambiguous";
}
std::string segmentation_calls_name(SegmentationCalls c) { return c == SegmentationCalls::Unified ? "unified" : "split"; }
std::string run_mode_name(RunMode m) { return m == RunMode::Ecsp ? "ecsp" : "vanilla"; }

void PipelineConfig::validate() const {
  if (demos_per_stage < 0) throw std::invalid_argument("demos_per_stage must be >= 0");
  if (parallel_records < 1) throw std::invalid_argument("parallel_records must be >= 1");
  if (max_repairs < 0) throw std::invalid_argument("max_repairs must be >= 0");
  if (generation.max_output_tokens <= 0) throw std::invalid_argument("max_output_tokens must be > 0");
  if (generation.temperature < 0) throw std::invalid_argument("temperature must be >= 0");
}

json PipelineConfig::to_json() const {
  json j;
  j["mode"] = run_mode_name(mode);
  j["selection_mode"] = selection_mode_name(selection_mode);
  j["segmentation_calls"] = segmentation_calls_name(segmentation_calls);
  j["demos_per_stage"] = demos_per_stage;
  j["apply_gain_filter"] = apply_gain_filter;
  j["max_repairs"] = max_repairs;
  j["sequential_rewrite"] = sequential_rewrite;
  j["model_id"] = generation.model_id;
  j["max_output_tokens"] = generation.max_output_tokens;
  j["temperature"] = generation.temperature;
  std::string demo_text;
  for (const auto kind : {PromptKind::Segment, PromptKind::Ambiguity, PromptKind::Select}) {
    for (const auto& d : demos_for(*this, kind)) {
      demo_text += kind_name(kind) + "\n" + d.input_fields.dump() + "\n" + d.expected_output + "\n";
    }
  }
  j["demos_digest"] = sha256_hex(demo_text).substr(0, 16);
  return j;
}

std::string PipelineConfig::digest() const { return sha256_hex(to_json().dump()).substr(0, 16); }

std::optional<std::size_t> match_edu(const std::string& text, const std::vector<Edu>& edus) {
  const std::string needle = utf8_lower(normalize_text(text));
  if (needle.empty()) return std::nullopt;
  for (std::size_t i = 0; i < edus.size(); ++i) {
    if (utf8_lower(normalize_text(edus[i].text())) == needle) return i;
  }
  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t i = 0; i < edus.size(); ++i) {
    const std::string cand = utf8_lower(normalize_text(edus[i].text()));
    const auto lcs = longest_common_substring(needle, cand);
    if (static_cast<double>(lcs.length) < 0.8 * static_cast<double>(needle.size())) continue;
    const double score = static_cast<double>(lcs.length) / static_cast<double>(std::max(needle.size(), cand.size()));
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

ContentSelection select_content(const SourceRecord& record, CompletionBackend& backend, const PipelineConfig& config,
                                CallTrace& trace, bool* degraded) {
  record.validate();
  const SegmentedRecord seg =
      stage(PromptKind::Segment, [&] { return segment_record(record, backend, config, trace); });
  if (degraded) *degraded = seg.degraded;

  const std::vector<Edu> ambiguous = stage(PromptKind::Ambiguity, [&] {
    return identify_ambiguous(record, seg.sentence, backend, config, trace);
  });

  std::vector<std::vector<RelevantEdu>> relevant(ambiguous.size());
  if (!ambiguous.empty() && !seg.context.empty()) {
    stage(PromptKind::Select, [&] {
      if (config.selection_mode == SelectionMode::Batched) {
        std::vector<std::size_t> all(ambiguous.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        select_group(record, seg.context, ambiguous, all, relevant, backend, config, trace);
      } else {
        for (std::size_t i = 0; i < ambiguous.size(); ++i) {
          select_group(record, seg.context, ambiguous, {i}, relevant, backend, config, trace);
        }
      }
      return 0;
    });
  }

  std::vector<AmbiguousEdu> entries;
  for (std::size_t i = 0; i < ambiguous.size(); ++i) entries.push_back({ambiguous[i], std::move(relevant[i])});
  return ContentSelection(seg.sentence, seg.context, std::move(entries), trace.calls, config.apply_gain_filter);
}

ContentSelection select_content(const SourceRecord& record, CompletionBackend& backend, const PipelineConfig& config) {
  CallTrace trace;
  return select_content(record, backend, config, trace);
}

DecontextResult plan_and_rewrite(const SourceRecord& record, const ContentSelection& selection,
                                 CompletionBackend& backend, const PipelineConfig& config, CallTrace& trace) {
  DecontextResult result;
  result.record_id = record.id;
  result.selection = selection;
  if (selection.ambiguous().empty()) {
    result.rewritten = record.sentence;
    result.status = Status::UnchangedNoAmbiguity;
    fill_provenance(result, trace, backend.id());
    return result;
  }

  // Content plan: ambiguous EDUs in sentence order (the selection keeps that order).
  std::vector<const AmbiguousEdu*> plan;
  for (const auto& a : selection.ambiguous()) plan.push_back(&a);

  std::optional<std::string> rewritten = stage(PromptKind::Decontext, [&]() -> std::optional<std::string> {
    if (!config.sequential_rewrite) return rewrite_call(record.sentence, plan, backend, config, trace);
    std::string current = record.sentence;
    bool any = false;
    for (const auto* step : plan) {
      if (auto next = rewrite_call(current, {step}, backend, config, trace)) {
        current = *next;
        any = true;
      }
    }
    return any ? std::optional<std::string>(current) : std::nullopt;
  });

  if (!rewritten || same_text(*rewritten, record.sentence)) {
    result.rewritten = record.sentence;
    result.status = Status::Infeasible;
  } else {
    result.rewritten = *rewritten;
    result.status = Status::Decontextualised;
  }
  fill_provenance(result, trace, backend.id());
  return result;
}

DecontextResult plan_and_rewrite(const SourceRecord& record, const ContentSelection& selection,
                                 CompletionBackend& backend, const PipelineConfig& config) {
  CallTrace trace;
  return plan_and_rewrite(record, selection, backend, config, trace);
}

DecontextResult run_vanilla(const SourceRecord& record, CompletionBackend& backend, const PipelineConfig& config) {
  record.validate();
  CallTrace trace;
  DecontextResult result;
  result.record_id = record.id;
  std::optional<std::string> rewritten = stage(PromptKind::Vanilla, [&]() -> std::optional<std::string> {
    ordered_json inputs = ordered_json::object();
    inputs["Sentence"] = record.sentence;
    inputs["Context"] = string_array(record.context);
    const auto request =
        make_request(PromptKind::Vanilla, render(PromptKind::Vanilla, inputs, {}), config.generation);
    try {
      return complete_and_parse(backend, request, trace, config.max_repairs, parse_rewrite_strict);
    } catch (const ParseError& e) {
      trace.warnings.push_back(std::string("rewrite unusable: ") + e.what());
      return std::nullopt;
    }
  });
  if (!rewritten) {
    result.rewritten = record.sentence;
    result.status = Status::Infeasible;
  } else if (same_text(*rewritten, record.sentence)) {
    result.rewritten = record.sentence;
    result.status = Status::UnchangedNoAmbiguity;
  } else {
    result.rewritten = *rewritten;
    result.status = Status::Decontextualised;
  }
  fill_provenance(result, trace, backend.id());
  return result;
}

DecontextResult process_record(const SourceRecord& record, CompletionBackend& backend, const PipelineConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  DecontextResult result;
  CallTrace trace;
  bool degraded = false;
  try {
    if (config.mode == RunMode::Vanilla) {
      result = run_vanilla(record, backend, config);
    } else {
      const ContentSelection selection = select_content(record, backend, config, trace, &degraded);
      result = plan_and_rewrite(record, selection, backend, config, trace);
      result.provenance.degraded_segmentation = degraded;
    }
  } catch (const BackendError& e) {
    if (is_fatal(e)) throw;
    result = DecontextResult{};
    result.record_id = record.id;
    result.rewritten = record.sentence;
    result.status = Status::Error;
    result.error = e.what();
    fill_provenance(result, trace, backend.id());
  } catch (const std::exception& e) {
    result = DecontextResult{};
    result.record_id = record.id;
    result.rewritten = record.sentence;
    result.status = Status::Error;
    result.error = e.what();
    fill_provenance(result, trace, backend.id());
    result.provenance.degraded_segmentation = degraded;
  }
  result.provenance.wall_time_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::string result_line(const DecontextResult& result, bool include_timing) {
  return to_json(result, include_timing).dump(-1, ' ', false, json::error_handler_t::replace);
}

json RunManifest::to_json() const {
  json j;
  j["config_digest"] = config_digest;
  j["backend_id"] = backend_id;
  j["mode"] = mode;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["status_counts"] = status_counts;
  j["total_calls"] = total_calls;
  j["cache_hits"] = cache_hits;
  j["live_calls"] = live_calls;
  j["records_processed"] = records_processed;
  j["records_resumed"] = records_resumed;
  j["mean_added_words"] = mean_added_words;
  j["feasibility"] = {{"feasible", feasible}, {"unfeasible", unfeasible}, {"no_ambiguity", no_ambiguity}};
  j["degraded_segmentations"] = degraded_segmentations;
  j["interrupted"] = interrupted;
  j["fatal_error"] = fatal_error ? json(*fatal_error) : json(nullptr);
  return j;
}

RunOutput run_dataset(const std::vector<SourceRecord>& records, const PipelineConfig& config,
                      CompletionBackend& backend, const RunOptions& options) {
  config.validate();
  RunOutput output;
  RunManifest& manifest = output.manifest;
  manifest.config_digest = config.digest();
  manifest.backend_id = backend.id();
  manifest.mode = run_mode_name(config.mode);
  manifest.started_at = iso_now();

  // Resume: keep the valid lines of an existing output file.
  std::unordered_set<std::string> done;
  if (options.resume && !options.out.empty() && std::filesystem::exists(options.out)) {
    std::ifstream in(options.out, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      try {
        DecontextResult r = result_from_json(json::parse(line));
        if (done.insert(r.record_id).second) output.results.push_back(std::move(r));
      } catch (const std::exception& e) {
        log_warning("resume: dropping unreadable line " + std::to_string(line_no) + " of " + options.out.string());
      }
    }
    manifest.records_resumed = static_cast<int>(output.results.size());
  }

  std::ofstream out;
  if (!options.out.empty()) {
    if (options.out.has_parent_path()) std::filesystem::create_directories(options.out.parent_path());
    const auto tmp = options.out.string() + ".tmp";
    {
      std::ofstream rewrite(tmp, std::ios::binary | std::ios::trunc);
      if (!rewrite) throw std::runtime_error("cannot write " + tmp);
      for (const auto& r : output.results) rewrite << result_line(r, options.include_timing) << '\n';
    }
    std::filesystem::rename(tmp, options.out);
    out.open(options.out, std::ios::binary | std::ios::app);
    if (!out) throw std::runtime_error("cannot write " + options.out.string());
  }

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!done.count(records[i].id)) todo.push_back(i);
  }

  std::mutex mutex;
  std::condition_variable ready;
  std::vector<std::optional<DecontextResult>> slots(todo.size());
  std::vector<bool> finished(todo.size(), false);  // slot filled or abandoned
  std::size_t next_job = 0;
  bool stop = false;

  auto worker = [&] {
    for (;;) {
      std::size_t job;
      {
        std::unique_lock lock(mutex);
        if (stop || next_job >= todo.size()) return;
        if (options.cancel && options.cancel->load()) {
          manifest.interrupted = true;
          stop = true;
          lock.unlock();
          ready.notify_all();
          return;
        }
        job = next_job++;
      }
      std::optional<DecontextResult> result;
      try {
        result = process_record(records[todo[job]], backend, config);
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        if (!manifest.fatal_error) manifest.fatal_error = e.what();
        stop = true;
      }
      {
        std::lock_guard lock(mutex);
        slots[job] = std::move(result);
        finished[job] = true;
      }
      ready.notify_all();
    }
  };

  const int n_workers = std::max(1, std::min<int>(config.parallel_records, static_cast<int>(todo.size())));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers && !todo.empty(); ++w) pool.emplace_back(worker);

  // Writer: emit results in input order as the prefix completes.
  std::size_t next_write = 0;
  {
    std::unique_lock lock(mutex);
    while (next_write < todo.size()) {
      ready.wait(lock, [&] {
        const bool dispatched_all = next_job >= todo.size() || stop;
        return finished[next_write] || (dispatched_all && next_write >= next_job);
      });
      if (!finished[next_write]) break;  // never dispatched
      if (slots[next_write]) {
        DecontextResult r = std::move(*slots[next_write]);
        lock.unlock();
        if (out.is_open()) {
          out << result_line(r, options.include_timing) << '\n';
          out.flush();
        }
        lock.lock();
        output.results.push_back(std::move(r));
        ++manifest.records_processed;
      }
      ++next_write;
    }
  }
  for (auto& t : pool) t.join();
  // Results finished after an earlier slot was abandoned are still written.
  for (std::size_t i = next_write; i < todo.size(); ++i) {
    if (finished[i] && slots[i]) {
      if (out.is_open()) out << result_line(*slots[i], options.include_timing) << '\n';
      output.results.push_back(std::move(*slots[i]));
      ++manifest.records_processed;
    }
  }
  out.close();

  std::unordered_map<std::string, const SourceRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.id, &r);
  for (const auto s : {Status::Decontextualised, Status::UnchangedNoAmbiguity, Status::Infeasible, Status::Error}) {
    manifest.status_counts[status_name(s)] = 0;
  }
  double added = 0.0;
  int added_n = 0;
  for (const auto& r : output.results) {
    ++manifest.status_counts[status_name(r.status)];
    if (r.status == Status::Decontextualised) ++manifest.feasible;
    if (r.status == Status::Infeasible || r.status == Status::Error) ++manifest.unfeasible;
    if (r.status == Status::UnchangedNoAmbiguity) ++manifest.no_ambiguity;
    if (r.provenance.degraded_segmentation) ++manifest.degraded_segmentations;
    if (const auto it = by_id.find(r.record_id); it != by_id.end()) {
      added += static_cast<double>(added_words(*it->second, r));
      ++added_n;
    }
  }
  for (std::size_t i = manifest.records_resumed; i < output.results.size(); ++i) {
    manifest.total_calls += output.results[i].provenance.backend_calls;
    manifest.cache_hits += output.results[i].provenance.cache_hits;
  }
  manifest.live_calls = manifest.total_calls - manifest.cache_hits;
  manifest.mean_added_words = added_n ? added / added_n : 0.0;
  if (options.cancel && options.cancel->load() && manifest.records_processed + manifest.records_resumed <
                                                      static_cast<int>(records.size())) {
    manifest.interrupted = true;
  }
  manifest.finished_at = iso_now();
  return output;
}

}  // namespace ecsp
