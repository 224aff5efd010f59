// ecsp: run the decontextualisation pipeline, evaluate results, inspect caches.
//
// Exit codes: 0 success, 2 config/path error, 3 nothing to evaluate,
// 4 backend-fatal (authentication or configuration rejected by the provider).

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "ecsp/backend.hpp"
#include "ecsp/cache.hpp"
#include "ecsp/dataset.hpp"
#include "ecsp/http_backend.hpp"
#include "ecsp/metrics.hpp"
#include "ecsp/mock_backend.hpp"
#include "ecsp/pipeline.hpp"
#include "ecsp/segmenter.hpp"

namespace fs = std::filesystem;
using namespace ecsp;

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kEmpty = 3;
constexpr int kFatal = 4;

std::atomic<bool> g_cancel{false};

extern "C" void on_sigint(int) { g_cancel.store(true); }

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BackendArgs {
  std::string backend = "mock";
  std::string model;
  std::string api_base = "https://api.openai.com/v1";
  std::string api_key_env;
  int max_tokens = 512;
  double temperature = 0.0;
  double rpm = 0.0;
  std::string cache_dir;
};

struct DataArgs {
  std::string path;
  FieldMap fields;
  int limit = 0;
};

void add_backend_flags(CLI::App* cmd, BackendArgs& a) {
  cmd->add_option("--backend", a.backend, "Completion backend")->check(CLI::IsMember({"http", "mock"}));
  cmd->add_option("--model", a.model, "Model id (required for http)");
  cmd->add_option("--api-base", a.api_base, "OpenAI-compatible base URL");
  cmd->add_option("--api-key-env", a.api_key_env, "Environment variable holding the API key");
  cmd->add_option("--max-tokens", a.max_tokens, "Max output tokens per call")->capture_default_str();
  cmd->add_option("--temperature", a.temperature, "Sampling temperature")->capture_default_str();
  cmd->add_option("--rpm", a.rpm, "Requests per minute limit (0 = unlimited)");
  cmd->add_option("--cache-dir", a.cache_dir, "Response cache directory");
}

void add_data_flags(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--data", d.path, "Dataset JSONL")->required();
  cmd->add_option("--id-field", d.fields.id_field, "Record id key")->capture_default_str();
  cmd->add_option("--sentence-field", d.fields.sentence_field, "Sentence key")->capture_default_str();
  cmd->add_option("--context-field", d.fields.context_field, "Context key")->capture_default_str();
  cmd->add_option("--gold-field", d.fields.gold_field, "Gold rewrite key")->capture_default_str();
}

std::vector<SourceRecord> load_records(const DataArgs& d) {
  LoadResult loaded;
  try {
    loaded = load_dataset(d.path, d.fields);
  } catch (const FileNotFound& e) {
    throw ConfigError(e.what());
  }
  for (const auto& e : loaded.errors) std::cerr << d.path << ":" << e.line << ": " << e.reason << "\n";
  if (d.limit > 0 && loaded.records.size() > static_cast<std::size_t>(d.limit)) loaded.records.resize(d.limit);
  if (loaded.records.empty()) throw ConfigError("no valid records in " + d.path);
  return loaded.records;
}

BackendPtr make_backend(const BackendArgs& a) {
  BackendPtr inner;
  if (a.backend == "mock") {
    inner = std::make_shared<MockBackend>();
  } else {
    if (a.api_key_env.empty()) throw ConfigError("--api-key-env is required with --backend http");
    const char* key = std::getenv(a.api_key_env.c_str());
    if (!key || !*key) throw ConfigError("environment variable " + a.api_key_env + " is not set");
    if (a.model.empty()) throw ConfigError("--model is required with --backend http");
    HttpBackendConfig cfg;
    cfg.api_base = a.api_base;
    cfg.model = a.model;
    cfg.api_key = key;
    cfg.requests_per_minute = a.rpm;
    try {
      inner = std::make_shared<HttpBackend>(cfg);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  if (a.cache_dir.empty()) return inner;
  return std::make_shared<CachedBackend>(inner, std::make_shared<ResponseCache>(a.cache_dir));
}

GenerationSettings generation_of(const BackendArgs& a) {
  GenerationSettings g;
  g.model_id = a.backend == "mock" ? "mock" : a.model;
  g.max_output_tokens = a.max_tokens;
  g.temperature = a.temperature;
  return g;
}

void refuse_overwrite(const fs::path& p, bool force) {
  if (!force && fs::exists(p)) throw ConfigError(p.string() + " exists (use --force to overwrite)");
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << content;
}

std::vector<DecontextResult> load_results(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::vector<DecontextResult> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(result_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      std::cerr << p.string() << ":" << n << ": skipped (" << e.what() << ")\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  BackendArgs backend;
  DataArgs data;
  std::string demos_file;
  std::string mode = "ecsp";
  std::string selection = "batched";
  std::string seg_calls = "unified";
  int parallel = 1;
  int demos_per_stage = 10;
  bool no_gain_filter = false;
  bool resume = false;
  bool force = false;
  bool timings = false;
  std::string out;
};

int cmd_run(const RunArgs& a) {
  const fs::path out = a.out;
  if (!a.resume) refuse_overwrite(out, a.force);
  if (a.resume && a.force) throw ConfigError("--resume and --force are mutually exclusive");
  auto records = load_records(a.data);

  PipelineConfig config;
  config.mode = a.mode == "vanilla" ? RunMode::Vanilla : RunMode::Ecsp;
  config.selection_mode = a.selection == "per-ambiguous" ? SelectionMode::PerAmbiguous : SelectionMode::Batched;
  config.segmentation_calls = a.seg_calls == "split" ? SegmentationCalls::Split : SegmentationCalls::Unified;
  config.parallel_records = a.parallel;
  config.demos_per_stage = a.demos_per_stage;
  config.apply_gain_filter = !a.no_gain_filter;
  config.generation = generation_of(a.backend);
  if (!a.demos_file.empty()) {
    try {
      config.demos = std::make_shared<const DemoStore>(DemoStore::load(a.demos_file));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("demos: ") + e.what());
    }
  }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  auto backend = make_backend(a.backend);
  if (a.force && fs::exists(out)) fs::remove(out);

  RunOptions options;
  options.out = out;
  options.resume = a.resume;
  options.include_timing = a.timings;
  options.cancel = &g_cancel;
  std::signal(SIGINT, on_sigint);
  const RunOutput result = run_dataset(records, config, *backend, options);
  std::signal(SIGINT, SIG_DFL);

  fs::path manifest_path = out;
  manifest_path += ".manifest.json";
  write_file(manifest_path, result.manifest.to_json().dump(2) + "\n");

  const auto& m = result.manifest;
  std::cerr << "processed " << m.records_processed << " (resumed " << m.records_resumed << "), calls "
            << m.total_calls << ", cache hits " << m.cache_hits << "\n";
  if (m.fatal_error) {
    std::cerr << "fatal: " << *m.fatal_error << "\n";
    return kFatal;
  }
  return kOk;
}

struct EvalArgs {
  DataArgs data;
  std::string results;
  std::string out_prefix;
  std::vector<std::string> metrics;
  std::string embedding = "none";
  std::string system = "system";
  bool force = false;
};

int cmd_eval(const EvalArgs& a) {
  MetricConfig mc;
  if (!a.metrics.empty()) {
    for (const auto& m : a.metrics) {
      const auto& names = metric_names();
      if (std::find(names.begin(), names.end(), m) == names.end()) throw ConfigError("unknown metric: " + m);
    }
    mc.metrics = a.metrics;
  }
  if (a.embedding == "hash") mc.provider = std::make_shared<HashEmbeddingProvider>();

  std::vector<fs::path> outputs;
  if (!a.out_prefix.empty()) {
    for (const char* ext : {".json", ".csv", ".md"}) outputs.emplace_back(a.out_prefix + ext);
    for (const auto& p : outputs) refuse_overwrite(p, a.force);
  }
  const auto records = load_records(a.data);
  if (!fs::exists(a.results)) throw ConfigError("file not found: " + a.results);
  const auto results = load_results(a.results);

  MetricReport report;
  try {
    report = evaluate_corpus(results, records, mc);
  } catch (const NoReferences& e) {
    std::cerr << e.what() << "\n";
    return kEmpty;
  }
  const std::string md = report.to_markdown(a.system);
  if (!outputs.empty()) {
    write_file(outputs[0], report.to_json().dump(2) + "\n");
    write_file(outputs[1], report.to_csv());
    write_file(outputs[2], md);
  }
  std::cout << md;
  return kOk;
}

int cmd_stats(const DataArgs& d, const std::string& out, bool force) {
  if (!out.empty()) refuse_overwrite(out, force);
  const auto records = load_records(d);
  const std::string text = compute_stats(records).to_json().dump(2) + "\n";
  if (!out.empty()) write_file(out, text);
  std::cout << text;
  return kOk;
}

int cmd_cache(const std::string& action, const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("cache directory not found: " + dir);
  ResponseCache cache(dir);
  if (action == "clear") {
    std::cout << "removed " << cache.clear() << " entries\n";
    return kOk;
  }
  const CacheStats s = cache.stats();
  std::cout << json{{"entries", s.entries}, {"bytes", s.bytes}}.dump() << "\n";
  return kOk;
}

struct ExportArgs {
  BackendArgs backend;
  DataArgs data;
  std::string out;
  int sample = 0;
  unsigned seed = 0;
  bool force = false;
};

int cmd_export(const ExportArgs& a) {
  refuse_overwrite(a.out, a.force);
  auto records = load_records(a.data);
  if (a.sample > 0 && static_cast<std::size_t>(a.sample) < records.size()) {
    std::mt19937 rng(a.seed);
    std::vector<SourceRecord> picked;
    std::sample(records.begin(), records.end(), std::back_inserter(picked), a.sample, rng);
    records = std::move(picked);
  }
  auto backend = make_backend(a.backend);
  SegmentConfig sc;
  sc.generation = generation_of(a.backend);
  std::ostringstream lines;
  for (const auto& r : records) {
    CallTrace trace;
    const SegmentationOutput seg = segment(r.sentence, Origin::sentence(), *backend, sc, trace);
    json edus = json::array();
    for (const auto& e : seg.edus) edus.push_back(e.text());
    json line{{"id", r.id}, {"text", r.sentence}, {"edus", edus}, {"integrity", nullptr}, {"coherence", nullptr}};
    lines << line.dump() << "\n";
  }
  write_file(a.out, lines.str());
  std::cerr << "wrote " << records.size() << " records to " << a.out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discourse-guided sentence decontextualisation"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Decontextualise every record of a dataset");
  add_backend_flags(run_cmd, run.backend);
  add_data_flags(run_cmd, run.data);
  run_cmd->add_option("--limit", run.data.limit, "Process only the first K records");
  run_cmd->add_option("--demos-file", run.demos_file, "Demonstrations JSONL");
  run_cmd->add_option("--demos-per-stage", run.demos_per_stage, "Demonstrations per prompt")->capture_default_str();
  run_cmd->add_option("--mode", run.mode, "Pipeline or single-call baseline")
      ->check(CLI::IsMember({"ecsp", "vanilla"}))
      ->capture_default_str();
  run_cmd->add_option("--selection", run.selection, "One SELECT call, or one per ambiguous EDU")
      ->check(CLI::IsMember({"batched", "per-ambiguous"}))
      ->capture_default_str();
  run_cmd->add_option("--seg-calls", run.seg_calls, "Segment sentence and context together or apart")
      ->check(CLI::IsMember({"unified", "split"}))
      ->capture_default_str();
  run_cmd->add_option("--parallel", run.parallel, "Records in flight")->capture_default_str();
  run_cmd->add_flag("--no-gain-filter", run.no_gain_filter, "Keep relevant EDUs of any relation");
  run_cmd->add_flag("--resume", run.resume, "Skip records already in --out");
  run_cmd->add_flag("--force", run.force, "Overwrite an existing --out");
  run_cmd->add_flag("--timings", run.timings, "Include wall_time_ms in results");
  run_cmd->add_option("--out", run.out, "Results JSONL")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score results against gold rewrites");
  add_data_flags(eval_cmd, ev.data);
  eval_cmd->add_option("--results", ev.results, "Results JSONL")->required();
  eval_cmd->add_option("--out", ev.out_prefix, "Write <prefix>.json, <prefix>.csv and <prefix>.md");
  eval_cmd->add_option("--metrics", ev.metrics, "Subset of metrics")->delimiter(',');
  eval_cmd->add_option("--embedding", ev.embedding, "Provider for the BERTScore column")
      ->check(CLI::IsMember({"none", "hash"}))
      ->capture_default_str();
  eval_cmd->add_option("--system", ev.system, "Row label in the markdown table");
  eval_cmd->add_flag("--force", ev.force, "Overwrite existing reports");

  DataArgs st;
  std::string stats_out;
  bool stats_force = false;
  auto* stats_cmd = app.add_subcommand("stats", "Dataset descriptive statistics");
  add_data_flags(stats_cmd, st);
  stats_cmd->add_option("--out", stats_out, "Also write the JSON here");
  stats_cmd->add_flag("--force", stats_force, "Overwrite --out");

  std::string cache_dir;
  auto* cache_cmd = app.add_subcommand("cache", "Inspect or clear a response cache");
  cache_cmd->require_subcommand(1);
  auto* inspect_cmd = cache_cmd->add_subcommand("inspect", "Entry count and size");
  auto* clear_cmd = cache_cmd->add_subcommand("clear", "Remove all entries");
  for (auto* c : {inspect_cmd, clear_cmd}) c->add_option("--cache-dir", cache_dir, "Cache directory")->required();

  ExportArgs ex;
  auto* export_cmd = app.add_subcommand("export-annotations", "Segmentations for human integrity/coherence rating");
  add_backend_flags(export_cmd, ex.backend);
  add_data_flags(export_cmd, ex.data);
  export_cmd->add_option("--sample", ex.sample, "Number of records to sample (0 = all)");
  export_cmd->add_option("--seed", ex.seed, "Sampling seed")->capture_default_str();
  export_cmd->add_option("--out", ex.out, "Annotation JSONL")->required();
  export_cmd->add_flag("--force", ex.force, "Overwrite --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*eval_cmd) return cmd_eval(ev);
    if (*stats_cmd) return cmd_stats(st, stats_out, stats_force);
    if (*inspect_cmd) return cmd_cache("inspect", cache_dir);
    if (*clear_cmd) return cmd_cache("clear", cache_dir);
    if (*export_cmd) return cmd_export(ex);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const EmptyDataset& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const BackendError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFatal;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
  return kOk;
}
