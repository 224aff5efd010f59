#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ecsp/dataset.hpp"
#include "ecsp/metrics.hpp"
#include "ecsp/mock_backend.hpp"
#include "ecsp/pipeline.hpp"
#include "ecsp/prompting.hpp"
#include "ecsp/relation.hpp"
#include "ecsp/segmenter.hpp"
#include "ecsp/text.hpp"

namespace py = pybind11;
using namespace ecsp;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& obj) {
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

PromptKind kind_of(const std::string& name) {
  for (auto k : {PromptKind::Segment, PromptKind::Ambiguity, PromptKind::Select, PromptKind::Decontext,
                 PromptKind::Vanilla}) {
    if (kind_name(k) == name) return k;
  }
  throw py::value_error("unknown prompt kind: " + name);
}

SourceRecord record_of(const py::dict& d) {
  const auto parsed = parse_dataset(from_py(d).dump());
  if (!parsed.errors.empty()) throw py::value_error(parsed.errors.front().reason);
  return parsed.records.at(0);
}

// `backend` is "mock" or a callable (kind: str, prompt: str) -> str.
BackendPtr backend_of(const py::object& backend) {
  if (py::isinstance<py::str>(backend)) {
    if (backend.cast<std::string>() != "mock") throw py::value_error("only the 'mock' backend is built in");
    return std::make_shared<MockBackend>();
  }
  if (!PyCallable_Check(backend.ptr())) throw py::type_error("backend must be 'mock' or a callable");
  // The callable may be released from a worker thread.
  std::shared_ptr<py::object> fn(new py::object(backend), [](py::object* o) {
    py::gil_scoped_acquire gil;
    delete o;
  });
  return std::make_shared<FunctionBackend>(
      [fn](const CompletionRequest& r) {
        py::gil_scoped_acquire gil;
        return (*fn)(kind_name(r.kind), r.prompt).cast<std::string>();
      },
      "python");
}

PipelineConfig config_of(const std::string& mode, const std::string& selection, const std::string& seg_calls,
                         bool gain_filter, const std::optional<std::string>& demos_file, int parallel) {
  PipelineConfig c;
  if (mode != "ecsp" && mode != "vanilla") throw py::value_error("mode must be 'ecsp' or 'vanilla'");
  if (selection != "batched" && selection != "per-ambiguous") throw py::value_error("bad selection mode");
  if (seg_calls != "unified" && seg_calls != "split") throw py::value_error("bad seg_calls");
  c.mode = mode == "vanilla" ? RunMode::Vanilla : RunMode::Ecsp;
  c.selection_mode = selection == "per-ambiguous" ? SelectionMode::PerAmbiguous : SelectionMode::Batched;
  c.segmentation_calls = seg_calls == "split" ? SegmentationCalls::Split : SegmentationCalls::Unified;
  c.apply_gain_filter = gain_filter;
  c.parallel_records = parallel;
  if (demos_file) c.demos = std::make_shared<const DemoStore>(DemoStore::load(*demos_file));
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_ecsp, m) {
  m.doc() = "Discourse-guided sentence decontextualisation";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<NoReferences>(m, "NoReferences", PyExc_ValueError);
  py::register_exception<BackendError>(m, "BackendError", PyExc_RuntimeError);

  m.def("normalize_text", [](const std::string& s) { return normalize_text(s); });
  m.def("tokenize", [](const std::string& s) { return tokenize(s); });
  m.def("porter_stem", [](const std::string& s) { return porter_stem(s); });

  m.def("relations", [] {
    std::vector<std::pair<std::string, bool>> out;
    for (auto c : kAllCoarse) out.emplace_back(std::string(coarse_name(c)), gain_flag(c));
    return out;
  }, "(name, gain_flag) for each coarse relation");

  m.def("rule_segment", [](const std::string& s) { return rule_segment(s); }, py::arg("text"));
  m.def("parse_edu_list", [](const std::string& s) { return parse_edu_list(s).items; }, py::arg("response"));
  m.def("parse_rewrite", [](const std::string& s) { return parse_rewrite(s); });
  m.def("mock_complete", [](const std::string& kind, const std::string& prompt) {
    CompletionRequest r;
    r.kind = kind_of(kind);
    r.prompt = prompt;
    return mock_complete(r);
  }, py::arg("kind"), py::arg("prompt"));

  m.def("sari", [](const std::string& src, const std::string& cand, const std::vector<std::string>& refs) {
    return sari(src, cand, refs);
  }, py::arg("source"), py::arg("candidate"), py::arg("references"));
  m.def("chrf", [](const std::string& c, const std::string& r) { return chrf(c, r); });
  m.def("bleu", [](const std::string& c, const std::vector<std::string>& refs, bool smooth) {
    return bleu(c, refs, 4, smooth);
  }, py::arg("candidate"), py::arg("references"), py::arg("smooth") = true);
  m.def("corpus_bleu", [](const std::vector<std::string>& c, const std::vector<std::vector<std::string>>& r) {
    return corpus_bleu(c, r);
  });
  m.def("rouge_l", [](const std::string& c, const std::string& r) { return rouge_l(c, r); });
  m.def("meteor", [](const std::string& c, const std::string& r) { return meteor(c, r); });
  m.def("metric_names", [] { return metric_names(); });

  m.def("load_dataset", [](const std::filesystem::path& path, const std::string& id_field,
                           const std::string& sentence_field, const std::string& context_field,
                           const std::string& gold_field) {
    const auto loaded = load_dataset(path, FieldMap{id_field, sentence_field, context_field, gold_field});
    py::list records;
    for (const auto& r : loaded.records) records.append(to_py(to_json(r)));
    std::vector<std::pair<std::size_t, std::string>> errors;
    for (const auto& e : loaded.errors) errors.emplace_back(e.line, e.reason);
    return py::make_tuple(records, errors);
  }, py::arg("path"), py::arg("id_field") = "id", py::arg("sentence_field") = "sentence",
     py::arg("context_field") = "context", py::arg("gold_field") = "decontextualised");

  m.def("dataset_stats", [](const py::list& records) {
    std::vector<SourceRecord> rs;
    for (const auto& r : records) rs.push_back(record_of(r.cast<py::dict>()));
    return to_py(compute_stats(rs).to_json());
  });
  m.def("added_words", [](const std::string& o, const std::string& r) { return added_words(o, r); });

  m.def("process_record", [](const py::dict& record, const py::object& backend, const std::string& mode,
                             const std::string& selection, const std::string& seg_calls, bool gain_filter,
                             const std::optional<std::string>& demos_file) {
    const SourceRecord rec = record_of(record);
    const PipelineConfig config = config_of(mode, selection, seg_calls, gain_filter, demos_file, 1);
    auto be = backend_of(backend);
    DecontextResult result;
    {
      py::gil_scoped_release release;
      result = process_record(rec, *be, config);
    }
    return to_py(to_json(result));
  }, py::arg("record"), py::arg("backend") = "mock", py::arg("mode") = "ecsp", py::arg("selection") = "batched",
     py::arg("seg_calls") = "unified", py::arg("gain_filter") = true, py::arg("demos_file") = py::none());

  m.def("run_dataset", [](const py::list& records, const py::object& backend, const std::optional<std::string>& out,
                          const std::string& mode, const std::string& selection, const std::string& seg_calls,
                          int parallel, bool resume, const std::optional<std::string>& demos_file) {
    std::vector<SourceRecord> rs;
    for (const auto& r : records) rs.push_back(record_of(r.cast<py::dict>()));
    const PipelineConfig config = config_of(mode, selection, seg_calls, true, demos_file, parallel);
    auto be = backend_of(backend);
    RunOptions options;
    if (out) options.out = *out;
    options.resume = resume;
    RunOutput output;
    {
      py::gil_scoped_release release;
      output = run_dataset(rs, config, *be, options);
    }
    py::list results;
    for (const auto& r : output.results) results.append(to_py(to_json(r)));
    return py::make_tuple(results, to_py(output.manifest.to_json()));
  }, py::arg("records"), py::arg("backend") = "mock", py::arg("out") = py::none(), py::arg("mode") = "ecsp",
     py::arg("selection") = "batched", py::arg("seg_calls") = "unified", py::arg("parallel") = 1,
     py::arg("resume") = false, py::arg("demos_file") = py::none());

  m.def("evaluate", [](const py::list& results, const py::list& records, const std::optional<std::vector<std::string>>& metrics,
                       bool hash_embedding) {
    std::vector<DecontextResult> res;
    for (const auto& r : results) res.push_back(result_from_json(from_py(r)));
    std::vector<SourceRecord> rs;
    for (const auto& r : records) rs.push_back(record_of(r.cast<py::dict>()));
    MetricConfig mc;
    if (metrics) mc.metrics = *metrics;
    if (hash_embedding) mc.provider = std::make_shared<HashEmbeddingProvider>();
    const MetricReport report = evaluate_corpus(res, rs, mc);
    py::dict out = to_py(report.to_json());
    out["markdown"] = report.to_markdown();
    return out;
  }, py::arg("results"), py::arg("records"), py::arg("metrics") = py::none(), py::arg("hash_embedding") = false);
}
