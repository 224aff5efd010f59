#include "ecsp/types.hpp"

#include <algorithm>

#include "ecsp/text.hpp"

namespace ecsp {

void SourceRecord::validate() const {
  if (trim(sentence).empty()) throw InvariantViolation("record '" + id + "': empty sentence");
  for (std::size_t i = 0; i < context.size(); ++i) {
    if (trim(context[i]).empty()) {
      throw InvariantViolation("record '" + id + "': empty context entry " + std::to_string(i));
    }
  }
}

Edu::Edu(std::string text, std::size_t ordinal, Origin origin, std::optional<Span> span)
    : text_(std::move(text)), ordinal_(ordinal), origin_(origin), span_(span) {
  if (trim(text_).empty()) throw InvariantViolation("EDU text is empty");
  if (span_ && span_->start >= span_->end) throw InvariantViolation("EDU span is empty or reversed");
}

void Edu::check_bounds(std::size_t origin_length) const {
  if (span_ && span_->end > origin_length) {
    throw InvariantViolation("EDU span [" + std::to_string(span_->start) + ", " + std::to_string(span_->end) +
                             ") exceeds origin length " + std::to_string(origin_length));
  }
}

DiscoursePair::DiscoursePair(Edu dom, RelationLabel rel, Edu sub)
    : dominant(std::move(dom)), relation(std::move(rel)), subordinate(std::move(sub)) {
  if (dominant == subordinate) throw InvariantViolation("dominant and subordinate EDU are the same unit");
}

ContentSelection::ContentSelection(std::vector<Edu> edus_sentence, std::vector<Edu> edus_context,
                                   std::vector<AmbiguousEdu> ambiguous, int calls_used, bool gain_filtered)
    : edus_sentence_(std::move(edus_sentence)),
      edus_context_(std::move(edus_context)),
      ambiguous_(std::move(ambiguous)),
      calls_used_(calls_used),
      gain_filtered_(gain_filtered) {
  auto member = [](const std::vector<Edu>& pool, const Edu& e) {
    return std::find(pool.begin(), pool.end(), e) != pool.end();
  };
  for (std::size_t i = 0; i < ambiguous_.size(); ++i) {
    const auto& amb = ambiguous_[i];
    if (!member(edus_sentence_, amb.edu)) {
      throw InvariantViolation("ambiguous EDU is not a sentence EDU: " + amb.edu.text());
    }
    if (i > 0 && ambiguous_[i - 1].edu.ordinal() >= amb.edu.ordinal()) {
      throw InvariantViolation("ambiguous EDUs are not in sentence order");
    }
    for (const auto& rel : amb.relevant) {
      if (!member(edus_context_, rel.edu)) {
        throw InvariantViolation("relevant EDU is not a context EDU: " + rel.edu.text());
      }
      if (gain_filtered_ && rel.relation && !gain_flag(*rel.relation)) {
        throw InvariantViolation("relevant EDU carries non-gain relation " + rel.relation->display());
      }
    }
  }
}

std::vector<DiscoursePair> ContentSelection::discourse_pairs() const {
  std::vector<DiscoursePair> out;
  for (const auto& amb : ambiguous_) {
    for (const auto& rel : amb.relevant) {
      if (rel.relation) out.emplace_back(rel.edu, *rel.relation, amb.edu);
    }
  }
  return out;
}

std::string status_name(Status s) {
  switch (s) {
    case Status::Decontextualised: return "DECONTEXTUALISED";
    case Status::UnchangedNoAmbiguity: return "UNCHANGED_NO_AMBIGUITY";
    case Status::Infeasible: return "INFEASIBLE";
    case Status::Error: return "ERROR";
  }
  return "ERROR";
}

Status status_from_name(const std::string& name) {
  for (Status s : {Status::Decontextualised, Status::UnchangedNoAmbiguity, Status::Infeasible, Status::Error}) {
    if (status_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown status: " + name);
}

bool same_text(const std::string& a, const std::string& b) { return normalize_text(a) == normalize_text(b); }

void DecontextResult::check_invariants(const std::string& original_sentence) const {
  if (status == Status::Decontextualised && same_text(rewritten, original_sentence)) {
    throw InvariantViolation("DECONTEXTUALISED result equals the original sentence");
  }
  if (status == Status::UnchangedNoAmbiguity) {
    if (selection && !selection->ambiguous().empty()) {
      throw InvariantViolation("UNCHANGED_NO_AMBIGUITY result has ambiguous EDUs");
    }
    if (rewritten != original_sentence) {
      throw InvariantViolation("UNCHANGED_NO_AMBIGUITY result differs from the original sentence");
    }
  }
}

json to_json(const Edu& edu) {
  json j;
  j["text"] = edu.text();
  j["ordinal"] = edu.ordinal();
  if (edu.origin().kind == OriginKind::Sentence) {
    j["origin"] = "sentence";
  } else {
    j["origin"] = "context";
    j["sentence_index"] = edu.origin().sentence_index;
  }
  j["span"] = edu.span() ? json::array({edu.span()->start, edu.span()->end}) : json(nullptr);
  j["aligned"] = edu.aligned();
  return j;
}

Edu edu_from_json(const json& j) {
  const Origin origin = j.at("origin").get<std::string>() == "sentence"
                            ? Origin::sentence()
                            : Origin::context(j.at("sentence_index").get<std::size_t>());
  std::optional<Span> span;
  if (j.contains("span") && !j["span"].is_null()) {
    span = Span{j["span"][0].get<std::size_t>(), j["span"][1].get<std::size_t>()};
  }
  return Edu(j.at("text").get<std::string>(), j.at("ordinal").get<std::size_t>(), origin, span);
}

json to_json(const RelationLabel& label) {
  json j;
  j["coarse"] = std::string(coarse_name(label.coarse));
  j["fine"] = label.fine ? json(*label.fine) : json(nullptr);
  return j;
}

RelationLabel relation_from_json(const json& j) {
  RelationLabel label = parse_relation_label(j.at("coarse").get<std::string>());
  if (j.contains("fine") && !j["fine"].is_null()) label.fine = j["fine"].get<std::string>();
  return label;
}

json to_json(const ContentSelection& sel) {
  json j;
  j["edus_sentence"] = json::array();
  for (const auto& e : sel.edus_sentence()) j["edus_sentence"].push_back(to_json(e));
  j["edus_context"] = json::array();
  for (const auto& e : sel.edus_context()) j["edus_context"].push_back(to_json(e));
  j["ambiguous"] = json::array();
  for (const auto& amb : sel.ambiguous()) {
    json a;
    a["edu"] = to_json(amb.edu);
    a["relevant"] = json::array();
    for (const auto& rel : amb.relevant) {
      json r;
      r["edu"] = to_json(rel.edu);
      r["relation"] = rel.relation ? to_json(*rel.relation) : json(nullptr);
      a["relevant"].push_back(r);
    }
    j["ambiguous"].push_back(a);
  }
  j["calls_used"] = sel.calls_used();
  j["gain_filtered"] = sel.gain_filtered();
  return j;
}

ContentSelection selection_from_json(const json& j) {
  std::vector<Edu> sentence;
  for (const auto& e : j.at("edus_sentence")) sentence.push_back(edu_from_json(e));
  std::vector<Edu> context;
  for (const auto& e : j.at("edus_context")) context.push_back(edu_from_json(e));
  std::vector<AmbiguousEdu> ambiguous;
  for (const auto& a : j.at("ambiguous")) {
    AmbiguousEdu amb{edu_from_json(a.at("edu")), {}};
    for (const auto& r : a.at("relevant")) {
      std::optional<RelationLabel> label;
      if (r.contains("relation") && !r.at("relation").is_null()) label = relation_from_json(r.at("relation"));
      amb.relevant.push_back({edu_from_json(r.at("edu")), label});
    }
    ambiguous.push_back(std::move(amb));
  }
  return ContentSelection(std::move(sentence), std::move(context), std::move(ambiguous),
                          j.value("calls_used", 0), j.value("gain_filtered", true));
}

json to_json(const DecontextResult& result, bool include_timing) {
  json j;
  j["record_id"] = result.record_id;
  j["rewritten"] = result.rewritten;
  j["status"] = status_name(result.status);
  j["selection"] = result.selection ? to_json(*result.selection) : json(nullptr);
  json prov;
  prov["backend_id"] = result.provenance.backend_id;
  prov["prompt_digests"] = result.provenance.prompt_digests;
  prov["backend_calls"] = result.provenance.backend_calls;
  prov["cache_hits"] = result.provenance.cache_hits;
  prov["degraded_segmentation"] = result.provenance.degraded_segmentation;
  prov["repairs"] = result.provenance.repairs;
  if (include_timing) prov["wall_time_ms"] = result.provenance.wall_time_ms;
  j["provenance"] = prov;
  j["error"] = result.error ? json(*result.error) : json(nullptr);
  j["warnings"] = result.warnings;
  return j;
}

DecontextResult result_from_json(const json& j) {
  DecontextResult r;
  r.record_id = j.at("record_id").get<std::string>();
  r.rewritten = j.at("rewritten").get<std::string>();
  r.status = status_from_name(j.at("status").get<std::string>());
  if (j.contains("selection") && !j["selection"].is_null()) r.selection = selection_from_json(j["selection"]);
  if (j.contains("provenance")) {
    const auto& p = j["provenance"];
    r.provenance.backend_id = p.value("backend_id", "");
    r.provenance.prompt_digests = p.value("prompt_digests", std::vector<std::string>{});
    r.provenance.backend_calls = p.value("backend_calls", 0);
    r.provenance.cache_hits = p.value("cache_hits", 0);
    r.provenance.degraded_segmentation = p.value("degraded_segmentation", false);
    r.provenance.repairs = p.value("repairs", 0);
    r.provenance.wall_time_ms = p.value("wall_time_ms", std::int64_t{0});
  }
  if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

json to_json(const SourceRecord& record) {
  json j;
  j["id"] = record.id;
  j["sentence"] = record.sentence;
  j["context"] = record.context;
  if (record.gold) j["decontextualised"] = *record.gold;
  if (!record.meta.empty()) j["meta"] = record.meta;
  return j;
}

}  // namespace ecsp
