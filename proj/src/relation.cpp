#include "ecsp/relation.hpp"

#include <cctype>

#include "ecsp/text.hpp"

namespace ecsp {

namespace {

struct CoarseEntry {
  Coarse coarse;
  std::string_view name;
  bool gain;
};

constexpr std::array<CoarseEntry, 17> kCoarse = {{
    {Coarse::Root, "Root", false},
    {Coarse::Attribution, "Attribution", false},
    {Coarse::Background, "Background", true},
    {Coarse::CauseEffect, "Cause-effect", true},
    {Coarse::Comparison, "Comparison", false},
    {Coarse::Condition, "Condition", true},
    {Coarse::Contrast, "Contrast", true},
    {Coarse::Elaboration, "Elaboration", true},
    {Coarse::Enablement, "Enablement", false},
    {Coarse::Evaluation, "Evaluation", false},
    {Coarse::Explain, "Explain", true},
    {Coarse::Joint, "Joint", false},
    {Coarse::MannerMeans, "Manner-means", false},
    {Coarse::Progression, "Progression", false},
    {Coarse::SameUnit, "Same-unit", false},
    {Coarse::Summary, "Summary", false},
    {Coarse::Temporal, "Temporal", true},
}};

struct FineEntry {
  std::string_view name;
  Coarse coarse;
};

// Fine names that differ from their coarse name.
constexpr std::array<FineEntry, 10> kFine = {{
    {"General", Coarse::Background},
    {"Related", Coarse::Background},
    {"Cause Result", Coarse::CauseEffect},
    {"Cause", Coarse::CauseEffect},
    {"Result", Coarse::CauseEffect},
    {"Addition", Coarse::Elaboration},
    {"Definition", Coarse::Elaboration},
    {"Evidence", Coarse::Explain},
    {"Reason", Coarse::Explain},
    {"Coordination", Coarse::Joint},
}};

std::string match_key(std::string_view s) {
  std::string out;
  for (char c : utf8_lower(normalize_text(s))) {
    if (c == ' ' || c == '-' || c == '_') continue;
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string_view coarse_name(Coarse c) { return kCoarse[static_cast<std::size_t>(c)].name; }

bool gain_flag(Coarse c) { return kCoarse[static_cast<std::size_t>(c)].gain; }

std::string RelationLabel::display() const {
  std::string out(coarse_name(coarse));
  if (fine) out += " (" + *fine + ")";
  return out;
}

std::optional<RelationLabel> try_parse_relation_label(std::string_view raw) {
  const std::string key = match_key(raw);
  if (key.empty()) return std::nullopt;
  for (const auto& entry : kCoarse) {
    if (match_key(entry.name) == key) return RelationLabel{entry.coarse, std::nullopt};
  }
  for (const auto& entry : kFine) {
    if (match_key(entry.name) == key) return RelationLabel{entry.coarse, std::string(entry.name)};
  }
  return std::nullopt;
}

RelationLabel parse_relation_label(std::string_view raw) {
  if (auto label = try_parse_relation_label(raw)) return *label;
  throw UnknownRelation(std::string(raw));
}

}  // namespace ecsp
