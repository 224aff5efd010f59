#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ecsp {

/// Coarse discourse relation categories (SciDTB-style inventory).
enum class Coarse {
  Root,
  Attribution,
  Background,
  CauseEffect,
  Comparison,
  Condition,
  Contrast,
  Elaboration,
  Enablement,
  Evaluation,
  Explain,
  Joint,
  MannerMeans,
  Progression,
  SameUnit,
  Summary,
  Temporal,
};

inline constexpr std::array<Coarse, 17> kAllCoarse = {
    Coarse::Root,        Coarse::Attribution, Coarse::Background,  Coarse::CauseEffect, Coarse::Comparison,
    Coarse::Condition,   Coarse::Contrast,    Coarse::Elaboration, Coarse::Enablement,  Coarse::Evaluation,
    Coarse::Explain,     Coarse::Joint,       Coarse::MannerMeans, Coarse::Progression, Coarse::SameUnit,
    Coarse::Summary,     Coarse::Temporal,
};

/// Display name, e.g. "Cause-effect".
std::string_view coarse_name(Coarse c);

struct RelationLabel {
  Coarse coarse = Coarse::Root;
  std::optional<std::string> fine;

  std::string display() const;
  friend bool operator==(const RelationLabel&, const RelationLabel&) = default;
};

/// True when adding the related content helps a reader resolve the sentence
/// out of context: Background, Cause-effect, Condition, Contrast,
/// Elaboration, Explain and Temporal.
bool gain_flag(Coarse c);
inline bool gain_flag(const RelationLabel& label) { return gain_flag(label.coarse); }

class UnknownRelation : public std::runtime_error {
 public:
  explicit UnknownRelation(std::string raw)
      : std::runtime_error("unknown discourse relation: '" + raw + "'"), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

/// Matches coarse names first, then fine names, ignoring case, spaces,
/// hyphens and underscores. A fine-name match keeps the fine name.
/// Throws UnknownRelation.
RelationLabel parse_relation_label(std::string_view raw);

/// Non-throwing variant.
std::optional<RelationLabel> try_parse_relation_label(std::string_view raw);

}  // namespace ecsp
