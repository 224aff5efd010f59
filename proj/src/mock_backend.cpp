#include "ecsp/mock_backend.hpp"

#include <cctype>
#include <regex>
#include <set>

#include <nlohmann/json.hpp>

#include "ecsp/dataset.hpp"
#include "ecsp/metrics.hpp"
#include "ecsp/prompting.hpp"
#include "ecsp/segmenter.hpp"
#include "ecsp/text.hpp"

namespace ecsp {

namespace {

const std::set<std::string>& pronouns() {
  static const std::set<std::string> s{"he",  "she", "it",     "they",    "him",     "her",    "them",
                                       "his", "its", "their",  "hers",    "theirs",  "himself", "herself",
                                       "itself", "themselves"};
  return s;
}

// Pronouns DECONTEXT replaces; plural and reflexive ones are left alone.
const std::set<std::string>& substitutable() {
  static const std::set<std::string> s{"he", "she", "it", "him", "her", "his", "its", "hers"};
  return s;
}

const std::set<std::string>& possessives() {
  static const std::set<std::string> s{"his", "its", "their"};
  return s;
}

const std::set<std::string>& deictics() {
  static const std::set<std::string> s{"this", "these", "those"};
  return s;
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> s{
      "the",   "and",   "for",   "with",  "from",  "that",  "this",  "these", "those", "which", "who",   "whom",
      "whose", "was",   "were",  "are",   "been",  "being", "have",  "has",   "had",   "not",   "but",   "his",
      "her",   "hers",  "its",   "their", "they",  "them",  "she",   "him",   "into",  "onto",  "over",  "under",
      "also",  "than",  "then",  "there", "here",  "when",  "while", "after", "before", "until", "since", "about",
      "most",  "more",  "some",  "such",  "only",  "other", "both",  "each",  "all",   "any",   "can",   "could",
      "will",  "would", "should", "may",  "might", "must",  "did",   "does",  "out",   "off",   "one",   "two",
      "our",   "you",   "your",  "what",  "where", "how",   "why",   "very",  "just",  "many",  "much",  "own"};
  return s;
}

const std::set<std::string>& np_blockers() {
  static const std::set<std::string> s{"it",    "this",  "these", "those",  "there", "in",    "on",   "at",
                                       "during", "after", "before", "when",  "while", "although", "but", "and",
                                       "or",    "who",   "which", "that",   "a",     "an",    "as",   "by",
                                       "for",   "from",  "with",  "however", "later", "since", "until", "if"};
  return s;
}

const std::set<std::string>& non_nouns_after_her() {
  static const std::set<std::string> s{"and", "or", "but", "to", "in", "on", "at", "for", "with", "from",
                                       "by",  "as", "that", "into", "about", "after", "before", "again", "back"};
  return s;
}

std::string core_of(const std::string& raw, std::size_t* lead = nullptr, std::size_t* tail = nullptr) {
  std::size_t b = 0;
  std::size_t e = raw.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(raw[e - 1]))) --e;
  if (lead) *lead = b;
  if (tail) *tail = raw.size() - e;
  return raw.substr(b, e - b);
}

std::string lower(const std::string& s) { return utf8_lower(s); }

bool capitalized(const std::string& core) {
  if (core.empty()) return false;
  const unsigned char c = static_cast<unsigned char>(core[0]);
  if (std::isupper(c)) return true;
  if (c >= 0x80) {
    char32_t cp;
    utf8_decode(core, 0, cp);
    std::string one;
    utf8_append(one, cp);
    return utf8_lower(one) != one;
  }
  return false;
}

bool has_word(const std::string& text, const std::set<std::string>& words) {
  for (const auto& raw : split_whitespace(text)) {
    if (words.count(lower(core_of(raw)))) return true;
  }
  return false;
}

std::set<std::string> content_stems(const std::string& text) {
  std::set<std::string> out;
  for (const auto& t : tokenize(text)) {
    if (is_punctuation_token(t) || t.size() < 3 || stopwords().count(t)) continue;
    out.insert(porter_stem(t));
  }
  return out;
}

std::vector<std::string> stems_of(const std::vector<std::string>& raw_words) {
  std::vector<std::string> out;
  for (const auto& w : raw_words) out.push_back(porter_stem(lower(core_of(w))));
  return out;
}

// "the X" with X lowercase, not followed by "of", and X unseen earlier.
bool unresolved_definite(const std::string& edu, const std::vector<std::string>& earlier_words) {
  const auto words = split_whitespace(edu);
  std::vector<std::string> seen = stems_of(earlier_words);
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string c = lower(core_of(words[i]));
    if (c == "the" && i + 1 < words.size()) {
      const std::string x = core_of(words[i + 1]);
      const bool followed_by_of = i + 2 < words.size() && lower(core_of(words[i + 2])) == "of";
      if (!x.empty() && std::islower(static_cast<unsigned char>(x[0])) && !followed_by_of) {
        const std::string stem = porter_stem(lower(x));
        if (std::find(seen.begin(), seen.end(), stem) == seen.end()) return true;
      }
    }
    seen.push_back(porter_stem(c));
  }
  return false;
}

std::optional<std::string> head_np(const std::string& edu) {
  const auto words = split_whitespace(edu);
  if (words.empty()) return std::nullopt;
  std::size_t i = 0;
  std::vector<std::string> run;
  const std::string first = lower(core_of(words[0]));
  if (pronouns().count(first) || np_blockers().count(first)) return std::nullopt;
  if (first == "the") {
    if (words.size() < 2 || !capitalized(core_of(words[1]))) return std::nullopt;
    run.push_back(core_of(words[0]));
    i = 1;
  }
  for (; i < words.size(); ++i) {
    std::size_t lead = 0, tail = 0;
    const std::string c = core_of(words[i], &lead, &tail);
    if (!capitalized(c) || lead > 0) break;
    run.push_back(c);
    if (tail > 0) break;
  }
  if (run.empty() || (run.size() == 1 && lower(run[0]) == "the")) return std::nullopt;
  std::string np;
  for (const auto& w : run) np += (np.empty() ? "" : " ") + w;
  return np;
}

bool temporal(const std::string& edu) {
  static const std::regex year(R"(\b(1[0-9]{3}|20[0-9]{2})\b)");
  static const std::set<std::string> words{"until", "before", "after", "during", "since", "when",    "while",
                                           "later", "earlier", "january", "february", "march", "april", "may",
                                           "june",  "july",    "august",  "september", "october", "november",
                                           "december"};
  return std::regex_search(edu, year) || has_word(edu, words);
}

std::string substitute(const std::string& edu, const std::string& np, bool at_sentence_start) {
  auto words = split_whitespace(edu);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::size_t lead = 0, tail = 0;
    const std::string& raw = words[i];
    const std::string core = core_of(raw, &lead, &tail);
    const std::string lc = lower(core);
    std::string replaced = raw;
    if (substitutable().count(lc)) {
      std::string name = np;
      if (!(i == 0 && at_sentence_start) && name.rfind("The ", 0) == 0) name[0] = 't';
      bool possessive = possessives().count(lc) > 0;
      if (lc == "her" && tail == 0 && i + 1 < words.size()) {
        const std::string next = lower(core_of(words[i + 1]));
        possessive = !next.empty() && std::isalpha(static_cast<unsigned char>(next[0])) &&
                     !non_nouns_after_her().count(next);
      }
      if (possessive) name += "'s";
      replaced = raw.substr(0, lead) + name + raw.substr(raw.size() - tail);
    }
    if (!out.empty()) out += ' ';
    out += replaced;
  }
  return out;
}

nlohmann::json parse_object(const std::string& raw_inner) {
  try {
    auto j = nlohmann::json::parse("{" + raw_inner + "}");
    if (j.is_object()) return j;
  } catch (const nlohmann::json::exception&) {
  }
  return nlohmann::json::object();
}

std::string mock_segment(const std::map<std::string, std::string>& fields) {
  std::vector<std::string> edus;
  for (const auto& sentence : split_sentences(fields.at("Sentence"))) {
    for (auto& e : rule_segment(sentence)) edus.push_back(std::move(e));
  }
  return format_list(edus);
}

std::string mock_ambiguity(const std::map<std::string, std::string>& fields) {
  const std::string sentence = fields.at("Sentence");
  const auto edus = parse_list_value(fields.at("EDUs"));
  std::vector<std::string> flagged;
  std::size_t cursor = 0;
  for (const auto& edu : edus) {
    const auto pos = sentence.find(edu, cursor);
    std::vector<std::string> earlier;
    if (pos != std::string::npos) {
      earlier = split_whitespace(sentence.substr(0, pos));
      cursor = pos + edu.size();
    }
    if (has_word(edu, pronouns()) || has_word(edu, deictics()) || unresolved_definite(edu, earlier)) {
      flagged.push_back(edu);
    }
  }
  return format_list(flagged);
}

std::string mock_select(const std::map<std::string, std::string>& fields) {
  const auto context_edus = parse_list_value(fields.at("EDUs in Paragraph"));
  const std::string sentence = fields.at("Sentence");
  const auto ambiguous = parse_object(fields.at("Ambiguous EDUs in Sentence"));
  const auto sentence_stems = content_stems(sentence);

  std::optional<std::size_t> entity;
  for (std::size_t i = 0; i < context_edus.size(); ++i) {
    if (head_np(context_edus[i])) {
      entity = i;
      break;
    }
  }
  std::vector<std::size_t> sharing;
  for (std::size_t i = 0; i < context_edus.size(); ++i) {
    const auto stems = content_stems(context_edus[i]);
    const bool shares = std::any_of(stems.begin(), stems.end(), [&](const auto& s) { return sentence_stems.count(s); });
    if (shares) sharing.push_back(i);
  }

  std::vector<std::vector<std::string>> groups;
  for (const auto& [label, value] : ambiguous.items()) {
    const std::string edu = value.is_string() ? value.get<std::string>() : value.dump();
    std::vector<std::string> group;
    const bool pronominal = has_word(edu, pronouns());
    if (pronominal && entity) group.push_back(context_edus[*entity] + " (Background)");
    for (const std::size_t i : sharing) {
      if (pronominal && entity && i == *entity) continue;
      group.push_back(context_edus[i] + (temporal(context_edus[i]) ? " (Temporal)" : " (Elaboration)"));
    }
    groups.push_back(std::move(group));
  }
  return format_groups(groups);
}

std::string mock_decontext(const std::map<std::string, std::string>& fields) {
  std::string sentence = fields.at("Sentence");
  const auto ambiguous = parse_object(fields.at("Ambiguous EDUs in Sentence"));
  const auto relevant = parse_object(fields.at("EDUs relevant to the sentence"));
  for (const auto& [label, value] : ambiguous.items()) {
    if (!value.is_string()) continue;
    const std::string edu = value.get<std::string>();
    std::optional<std::string> np;
    if (relevant.contains(label) && relevant.at(label).is_array()) {
      for (const auto& item : relevant.at(label)) {
        if (!item.is_string()) continue;
        np = head_np(split_relation_annotation(item.get<std::string>()).text);
        if (np) break;
      }
    }
    if (!np) continue;
    const auto pos = sentence.find(edu);
    if (pos == std::string::npos) continue;
    sentence.replace(pos, edu.size(), substitute(edu, *np, pos == 0));
  }
  // Temporal relevant EDUs that open with a lowercase connective (clause
  // fragments, not whole sentences) are appended as a trailing adjunct.
  static const std::set<std::string> connectives{"until", "after", "before", "since", "during", "when"};
  std::set<std::string> appended;
  for (const auto& [label, group] : relevant.items()) {
    if (!group.is_array()) continue;
    for (const auto& item : group) {
      if (!item.is_string()) continue;
      const RelevantItem r = split_relation_annotation(item.get<std::string>());
      if (!r.relation || r.relation->coarse != Coarse::Temporal) continue;
      const auto words = split_whitespace(r.text);
      if (words.empty() || !connectives.count(core_of(words[0]))) continue;
      std::string adjunct = trim(r.text);
      while (!adjunct.empty() && std::string(".,;:!?").find(adjunct.back()) != std::string::npos) adjunct.pop_back();
      if (adjunct.empty() || sentence.find(adjunct) != std::string::npos || !appended.insert(adjunct).second) continue;
      std::string end;
      while (!sentence.empty() && std::string(".!?").find(sentence.back()) != std::string::npos) {
        end.insert(end.begin(), sentence.back());
        sentence.pop_back();
      }
      sentence += ", " + adjunct + (end.empty() ? "." : end);
    }
  }
  return sentence;
}

}  // namespace

std::string mock_complete(const CompletionRequest& request) {
  std::map<std::string, std::string> fields;
  try {
    fields = extract_input_fields(request.kind, request.prompt);
  } catch (const std::exception&) {
    return "";
  }
  switch (request.kind) {
    case PromptKind::Segment: return mock_segment(fields);
    case PromptKind::Ambiguity: return mock_ambiguity(fields);
    case PromptKind::Select: return mock_select(fields);
    case PromptKind::Decontext: return mock_decontext(fields);
    case PromptKind::Vanilla: return fields.at("Sentence");
  }
  return "";
}

CompletionResponse MockBackend::complete(const CompletionRequest& request) {
  request.validate();
  CompletionResponse response;
  response.text = mock_complete(request);
  return response;
}

}  // namespace ecsp
