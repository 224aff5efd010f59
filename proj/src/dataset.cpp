#include "ecsp/dataset.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ecsp/metrics.hpp"
#include "ecsp/text.hpp"

namespace ecsp {

namespace {

const std::set<std::string>& abbreviations() {
  static const std::set<std::string> s{
      "mr",  "mrs", "ms",  "dr",  "st",  "jr",  "sr",   "prof", "inc", "ltd",  "co",   "corp", "vs",
      "etc", "no",  "mt",  "gen", "col", "lt",  "sgt",  "rev",  "gov", "sen",  "rep",  "capt", "fig",
      "jan", "feb", "mar", "apr", "jun", "jul", "aug",  "sep",  "sept", "oct", "nov", "dec",  "approx",
      "e.g", "i.e", "u.s", "u.k", "a.m", "p.m", "ph.d", "vol",  "ed",  "est"};
  return s;
}

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

// Word immediately before position `dot` (exclusive), lowercased, without
// leading punctuation.
std::string word_before(std::string_view text, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !std::isspace(static_cast<unsigned char>(text[b - 1]))) --b;
  std::string w(text.substr(b, dot - b));
  std::size_t k = 0;
  while (k < w.size() && (w[k] == '(' || w[k] == '"' || w[k] == '\'')) ++k;
  w = w.substr(k);
  for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return w;
}

bool starts_sentence(std::string_view text, std::size_t pos) {
  if (pos >= text.size()) return false;
  const unsigned char c = static_cast<unsigned char>(text[pos]);
  if (std::isupper(c) || std::isdigit(c) || c == '"' || c == '\'' || c == '(' || c == '[') return true;
  // Non-ASCII uppercase (Latin-1/Extended, Greek, Cyrillic) or curly quotes.
  if (c >= 0x80) {
    char32_t cp;
    utf8_decode(text, pos, cp);
    if (cp == U'“' || cp == U'‘') return true;
    std::string one;
    utf8_append(one, cp);
    return utf8_lower(one) != one;
  }
  return false;
}

std::string json_string_field(const json& obj, const std::string& key, bool& ok) {
  ok = false;
  if (!obj.contains(key)) return {};
  const auto& v = obj.at(key);
  if (v.is_string()) {
    ok = true;
    return v.get<std::string>();
  }
  if (v.is_number_integer()) {
    ok = true;
    return std::to_string(v.get<long long>());
  }
  return {};
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') {
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    while (end < text.size() && (text[end] == '.' || text[end] == '!' || text[end] == '?')) ++end;
    while (end < text.size() && is_closer(text[end])) ++end;
    std::size_t next = end;
    while (next < text.size() && std::isspace(static_cast<unsigned char>(text[next]))) ++next;
    bool split = next > end && starts_sentence(text, next);
    if (split && c == '.') {
      const std::string w = word_before(text, i);
      const bool initial = w.size() == 1 && std::isalpha(static_cast<unsigned char>(w[0]));
      if (initial || abbreviations().count(w)) split = false;
    }
    if (split) {
      const std::string piece = trim(text.substr(start, end - start));
      if (!piece.empty()) out.push_back(piece);
      start = next;
    }
    i = end;
  }
  const std::string tail = trim(text.substr(start));
  if (!tail.empty()) out.push_back(tail);
  return out;
}

LoadResult parse_dataset(std::string_view jsonl, const FieldMap& fields) {
  LoadResult result;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    const std::string line = trim(jsonl.substr(pos, nl - pos));
    ++line_no;
    pos = nl + 1;
    if (line.empty()) {
      if (nl == jsonl.size()) break;
      continue;
    }
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      result.errors.push_back({line_no, std::string("invalid JSON: ") + e.what()});
      continue;
    }
    if (!obj.is_object()) {
      result.errors.push_back({line_no, "line is not a JSON object"});
      continue;
    }
    SourceRecord rec;
    bool ok = false;
    rec.id = json_string_field(obj, fields.id_field, ok);
    if (!ok || rec.id.empty()) {
      result.errors.push_back({line_no, "missing or non-string \"" + fields.id_field + "\""});
      continue;
    }
    rec.sentence = json_string_field(obj, fields.sentence_field, ok);
    if (!ok) {
      result.errors.push_back({line_no, "missing or non-string \"" + fields.sentence_field + "\""});
      continue;
    }
    if (obj.contains(fields.context_field) && !obj.at(fields.context_field).is_null()) {
      const auto& ctx = obj.at(fields.context_field);
      if (ctx.is_string()) {
        rec.context = split_sentences(ctx.get<std::string>());
      } else if (ctx.is_array()) {
        bool bad = false;
        for (const auto& s : ctx) {
          if (!s.is_string()) {
            bad = true;
            break;
          }
          rec.context.push_back(s.get<std::string>());
        }
        if (bad) {
          result.errors.push_back({line_no, "context list holds a non-string entry"});
          continue;
        }
      } else {
        result.errors.push_back({line_no, "context must be a string or a list of strings"});
        continue;
      }
    }
    if (obj.contains(fields.gold_field) && !obj.at(fields.gold_field).is_null()) {
      const auto& g = obj.at(fields.gold_field);
      if (!g.is_string()) {
        result.errors.push_back({line_no, "\"" + fields.gold_field + "\" must be a string"});
        continue;
      }
      rec.gold = g.get<std::string>();
    }
    if (obj.contains("meta") && obj.at("meta").is_object()) {
      for (const auto& [k, v] : obj.at("meta").items()) {
        rec.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    try {
      rec.validate();
    } catch (const InvariantViolation& e) {
      result.errors.push_back({line_no, e.what()});
      continue;
    }
    if (!seen.insert(rec.id).second) {
      result.errors.push_back({line_no, "duplicate id \"" + rec.id + "\""});
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

LoadResult load_dataset(const std::filesystem::path& path, const FieldMap& fields) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), fields);
}

std::string dump_dataset(const std::vector<SourceRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<SourceRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << dump_dataset(records);
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  for (const auto& t : tokenize(text))
    if (!is_punctuation_token(t)) ++n;
  return n;
}

DatasetStats compute_stats(const std::vector<SourceRecord>& records) {
  if (records.empty()) throw EmptyDataset();
  DatasetStats st;
  st.n_samples = records.size();
  std::size_t ctx = 0;
  std::size_t sent = 0;
  for (const auto& r : records) {
    sent += word_count(r.sentence);
    for (const auto& c : r.context) ctx += word_count(c);
  }
  st.avg_context_words = static_cast<double>(ctx) / static_cast<double>(records.size());
  st.avg_sentence_words = static_cast<double>(sent) / static_cast<double>(records.size());
  return st;
}

json DatasetStats::to_json() const {
  return {{"n_samples", n_samples}, {"avg_context_words", avg_context_words}, {"avg_sentence_words", avg_sentence_words}};
}

std::size_t added_words(std::string_view original, std::string_view rewritten) {
  std::unordered_map<std::string, long long> pool;
  for (const auto& t : tokenize(original))
    if (!is_punctuation_token(t)) ++pool[t];
  std::size_t added = 0;
  for (const auto& t : tokenize(rewritten)) {
    if (is_punctuation_token(t)) continue;
    auto it = pool.find(t);
    if (it != pool.end() && it->second > 0) {
      --it->second;
    } else {
      ++added;
    }
  }
  return added;
}

std::size_t added_words(const SourceRecord& record, const DecontextResult& result) {
  return added_words(record.sentence, result.rewritten);
}

}  // namespace ecsp
