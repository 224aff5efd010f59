#include "ecsp/prompting.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "ecsp/cache.hpp"
#include "ecsp/text.hpp"

namespace ecsp {

namespace {

struct Layout {
  std::vector<std::string> fields;
  std::vector<std::string> separators;  // separators[i] precedes fields[i + 1]
  std::string trailer;
  std::string output_joiner;  // between the fields and "Output:" in a demo
};

const Layout& layout(PromptKind kind) {
  static const Layout segment{{"Sentence"}, {}, "", "; "};
  static const Layout ambiguity{{"Sentence", "EDUs"}, {"; "}, "", "; "};
  static const Layout select{{"Paragraph", "EDUs in Paragraph", "Sentence", "Ambiguous EDUs in Sentence"},
                             {"; ", ";\n", "; "},
                             ";",
                             "\n"};
  static const Layout decontext{
      {"Sentence", "Ambiguous EDUs in Sentence", "EDUs relevant to the sentence"}, {"; ", "; "}, ";", "\n"};
  static const Layout vanilla{{"Sentence", "Context"}, {"; "}, ";", "\n"};
  switch (kind) {
    case PromptKind::Segment: return segment;
    case PromptKind::Ambiguity: return ambiguity;
    case PromptKind::Select: return select;
    case PromptKind::Decontext: return decontext;
    case PromptKind::Vanilla: return vanilla;
  }
  return segment;
}

std::string quote(const std::string& s) {
  return nlohmann::json(s).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string render_value(const ordered_json& value) {
  if (value.is_string()) return "{" + value.get<std::string>() + "}";
  if (value.is_array()) {
    std::string out = "{";
    bool first = true;
    for (const auto& item : value) {
      if (!first) out += ", ";
      first = false;
      out += item.is_string() ? quote(item.get<std::string>()) : item.dump();
    }
    return out + "}";
  }
  if (value.is_object()) {
    std::string out = "{";
    bool first = true;
    for (const auto& [key, item] : value.items()) {
      if (!first) out += ", ";
      first = false;
      out += quote(key) + ": ";
      if (item.is_string()) {
        out += quote(item.get<std::string>());
      } else if (item.is_array()) {
        out += "[";
        for (std::size_t i = 0; i < item.size(); ++i) {
          if (i) out += ", ";
          out += item[i].is_string() ? quote(item[i].get<std::string>()) : item[i].dump();
        }
        out += "]";
      } else {
        out += item.dump();
      }
    }
    return out + "}";
  }
  return "{" + value.dump() + "}";
}

std::string render_fields(PromptKind kind, const ordered_json& inputs) {
  const Layout& lay = layout(kind);
  std::string out;
  for (std::size_t i = 0; i < lay.fields.size(); ++i) {
    const auto& name = lay.fields[i];
    if (!inputs.is_object() || !inputs.contains(name)) throw MissingField(name);
    if (i > 0) out += lay.separators[i - 1];
    out += name + ": " + render_value(inputs.at(name));
  }
  return out + lay.trailer;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && lower_ascii(s.substr(0, prefix.size())) == lower_ascii(prefix);
}

// Drops code fences and any leading "Output:" label.
std::string strip_wrappers(std::string_view response) {
  std::string text = trim(response);
  if (text.rfind("```", 0) == 0) {
    const auto nl = text.find('\n');
    text = nl == std::string::npos ? text.substr(3) : text.substr(nl + 1);
    const auto fence = text.rfind("```");
    if (fence != std::string::npos) text = text.substr(0, fence);
    text = trim(text);
  }
  while (starts_with_ci(text, "output:")) text = trim(std::string_view(text).substr(7));
  return text;
}

std::string strip_quotes(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    try {
      return trim(nlohmann::json::parse(s).get<std::string>());
    } catch (const std::exception&) {
      return trim(s.substr(1, s.size() - 2));
    }
  }
  return s;
}

void push_item(std::vector<std::string>& items, std::string item) {
  item = strip_quotes(std::move(item));
  if (!item.empty()) items.push_back(std::move(item));
}

std::optional<std::vector<std::string>> try_json_string_array(std::string_view text) {
  try {
    const auto parsed = nlohmann::json::parse(text);
    if (!parsed.is_array()) return std::nullopt;
    std::vector<std::string> items;
    for (const auto& v : parsed) {
      if (!v.is_string()) return std::nullopt;
      push_item(items, v.get<std::string>());
    }
    return items;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<std::string> split_top_level_commas(std::string_view inner) {
  std::vector<std::string> items;
  int depth = 0;
  bool in_quote = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const char c = inner[i];
    if (c == '"' && (i == 0 || inner[i - 1] != '\\')) in_quote = !in_quote;
    if (in_quote) continue;
    if (c == '(' || c == '[' || c == '{') ++depth;
    if ((c == ')' || c == ']' || c == '}') && depth > 0) --depth;
    if (c == ',' && depth == 0) {
      push_item(items, std::string(inner.substr(start, i - start)));
      start = i + 1;
    }
  }
  push_item(items, std::string(inner.substr(start)));
  return items;
}

std::optional<std::vector<std::string>> try_brace_list(std::string_view text) {
  std::string t(text);
  while (!t.empty() && (t.back() == '.' || t.back() == ';')) t.pop_back();
  t = trim(t);
  if (t.size() < 2 || t.front() != '{' || t.back() != '}') return std::nullopt;
  const std::string inner = trim(std::string_view(t).substr(1, t.size() - 2));
  if (inner.empty()) return std::vector<std::string>{};
  if (auto json_items = try_json_string_array("[" + inner + "]")) return json_items;
  if (std::count(inner.begin(), inner.end(), '"') % 2 == 1) {
    std::vector<std::string> one;
    push_item(one, inner);
    return one;
  }
  return split_top_level_commas(inner);
}

std::optional<std::vector<std::string>> try_bracket_sequence(std::string_view text) {
  std::vector<std::string> items;
  std::size_t i = 0;
  bool any = false;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++i;
      continue;
    }
    if (c == '.' && any) {
      ++i;
      continue;
    }
    if (c != '[') return std::nullopt;
    int depth = 0;
    std::size_t j = i;
    for (; j < text.size(); ++j) {
      if (text[j] == '[') ++depth;
      if (text[j] == ']' && --depth == 0) break;
    }
    if (j >= text.size()) return std::nullopt;
    push_item(items, std::string(text.substr(i + 1, j - i - 1)));
    any = true;
    i = j + 1;
  }
  if (!any) return std::nullopt;
  return items;
}

const std::regex& marker_regex() {
  static const std::regex re(R"(^\s*(?:\d{1,3}[.)]|\(\d{1,3}\)|[-*]|•)\s+)");
  return re;
}

std::optional<std::vector<std::string>> try_enumeration(std::string_view text) {
  std::vector<std::string> pieces;
  std::string t(text);
  if (t.find('\n') == std::string::npos && t.find(';') != std::string::npos) {
    std::stringstream ss(t);
    std::string piece;
    while (std::getline(ss, piece, ';')) pieces.push_back(piece);
  } else {
    std::stringstream ss(t);
    std::string line;
    while (std::getline(ss, line)) pieces.push_back(line);
  }
  bool marked = false;
  std::vector<std::string> items;
  for (auto& p : pieces) {
    std::smatch m;
    std::string line = p;
    if (std::regex_search(line, m, marker_regex())) {
      marked = true;
      line = line.substr(m.length(0));
    }
    push_item(items, line);
  }
  if (items.empty()) return std::nullopt;
  if (items.size() < 2 && !marked) return std::nullopt;
  return items;
}

}  // namespace

std::string_view instruction(PromptKind kind) {
  switch (kind) {
    case PromptKind::Segment:
      return "You will be given a sentence. Your task is to segment this sentence into Elementary Discourse Units "
             "(EDUs).";
    case PromptKind::Ambiguity:
      return "You will be given a sentence and its EDUs. Your task is to extract ambiguous EDUs that rely heavily on "
             "context or have implicit references from the given EDUs.";
    case PromptKind::Select:
      return "You will be given a paragraph consisting of multiple sentences and their corresponding EDUs; an "
             "ambiguous sentence and its EDUs. Your task is to select EDUs from the paragraph that have discourse "
             "relations with the EDUs in the ambiguous sentence. Group the relevant EDUs under each ambiguous EDU "
             "and name the discourse relation in parentheses.";
    case PromptKind::Decontext:
      return "You will be given a sentence and its ambiguous EDUs, and EDUs relevant to these ambiguous EDUs. Your "
             "task is to rewrite the ambiguous sentence to be understandable by enriching each ambiguous EDU with its "
             "relevant EDUs, which involves resolving ambiguities, determining references, and filling in implicit "
             "information. We prefer the rewritten sentence to be as close as possible to its original form.";
    case PromptKind::Vanilla:
      return "To rewrite the Sentence to be understandable out of Context, while retaining its original meaning. We "
             "prefer the rewritten sentence to be as close as possible to its original form.";
  }
  return "";
}

const std::vector<std::string>& required_fields(PromptKind kind) { return layout(kind).fields; }

std::string ambiguous_label(std::size_t index) { return "A" + std::to_string(index + 1); }

std::string format_list(const std::vector<std::string>& items) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : items) arr.push_back(s);
  return render_value(arr);
}

std::string format_labeled(const std::vector<std::string>& items) {
  ordered_json obj = ordered_json::object();
  for (std::size_t i = 0; i < items.size(); ++i) obj[ambiguous_label(i)] = items[i];
  return render_value(obj);
}

std::string format_groups(const std::vector<std::vector<std::string>>& groups) {
  ordered_json obj = ordered_json::object();
  for (std::size_t i = 0; i < groups.size(); ++i) obj[ambiguous_label(i)] = groups[i];
  return render_value(obj);
}

DemoInstance make_demo(PromptKind kind, ordered_json input_fields, ordered_json expected) {
  DemoInstance demo;
  demo.kind = kind;
  demo.input_fields = std::move(input_fields);
  demo.expected = std::move(expected);
  for (const auto& name : required_fields(kind)) {
    if (!demo.input_fields.contains(name)) throw MissingField(name);
  }
  if (demo.expected.is_array()) {
    demo.expected_output = format_list(demo.expected.get<std::vector<std::string>>());
  } else if (demo.expected.is_object()) {
    demo.expected_output = render_value(demo.expected);
  } else {
    throw std::invalid_argument("demo expected output must be an array or object");
  }
  return demo;
}

namespace {

PromptKind kind_from_name(const std::string& name) {
  for (auto k : {PromptKind::Segment, PromptKind::Ambiguity, PromptKind::Select, PromptKind::Decontext,
                 PromptKind::Vanilla}) {
    if (kind_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown prompt kind: " + name);
}

}  // namespace

DemoStore DemoStore::from_jsonl(std::string_view text) {
  DemoStore store;
  std::stringstream ss{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = ordered_json::parse(line);
      store.add(make_demo(kind_from_name(j.at("kind").get<std::string>()), j.at("input"), j.at("expected")));
    } catch (const std::exception& e) {
      throw std::invalid_argument("demo line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return store;
}

DemoStore DemoStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open demo file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_jsonl(buf.str());
}

void DemoStore::add(DemoInstance demo) { demos_.push_back(std::move(demo)); }

std::vector<DemoInstance> DemoStore::take(PromptKind kind, std::size_t n) const {
  std::vector<DemoInstance> out;
  for (const auto& d : demos_) {
    if (out.size() >= n) break;
    if (d.kind == kind) out.push_back(d);
  }
  return out;
}

std::size_t DemoStore::count(PromptKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(demos_.begin(), demos_.end(), [&](const DemoInstance& d) { return d.kind == kind; }));
}

std::string render(PromptKind kind, const ordered_json& inputs, const std::vector<DemoInstance>& demos) {
  if (!demos.empty() && (kind == PromptKind::Decontext || kind == PromptKind::Vanilla)) {
    throw std::invalid_argument(kind_name(kind) + " prompts take no demonstrations");
  }
  std::string out(instruction(kind));
  out += "\n\n";
  if (!demos.empty()) {
    out += kDemoCue;
    out += '\n';
    out += kSeparator;
    out += '\n';
    for (const auto& demo : demos) {
      if (demo.kind != kind) throw std::invalid_argument("demonstration kind does not match prompt kind");
      out += render_fields(kind, demo.input_fields) + layout(kind).output_joiner + "Output: " + demo.expected_output;
      out += '\n';
    }
  }
  out += kSeparator;
  out += "\nInput:\n";
  out += render_fields(kind, inputs);
  out += "\nOutput:";
  return out;
}

namespace {

std::size_t find_header(std::string_view block, const std::string& name, std::size_t from) {
  const std::string needle = name + ": {";
  for (std::size_t pos = block.find(needle, from); pos != std::string_view::npos; pos = block.find(needle, pos + 1)) {
    if (pos == 0 || block[pos - 1] == '\n' || (pos >= 2 && block.substr(pos - 2, 2) == "; ")) return pos;
  }
  return std::string_view::npos;
}

}  // namespace

std::map<std::string, std::string> extract_input_fields(PromptKind kind, std::string_view prompt) {
  const auto input_pos = prompt.rfind("\nInput:\n");
  if (input_pos == std::string_view::npos) throw ParseError(std::string(prompt), "no Input block");
  std::string_view block = prompt.substr(input_pos + 8);
  const auto output_pos = block.rfind("\nOutput:");
  if (output_pos != std::string_view::npos) block = block.substr(0, output_pos);

  const auto& fields = layout(kind).fields;
  std::vector<std::size_t> headers;
  std::size_t from = 0;
  for (const auto& name : fields) {
    const auto pos = find_header(block, name, from);
    if (pos == std::string_view::npos) throw MissingField(name);
    headers.push_back(pos);
    from = pos + name.size() + 3;
  }
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::size_t value_begin = headers[i] + fields[i].size() + 3;
    const std::size_t limit = i + 1 < fields.size() ? headers[i + 1] : block.size();
    const auto close = block.substr(0, limit).rfind('}');
    if (close == std::string_view::npos || close < value_begin) throw ParseError(std::string(block), "unclosed field");
    out[fields[i]] = std::string(block.substr(value_begin, close - value_begin));
  }
  return out;
}

std::vector<std::string> parse_list_value(std::string_view inner) {
  const std::string t = trim(inner);
  if (t.empty()) return {};
  if (auto items = try_json_string_array("[" + t + "]")) return *items;
  return split_top_level_commas(t);
}

ParsedEduList parse_edu_list(std::string_view response) {
  ParsedEduList out;
  out.raw = std::string(response);
  const std::string text = strip_wrappers(response);
  if (text.empty()) throw ParseError(out.raw, "empty response");

  if (text.front() == '[') {
    if (auto items = try_json_string_array(text); items && !items->empty()) {
      out.items = std::move(*items);
      out.form = ListForm::JsonArray;
      return out;
    }
  }
  if (text.front() == '{') {
    if (auto items = try_brace_list(text); items && !items->empty()) {
      out.items = std::move(*items);
      out.form = ListForm::BraceList;
      return out;
    }
  }
  if (auto items = try_bracket_sequence(text); items && !items->empty()) {
    out.items = std::move(*items);
    out.form = ListForm::BracketSequence;
    out.repair_applied = true;
    return out;
  }
  if (text.front() != '{' && text.front() != '[') {
    if (auto items = try_enumeration(text); items && !items->empty()) {
      out.items = std::move(*items);
      out.form = ListForm::Enumeration;
      out.repair_applied = true;
      return out;
    }
  }
  throw ParseError(out.raw);
}

bool is_empty_list_answer(std::string_view response) {
  std::string t = lower_ascii(strip_wrappers(response));
  while (!t.empty() && (t.back() == '.' || t.back() == ';')) t.pop_back();
  t = trim(t);
  if (t.size() >= 2 && ((t.front() == '{' && t.back() == '}') || (t.front() == '[' && t.back() == ']'))) {
    const std::string inner = trim(std::string_view(t).substr(1, t.size() - 2));
    if (inner.empty() || inner == "none" || inner == "\"none\"") return true;
  }
  static const std::vector<std::string> kEmpty = {"none", "n/a", "nothing", "empty", "no ambiguous edus",
                                                  "no relevant edus"};
  return std::find(kEmpty.begin(), kEmpty.end(), t) != kEmpty.end();
}

RelevantItem split_relation_annotation(std::string_view item) {
  std::string text = trim(item);
  RelevantItem out{text, std::nullopt};
  std::string core = text;
  while (!core.empty() && (core.back() == '.' || core.back() == ';' || core.back() == ',')) core.pop_back();
  core = trim(core);
  if (core.empty() || core.back() != ')') return out;
  int depth = 0;
  std::size_t open = std::string::npos;
  for (std::size_t i = core.size(); i-- > 0;) {
    if (core[i] == ')') ++depth;
    if (core[i] == '(' && --depth == 0) {
      open = i;
      break;
    }
  }
  if (open == std::string::npos || open == 0) return out;
  std::string inner = trim(std::string_view(core).substr(open + 1, core.size() - open - 2));
  for (std::string_view prefix : {"relation:", "relation -", "relation"}) {
    if (starts_with_ci(inner, prefix)) {
      inner = trim(std::string_view(inner).substr(prefix.size()));
      break;
    }
  }
  if (auto label = try_parse_relation_label(inner)) {
    std::string rest = trim(std::string_view(core).substr(0, open));
    if (!rest.empty()) {
      out.text = strip_quotes(rest);
      out.relation = std::move(label);
    }
  }
  return out;
}

namespace {

std::optional<std::size_t> resolve_key(std::string_view raw, const std::vector<std::string>& ambiguous) {
  std::string key = strip_quotes(trim(raw));
  if (key.size() >= 2 && key.front() == '[' && key.back() == ']') key = trim(key.substr(1, key.size() - 2));
  static const std::regex label_re(R"(^[Aa](?:mbiguous\s*(?:EDU)?\s*)?_?(\d+)$)");
  std::smatch m;
  if (std::regex_match(key, m, label_re)) {
    const auto idx = std::stoul(m[1].str());
    if (idx >= 1 && idx <= ambiguous.size()) return idx - 1;
    return std::nullopt;
  }
  const std::string norm_key = utf8_lower(normalize_text(key));
  if (norm_key.empty()) return std::nullopt;
  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t i = 0; i < ambiguous.size(); ++i) {
    const std::string cand = utf8_lower(normalize_text(ambiguous[i]));
    if (cand == norm_key) return i;
    const auto lcs = longest_common_substring(norm_key, cand);
    if (lcs.length >= 0.8 * static_cast<double>(norm_key.size())) {
      const double score = static_cast<double>(lcs.length) / static_cast<double>(std::max(norm_key.size(), cand.size()));
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
  }
  return best;
}

std::vector<RelevantItem> items_from_json(const nlohmann::json& value) {
  std::vector<RelevantItem> out;
  auto add = [&](const nlohmann::json& v) {
    if (v.is_string()) {
      auto item = split_relation_annotation(v.get<std::string>());
      item.text = strip_quotes(item.text);
      if (!item.text.empty()) out.push_back(std::move(item));
    } else if (v.is_object()) {
      std::string text;
      for (const char* k : {"edu", "text", "EDU"}) {
        if (v.contains(k) && v[k].is_string()) text = v[k].get<std::string>();
      }
      RelevantItem item = split_relation_annotation(text);
      for (const char* k : {"relation", "Relation", "label"}) {
        if (v.contains(k) && v[k].is_string()) item.relation = try_parse_relation_label(v[k].get<std::string>());
      }
      if (!trim(item.text).empty()) out.push_back(std::move(item));
    } else {
      throw std::invalid_argument("relevant EDU must be a string or object");
    }
  };
  if (value.is_array()) {
    for (const auto& v : value) add(v);
  } else if (!value.is_null()) {
    add(value);
  }
  return out;
}

std::vector<RelevantItem> items_from_list(std::string_view content) {
  std::vector<RelevantItem> out;
  if (trim(content).empty() || is_empty_list_answer(content)) return out;
  for (const auto& s : parse_edu_list(content).items) {
    auto item = split_relation_annotation(s);
    if (!item.text.empty()) out.push_back(std::move(item));
  }
  return out;
}

}  // namespace

RelevantMap parse_relevant_map(std::string_view response, const std::vector<std::string>& ambiguous) {
  if (ambiguous.empty()) throw std::invalid_argument("parse_relevant_map needs at least one ambiguous EDU");
  RelevantMap out;
  out.groups.resize(ambiguous.size());
  const std::string raw(response);
  const std::string text = strip_wrappers(response);
  if (text.empty()) throw ParseError(raw, "empty response");

  // Grouped JSON object.
  if (text.front() == '{') {
    try {
      const auto parsed = nlohmann::json::parse(text);
      if (parsed.is_object()) {
        bool resolved_any = false;
        std::vector<RelevantItem> unresolved;
        for (const auto& [key, value] : parsed.items()) {
          auto items = items_from_json(value);
          if (auto idx = resolve_key(key, ambiguous)) {
            resolved_any = true;
            auto& g = out.groups[*idx];
            g.insert(g.end(), items.begin(), items.end());
          } else {
            unresolved.insert(unresolved.end(), items.begin(), items.end());
          }
        }
        if (!resolved_any) {
          for (auto& g : out.groups) g = unresolved;
          out.flat_assignment = true;
        }
        return out;
      }
    } catch (const nlohmann::json::exception&) {
    } catch (const std::invalid_argument&) {
    }
  }

  // Headed lines: "A1: {...}" or "<ambiguous EDU>: {...}".
  {
    std::stringstream ss(text);
    std::string line;
    std::optional<std::size_t> current;
    std::vector<std::string> contents(ambiguous.size());
    bool headed = false;
    bool first_line = true;
    bool ok = true;
    while (std::getline(ss, line)) {
      if (trim(line).empty()) continue;
      std::string stripped = line;
      std::smatch m;
      if (std::regex_search(stripped, m, marker_regex())) stripped = stripped.substr(m.length(0));
      const auto colon = stripped.find(':');
      std::optional<std::size_t> idx;
      if (colon != std::string::npos && colon > 0) idx = resolve_key(stripped.substr(0, colon), ambiguous);
      if (idx) {
        headed = true;
        current = idx;
        contents[*idx] += stripped.substr(colon + 1) + "\n";
      } else if (first_line) {
        ok = false;
        break;
      } else if (current) {
        contents[*current] += line + "\n";
      }
      first_line = false;
    }
    if (ok && headed) {
      try {
        for (std::size_t i = 0; i < ambiguous.size(); ++i) out.groups[i] = items_from_list(contents[i]);
        out.repair_applied = true;
        return out;
      } catch (const ParseError&) {
        throw ParseError(raw, "unparseable group");
      }
    }
  }

  // Flat list for all ambiguous EDUs.
  out.flat_assignment = true;
  if (is_empty_list_answer(text)) return out;
  const auto parsed = parse_edu_list(text);
  out.repair_applied = parsed.repair_applied;
  std::vector<RelevantItem> items;
  for (const auto& s : parsed.items) {
    auto item = split_relation_annotation(s);
    if (!item.text.empty()) items.push_back(std::move(item));
  }
  for (auto& g : out.groups) g = items;
  return out;
}

std::string parse_rewrite(std::string_view response) {
  std::string text = strip_wrappers(response);
  if (text.size() >= 2 && text.front() == '{' && text.back() == '}') text = trim(text.substr(1, text.size() - 2));
  text = strip_quotes(text);
  if (text.size() >= 2 && text.front() == '[' && text.back() == ']') {
    if (auto items = try_json_string_array(text); items && items->size() == 1) text = items->front();
  }
  text = trim(text);
  if (text.empty()) throw ParseError(std::string(response), "empty rewrite");
  return text;
}

bool declares_inability(std::string_view text) {
  const std::string t = lower_ascii(normalize_text(text));
  if (t.empty()) return true;
  static const std::vector<std::string> kMarkers = {
      "cannot be decontextuali", "can't be decontextuali", "cannot decontextuali", "can not be decontextuali",
      "unable to",               "cannot rewrite",          "can't rewrite",        "not possible to",
      "i cannot",                "i can't",                 "i'm sorry",            "i am sorry",
      "as an ai"};
  return std::any_of(kMarkers.begin(), kMarkers.end(),
                     [&](const std::string& m) { return t.find(m) != std::string::npos; });
}

std::string_view repair_suffix(PromptKind kind) {
  switch (kind) {
    case PromptKind::Segment:
    case PromptKind::Ambiguity:
      return "Return only a JSON array of strings.";
    case PromptKind::Select:
      return "Return only a JSON object mapping each ambiguous EDU label (A1, A2, ...) to a JSON array of strings.";
    case PromptKind::Decontext:
    case PromptKind::Vanilla:
      return "Return only the rewritten sentence.";
  }
  return "Return only a JSON array of strings.";
}

CompletionRequest repair_reask(const CompletionRequest& request, const ParseError& /*error*/) {
  CompletionRequest repaired = request;
  const std::string suffix(repair_suffix(request.kind));
  if (request.prompt.find(suffix) != std::string::npos) return repaired;
  const std::string cue = "\nOutput:";
  if (request.prompt.size() >= cue.size() &&
      request.prompt.compare(request.prompt.size() - cue.size(), cue.size(), cue) == 0) {
    repaired.prompt = request.prompt.substr(0, request.prompt.size() - cue.size()) + "\n" + suffix + cue;
  } else {
    repaired.prompt = request.prompt + "\n" + suffix;
  }
  return repaired;
}

std::string prompt_digest(std::string_view prompt) { return sha256_hex(std::string(prompt)).substr(0, 16); }

CompletionRequest make_request(PromptKind kind, std::string prompt, const GenerationSettings& settings) {
  CompletionRequest request;
  request.kind = kind;
  request.prompt = std::move(prompt);
  request.model_id = settings.model_id;
  request.max_output_tokens = settings.max_output_tokens;
  request.temperature = settings.temperature;
  return request;
}

CompletionResponse traced_complete(CompletionBackend& backend, const CompletionRequest& request, CallTrace& trace) {
  trace.prompt_digests.push_back(prompt_digest(request.prompt));
  ++trace.calls;
  CompletionResponse response = backend.complete(request);
  if (response.from_cache) ++trace.cache_hits;
  return response;
}

}  // namespace ecsp
