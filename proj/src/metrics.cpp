#include "ecsp/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ecsp/cache.hpp"
#include "ecsp/text.hpp"

namespace ecsp {

namespace {

const std::vector<std::string_view>& clitics() {
  static const std::vector<std::string_view> c{"n't", "'s", "'re", "'ve", "'ll", "'d", "'m"};
  return c;
}

bool is_clitic(std::string_view s) {
  return std::find(clitics().begin(), clitics().end(), s) != clitics().end();
}

bool ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

void split_once(const std::string& chunk, std::vector<std::string>& out) {
  std::size_t b = 0;
  std::size_t e = chunk.size();
  std::vector<std::string> trailing;
  while (e > b && ascii_punct(chunk[e - 1])) {
    if (is_clitic(std::string_view(chunk).substr(b, e - b))) break;
    trailing.emplace_back(1, chunk[e - 1]);
    --e;
  }
  std::string_view core = std::string_view(chunk).substr(b, e - b);
  if (!is_clitic(core)) {
    while (!core.empty() && ascii_punct(core.front())) {
      out.emplace_back(1, core.front());
      core.remove_prefix(1);
    }
  }
  if (!core.empty()) {
    bool split = false;
    if (!is_clitic(core)) {
      for (const auto c : clitics()) {
        if (core.size() > c.size() && core.substr(core.size() - c.size()) == c) {
          out.emplace_back(core.substr(0, core.size() - c.size()));
          out.emplace_back(c);
          split = true;
          break;
        }
      }
    }
    if (!split) out.emplace_back(core);
  }
  out.insert(out.end(), trailing.rbegin(), trailing.rend());
}

// Re-splits pieces until stable so that tokenizing the joined tokens is a no-op.
void split_chunk(const std::string& chunk, std::vector<std::string>& out) {
  std::vector<std::string> pieces;
  split_once(chunk, pieces);
  if (pieces.size() == 1) {
    out.push_back(std::move(pieces[0]));
    return;
  }
  for (const auto& p : pieces) split_chunk(p, out);
}

using Gram = std::string;
using Counts = std::unordered_map<Gram, long long>;

std::vector<std::string> ngrams(const std::vector<std::string>& toks, std::size_t n) {
  std::vector<std::string> out;
  if (toks.size() < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string g = toks[i];
    for (std::size_t k = 1; k < n; ++k) {
      g += '\x1f';
      g += toks[i + k];
    }
    out.push_back(std::move(g));
  }
  return out;
}

Counts count(const std::vector<std::string>& grams, long long scale = 1) {
  Counts c;
  for (const auto& g : grams) c[g] += scale;
  return c;
}

long long get(const Counts& c, const Gram& g) {
  const auto it = c.find(g);
  return it == c.end() ? 0 : it->second;
}

Counts intersect(const Counts& a, const Counts& b) {
  Counts out;
  for (const auto& [g, n] : a) {
    const long long m = std::min(n, get(b, g));
    if (m > 0) out[g] = m;
  }
  return out;
}

Counts subtract(const Counts& a, const Counts& b) {
  Counts out;
  for (const auto& [g, n] : a) {
    const long long m = n - get(b, g);
    if (m > 0) out[g] = m;
  }
  return out;
}

long long total(const Counts& c) {
  long long t = 0;
  for (const auto& kv : c) t += kv.second;
  return t;
}

double f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

struct SariParts {
  double keep;
  double del;
  double add;
};

SariParts sari_ngram(const std::vector<std::string>& s, const std::vector<std::string>& c,
                     const std::vector<std::vector<std::string>>& refs) {
  const long long numref = static_cast<long long>(refs.size());
  Counts r;
  for (const auto& ref : refs)
    for (const auto& g : ref) r[g] += 1;
  const Counts s_rep = count(s, numref);
  const Counts c_rep = count(c, numref);

  // keep
  const Counts keep = intersect(s_rep, c_rep);
  const Counts keep_good = intersect(keep, r);
  const Counts keep_all = intersect(s_rep, r);
  double keep_score;
  if (keep.empty() && keep_all.empty()) {
    keep_score = 1.0;
  } else {
    double p = 0.0;
    if (!keep.empty()) {
      double acc = 0.0;
      for (const auto& [g, n] : keep) acc += static_cast<double>(get(keep_good, g)) / static_cast<double>(n);
      p = acc / static_cast<double>(keep.size());
    }
    const double rec =
        keep_all.empty() ? 0.0 : static_cast<double>(total(keep_good)) / static_cast<double>(total(keep_all));
    keep_score = f1(p, rec);
  }

  // delete (precision only)
  const Counts del = subtract(s_rep, c_rep);
  const Counts del_good = subtract(del, r);
  const Counts del_all = subtract(s_rep, r);
  double del_score;
  if (del.empty()) {
    del_score = del_all.empty() ? 1.0 : 0.0;
  } else {
    double acc = 0.0;
    for (const auto& [g, n] : del) acc += static_cast<double>(get(del_good, g)) / static_cast<double>(n);
    del_score = acc / static_cast<double>(del.size());
  }

  // add (sets)
  std::set<Gram> s_set(s.begin(), s.end());
  std::set<Gram> c_set(c.begin(), c.end());
  std::set<Gram> r_set;
  for (const auto& [g, n] : r) r_set.insert(g);
  std::size_t added = 0;
  std::size_t added_good = 0;
  for (const auto& g : c_set) {
    if (s_set.count(g)) continue;
    ++added;
    if (r_set.count(g)) ++added_good;
  }
  std::size_t add_all = 0;
  for (const auto& g : r_set)
    if (!s_set.count(g)) ++add_all;
  double add_score;
  if (added == 0 && add_all == 0) {
    add_score = 1.0;
  } else {
    const double p = added ? static_cast<double>(added_good) / static_cast<double>(added) : 0.0;
    const double rec = add_all ? static_cast<double>(added_good) / static_cast<double>(add_all) : 0.0;
    add_score = f1(p, rec);
  }
  return {keep_score, del_score, add_score};
}

std::vector<std::string> chars_no_space(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp;
    const std::size_t len = utf8_decode(text, i, cp);
    if (!is_unicode_space(cp)) out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<std::string> char_ngrams(const std::vector<std::string>& chars, std::size_t n) {
  std::vector<std::string> out;
  if (chars.size() < n) return out;
  for (std::size_t i = 0; i + n <= chars.size(); ++i) {
    std::string g;
    for (std::size_t k = 0; k < n; ++k) g += chars[i + k];
    out.push_back(std::move(g));
  }
  return out;
}

struct BleuStats {
  std::vector<long long> matches;
  std::vector<long long> totals;
  long long cand_len = 0;
  long long ref_len = 0;
};

BleuStats bleu_stats(const std::vector<std::string>& cand, const std::vector<std::vector<std::string>>& refs,
                     int max_n) {
  BleuStats st;
  st.matches.assign(static_cast<std::size_t>(max_n), 0);
  st.totals.assign(static_cast<std::size_t>(max_n), 0);
  st.cand_len = static_cast<long long>(cand.size());
  // Closest reference length; ties go to the shorter one.
  long long best = -1;
  for (const auto& ref : refs) {
    const long long len = static_cast<long long>(ref.size());
    if (best < 0 || std::llabs(len - st.cand_len) < std::llabs(best - st.cand_len) ||
        (std::llabs(len - st.cand_len) == std::llabs(best - st.cand_len) && len < best)) {
      best = len;
    }
  }
  st.ref_len = std::max<long long>(best, 0);
  for (int n = 1; n <= max_n; ++n) {
    const Counts c = count(ngrams(cand, static_cast<std::size_t>(n)));
    Counts max_ref;
    for (const auto& ref : refs) {
      for (const auto& [g, k] : count(ngrams(ref, static_cast<std::size_t>(n)))) {
        max_ref[g] = std::max(max_ref[g], k);
      }
    }
    long long m = 0;
    for (const auto& [g, k] : c) m += std::min(k, get(max_ref, g));
    st.matches[static_cast<std::size_t>(n - 1)] = m;
    st.totals[static_cast<std::size_t>(n - 1)] = total(c);
  }
  return st;
}

double brevity_penalty(long long cand_len, long long ref_len) {
  if (cand_len == 0) return 0.0;
  if (cand_len >= ref_len) return 1.0;
  return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
}

std::vector<std::vector<std::string>> tokenize_all(const std::vector<std::string>& texts) {
  std::vector<std::vector<std::string>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(tokenize(t));
  return out;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Branch-and-bound over unigram alignments ordered by (exact, matches, -chunks).
class MeteorSearch {
 public:
  MeteorSearch(const std::vector<std::string>& cand, const std::vector<std::string>& ref) : cand_(cand), ref_(ref) {
    std::vector<std::string> cs;
    std::vector<std::string> rs;
    for (const auto& t : cand) cs.push_back(porter_stem(t));
    for (const auto& t : ref) rs.push_back(porter_stem(t));
    options_.resize(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) {
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (cand[i] == ref[j]) {
          options_[i].push_back({j, true});
        } else if (cs[i] == rs[j]) {
          options_[i].push_back({j, false});
        }
      }
    }
    used_.assign(ref.size(), false);
    suffix_exact_.assign(cand.size() + 1, 0);
    suffix_any_.assign(cand.size() + 1, 0);
    for (std::size_t i = cand.size(); i-- > 0;) {
      bool has_exact = false;
      for (const auto& o : options_[i]) has_exact = has_exact || o.exact;
      suffix_exact_[i] = suffix_exact_[i + 1] + (has_exact ? 1 : 0);
      suffix_any_[i] = suffix_any_[i + 1] + (options_[i].empty() ? 0 : 1);
    }
  }

  MeteorAlignment run() {
    dfs(0, 0, 0, 0, -2);
    best_.exhaustive = nodes_ <= kBudget;
    return best_;
  }

 private:
  struct Option {
    std::size_t ref;
    bool exact;
  };
  static constexpr long long kBudget = 2'000'000;

  bool better(int exact, int matches, int chunks) const {
    if (!found_) return true;
    if (exact != best_.exact) return exact > best_.exact;
    if (matches != best_.matches) return matches > best_.matches;
    return chunks < best_.chunks;
  }

  bool can_improve(std::size_t i, int exact, int matches, int chunks) const {
    if (!found_) return true;
    const int ub_exact = exact + suffix_exact_[i];
    if (ub_exact != best_.exact) return ub_exact > best_.exact;
    const int ub_matches = matches + suffix_any_[i];
    if (ub_matches != best_.matches) return ub_matches > best_.matches;
    return chunks < best_.chunks;
  }

  // last_ref: reference index matched by candidate i - 1, or -2 when i - 1 is unmatched.
  void dfs(std::size_t i, int exact, int matches, int chunks, long long last_ref) {
    if (++nodes_ > kBudget && found_) return;
    if (i == cand_.size()) {
      if (better(exact, matches, chunks)) {
        best_.exact = exact;
        best_.matches = matches;
        best_.chunks = chunks;
        found_ = true;
      }
      return;
    }
    if (!can_improve(i, exact, matches, chunks)) return;
    // Continuation of the current chunk first, then exact, then stem options.
    std::vector<Option> order;
    for (const auto& o : options_[i])
      if (static_cast<long long>(o.ref) == last_ref + 1 && last_ref >= 0) order.push_back(o);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& o : options_[i]) {
        if (static_cast<long long>(o.ref) == last_ref + 1 && last_ref >= 0) continue;
        if (o.exact == (pass == 0)) order.push_back(o);
      }
    }
    for (const auto& o : order) {
      if (used_[o.ref]) continue;
      used_[o.ref] = true;
      const bool continues = last_ref >= 0 && static_cast<long long>(o.ref) == last_ref + 1;
      dfs(i + 1, exact + (o.exact ? 1 : 0), matches + 1, chunks + (continues ? 0 : 1),
          static_cast<long long>(o.ref));
      used_[o.ref] = false;
    }
    dfs(i + 1, exact, matches, chunks, -2);
  }

  const std::vector<std::string>& cand_;
  const std::vector<std::string>& ref_;
  std::vector<std::vector<Option>> options_;
  std::vector<bool> used_;
  std::vector<int> suffix_exact_;
  std::vector<int> suffix_any_;
  MeteorAlignment best_;
  bool found_ = false;
  long long nodes_ = 0;
};

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double greedy_side(const std::vector<std::vector<double>>& from, const std::vector<std::vector<double>>& to) {
  if (from.empty() || to.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& u : from) {
    double best = -1.0;
    for (const auto& v : to) best = std::max(best, cosine(u, v));
    acc += best;
  }
  return std::clamp(acc / static_cast<double>(from.size()), 0.0, 1.0);
}

std::string format_score(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

std::string format_full(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& chunk : split_whitespace(utf8_lower(normalize_text(text)))) split_chunk(chunk, out);
  return out;
}

bool is_punctuation_token(std::string_view token) {
  for (const char c : token) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || std::isalnum(u)) return false;
  }
  return true;
}

double sari(std::string_view source, std::string_view candidate, const std::vector<std::string>& references) {
  const auto s = tokenize(source);
  if (s.empty()) throw EmptyInput("sari: empty source");
  if (references.empty()) throw EmptyInput("sari: no references");
  const auto c = tokenize(candidate);
  const auto refs = tokenize_all(references);
  double keep = 0, del = 0, add = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::vector<std::vector<std::string>> rg;
    for (const auto& r : refs) rg.push_back(ngrams(r, n));
    const auto parts = sari_ngram(ngrams(s, n), ngrams(c, n), rg);
    keep += parts.keep;
    del += parts.del;
    add += parts.add;
  }
  return (keep / 4 + del / 4 + add / 4) / 3;
}

double chrf(std::string_view candidate, std::string_view reference, int n_max, double beta) {
  const auto ref_chars = chars_no_space(reference);
  if (ref_chars.empty()) throw EmptyInput("chrf: empty reference");
  const auto cand_chars = chars_no_space(candidate);
  double p_sum = 0, r_sum = 0;
  int orders = 0;
  for (int n = 1; n <= n_max; ++n) {
    const Counts r = count(char_ngrams(ref_chars, static_cast<std::size_t>(n)));
    if (r.empty()) break;
    const Counts c = count(char_ngrams(cand_chars, static_cast<std::size_t>(n)));
    const long long m = total(intersect(c, r));
    const long long ct = total(c);
    p_sum += ct ? static_cast<double>(m) / static_cast<double>(ct) : 0.0;
    r_sum += static_cast<double>(m) / static_cast<double>(total(r));
    ++orders;
  }
  const double p = p_sum / orders;
  const double rec = r_sum / orders;
  const double b2 = beta * beta;
  if (p == 0 && rec == 0) return 0.0;
  return (1 + b2) * p * rec / (b2 * p + rec);
}

double bleu(std::string_view candidate, const std::vector<std::string>& references, int max_n, bool smooth) {
  if (references.empty()) throw EmptyInput("bleu: no references");
  const auto cand = tokenize(candidate);
  const auto refs = tokenize_all(references);
  if (cand.empty()) return 0.0;
  const BleuStats st = bleu_stats(cand, refs, max_n);
  bool any_zero = false;
  for (int n = 0; n < max_n; ++n) any_zero = any_zero || st.matches[static_cast<std::size_t>(n)] == 0;
  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    double m = static_cast<double>(st.matches[static_cast<std::size_t>(n)]);
    double t = static_cast<double>(st.totals[static_cast<std::size_t>(n)]);
    if (smooth && any_zero && n >= 1) {
      m += 1;
      t += 1;
    }
    if (m == 0 || t == 0) return 0.0;
    log_sum += std::log(m / t);
  }
  const double score = brevity_penalty(st.cand_len, st.ref_len) * std::exp(log_sum / max_n);
  return std::clamp(score, 0.0, 1.0);
}

double corpus_bleu(const std::vector<std::string>& candidates, const std::vector<std::vector<std::string>>& references,
                   int max_n) {
  if (candidates.size() != references.size()) throw std::invalid_argument("corpus_bleu: size mismatch");
  if (candidates.empty()) throw EmptyInput("corpus_bleu: empty corpus");
  std::vector<long long> m(static_cast<std::size_t>(max_n), 0), t(static_cast<std::size_t>(max_n), 0);
  long long c_len = 0, r_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (references[i].empty()) throw EmptyInput("corpus_bleu: no references");
    const BleuStats st = bleu_stats(tokenize(candidates[i]), tokenize_all(references[i]), max_n);
    for (std::size_t n = 0; n < static_cast<std::size_t>(max_n); ++n) {
      m[n] += st.matches[n];
      t[n] += st.totals[n];
    }
    c_len += st.cand_len;
    r_len += st.ref_len;
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < static_cast<std::size_t>(max_n); ++n) {
    if (m[n] == 0 || t[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(m[n]) / static_cast<double>(t[n]));
  }
  return std::clamp(brevity_penalty(c_len, r_len) * std::exp(log_sum / max_n), 0.0, 1.0);
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto ref = tokenize(reference);
  if (ref.empty()) throw EmptyInput("rouge_l: empty reference");
  const auto cand = tokenize(candidate);
  if (cand.empty()) return 0.0;
  const auto l = static_cast<double>(lcs_length(cand, ref));
  if (l == 0) return 0.0;
  return f1(l / static_cast<double>(cand.size()), l / static_cast<double>(ref.size()));
}

MeteorAlignment meteor_alignment(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  return MeteorSearch(candidate, reference).run();
}

double meteor(std::string_view candidate, std::string_view reference) {
  const auto ref = tokenize(reference);
  if (ref.empty()) throw EmptyInput("meteor: empty reference");
  const auto cand = tokenize(candidate);
  if (cand.empty()) return 0.0;
  const MeteorAlignment a = meteor_alignment(cand, ref);
  if (a.matches == 0) return 0.0;
  const double m = a.matches;
  const double p = m / static_cast<double>(cand.size());
  const double r = m / static_cast<double>(ref.size());
  const double fmean = 10 * p * r / (r + 9 * p);
  const double penalty = 0.5 * std::pow(static_cast<double>(a.chunks) / m, 3);
  return fmean * (1 - penalty);
}

std::vector<std::vector<double>> HashEmbeddingProvider::embed(const std::vector<std::string>& tokens) {
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    // FNV-1a seed, splitmix64 stream.
    std::uint64_t h = 1469598103934665603ULL;
    for (const char c : tok) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    std::vector<double> v(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      std::uint64_t z = (h += 0x9E3779B97F4A7C15ULL);
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      z ^= z >> 31;
      v[i] = static_cast<double>(z >> 11) / static_cast<double>(1ULL << 53) * 2.0 - 1.0;
    }
    out.push_back(std::move(v));
  }
  return out;
}

EmbedScore embed_score(const std::vector<std::vector<double>>& candidate,
                       const std::vector<std::vector<double>>& reference) {
  std::size_t dim = 0;
  bool have_dim = false;
  for (const auto* side : {&candidate, &reference}) {
    for (const auto& v : *side) {
      if (!have_dim) {
        dim = v.size();
        have_dim = true;
      } else if (v.size() != dim) {
        throw DimensionMismatch("embedding dimensions differ");
      }
    }
  }
  EmbedScore s;
  s.precision = greedy_side(candidate, reference);
  s.recall = greedy_side(reference, candidate);
  s.f1 = f1(s.precision, s.recall);
  return s;
}

EmbedScore embed_score(std::string_view candidate, std::string_view reference, EmbeddingProvider& provider) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  if (r.empty()) throw EmptyInput("embed_score: empty reference");
  const auto cv = provider.embed(c);
  const auto rv = provider.embed(r);
  if (cv.size() != c.size() || rv.size() != r.size()) throw ProviderError("provider returned wrong vector count");
  return embed_score(cv, rv);
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"SARI", "BERTScore", "ChrF", "RougeL", "BLEU", "METEOR"};
  return names;
}

MetricReport evaluate_corpus(const std::vector<DecontextResult>& results, const std::vector<SourceRecord>& records,
                             const MetricConfig& config) {
  std::unordered_map<std::string, const SourceRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.id, &r);
  for (const auto& m : config.metrics) {
    if (std::find(metric_names().begin(), metric_names().end(), m) == metric_names().end()) {
      throw std::invalid_argument("unknown metric: " + m);
    }
  }

  MetricReport report;
  for (const auto& name : metric_names()) {
    if (std::find(config.metrics.begin(), config.metrics.end(), name) == config.metrics.end()) continue;
    if (name == "BERTScore" && !config.provider) continue;
    report.columns.push_back(name);
  }
  auto enabled = [&](const std::string& name) {
    return std::find(report.columns.begin(), report.columns.end(), name) != report.columns.end();
  };

  std::vector<std::string> cands;
  std::vector<std::vector<std::string>> refs;
  for (const auto& result : results) {
    const auto it = by_id.find(result.record_id);
    if (it == by_id.end() || !it->second->gold || trim(*it->second->gold).empty()) {
      ++report.skipped;
      continue;
    }
    const SourceRecord& rec = *it->second;
    const std::string& gold = *rec.gold;
    SampleScores sample{result.record_id, {}};
    if (enabled("SARI")) sample.scores["SARI"] = sari(rec.sentence, result.rewritten, {gold});
    if (enabled("BERTScore")) sample.scores["BERTScore"] = embed_score(result.rewritten, gold, *config.provider).f1;
    if (enabled("ChrF")) sample.scores["ChrF"] = chrf(result.rewritten, gold);
    if (enabled("RougeL")) sample.scores["RougeL"] = rouge_l(result.rewritten, gold);
    if (enabled("BLEU")) sample.scores["BLEU"] = bleu(result.rewritten, {gold});
    if (enabled("METEOR")) sample.scores["METEOR"] = meteor(result.rewritten, gold);
    report.per_sample.push_back(std::move(sample));
    cands.push_back(result.rewritten);
    refs.push_back({gold});
  }
  report.n_samples = static_cast<int>(report.per_sample.size());
  if (report.n_samples == 0) throw NoReferences("no result has a gold reference");

  for (const auto& name : report.columns) {
    double acc = 0.0;
    for (const auto& s : report.per_sample) acc += s.scores.at(name);
    report.aggregate[name] = acc / report.n_samples;
  }
  if (enabled("BLEU")) report.corpus_bleu = corpus_bleu(cands, refs);

  std::string digest_src = "metrics:";
  for (const auto& c : report.columns) digest_src += c + ",";
  digest_src += "provider=" + (config.provider ? config.provider->id() : std::string("none"));
  digest_src += ";bleu=add1-n>=2;chrf=6,2;meteor=exact+porter";
  report.config_digest = sha256_hex(digest_src).substr(0, 16);
  return report;
}

json MetricReport::to_json() const {
  json j;
  j["columns"] = columns;
  j["n_samples"] = n_samples;
  j["skipped"] = skipped;
  j["config_digest"] = config_digest;
  json agg = json::object();
  for (const auto& c : columns) agg[c] = aggregate.at(c);
  j["aggregate"] = agg;
  j["corpus_bleu"] = corpus_bleu ? json(*corpus_bleu) : json(nullptr);
  json per = json::array();
  for (const auto& s : per_sample) {
    json scores = json::object();
    for (const auto& c : columns) scores[c] = s.scores.at(c);
    per.push_back({{"record_id", s.record_id}, {"scores", scores}});
  }
  j["per_sample"] = per;
  return j;
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << "record_id";
  for (const auto& c : columns) os << ',' << c;
  os << '\n';
  auto csv_field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  };
  for (const auto& s : per_sample) {
    os << csv_field(s.record_id);
    for (const auto& c : columns) os << ',' << format_full(s.scores.at(c));
    os << '\n';
  }
  os << "MEAN";
  for (const auto& c : columns) os << ',' << format_full(aggregate.at(c));
  os << '\n';
  return os.str();
}

std::string MetricReport::to_markdown(const std::string& system) const {
  std::ostringstream os;
  os << "| System |";
  for (const auto& c : metric_names()) os << ' ' << c << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < metric_names().size(); ++i) os << "---|";
  os << "\n| " << system << " |";
  for (const auto& c : metric_names()) {
    const auto it = aggregate.find(c);
    os << ' ' << (it == aggregate.end() ? std::string("-") : format_score(it->second)) << " |";
  }
  os << '\n';
  return os.str();
}

}  // namespace ecsp
