#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ecsp/types.hpp"

namespace ecsp {

class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Lowercased tokens. Punctuation at either end of a whitespace chunk becomes
/// one token per character; the clitics 's 're 've 'll 'd 'm and n't are
/// split off the word they end. A chunk that is itself a clitic stays whole.
std::vector<std::string> tokenize(std::string_view text);

/// True when the token has no letter or digit.
bool is_punctuation_token(std::string_view token);

/// Porter (1980) stemmer over lowercase ASCII words; other input is
/// returned unchanged.
std::string porter_stem(std::string_view word);

/// SARI over n = 1..4 with add F1, keep F1 and delete precision; each
/// operation scores 1 when neither the system nor the references perform it.
double sari(std::string_view source, std::string_view candidate, const std::vector<std::string>& references);

/// Character n-gram F-score, whitespace removed, P and R averaged over the
/// orders in which the reference has n-grams.
double chrf(std::string_view candidate, std::string_view reference, int n_max = 6, double beta = 2.0);

/// Sentence BLEU with brevity penalty; when any order has no match, orders
/// n >= 2 are add-one smoothed. `smooth = false` gives the plain formula.
double bleu(std::string_view candidate, const std::vector<std::string>& references, int max_n = 4,
            bool smooth = true);

/// Corpus BLEU: counts aggregated over all pairs, no smoothing.
double corpus_bleu(const std::vector<std::string>& candidates, const std::vector<std::vector<std::string>>& references,
                   int max_n = 4);

/// Token LCS F1.
double rouge_l(std::string_view candidate, std::string_view reference);

struct MeteorAlignment {
  int matches = 0;
  int exact = 0;
  int chunks = 0;
  bool exhaustive = true;  // false when the search budget ran out
};

/// Exact then Porter-stem unigram alignment; Fmean = 10PR/(R+9P),
/// penalty = 0.5 (chunks/m)^3.
double meteor(std::string_view candidate, std::string_view reference);
MeteorAlignment meteor_alignment(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

class DimensionMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// One vector per token.
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) = 0;
  virtual std::string id() const = 0;
};

/// Pseudo-random unit-scale vectors derived from a hash of each token.
/// Identical tokens get identical vectors; values carry no meaning.
class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dim = 64) : dim_(dim) {}
  std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) override;
  std::string id() const override { return "hash" + std::to_string(dim_); }

 private:
  std::size_t dim_;
};

struct EmbedScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Greedy max-cosine matching over token vectors, clamped to [0, 1].
EmbedScore embed_score(const std::vector<std::vector<double>>& candidate,
                       const std::vector<std::vector<double>>& reference);
EmbedScore embed_score(std::string_view candidate, std::string_view reference, EmbeddingProvider& provider);

/// Report columns in output order.
const std::vector<std::string>& metric_names();

struct MetricConfig {
  std::vector<std::string> metrics = metric_names();
  std::shared_ptr<EmbeddingProvider> provider;  // BERTScore slot skipped when null
};

struct SampleScores {
  std::string record_id;
  std::map<std::string, double> scores;
};

struct MetricReport {
  std::vector<SampleScores> per_sample;
  std::map<std::string, double> aggregate;
  std::optional<double> corpus_bleu;
  int n_samples = 0;
  int skipped = 0;
  std::string config_digest;
  std::vector<std::string> columns;

  json to_json() const;
  std::string to_csv() const;
  std::string to_markdown(const std::string& system = "system") const;
};

class NoReferences : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scores every result whose record has a gold rewrite; others are counted
/// in `skipped`. Throws NoReferences when nothing is scorable.
MetricReport evaluate_corpus(const std::vector<DecontextResult>& results, const std::vector<SourceRecord>& records,
                             const MetricConfig& config);

}  // namespace ecsp
