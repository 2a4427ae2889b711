#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pdi {

// Word-level tokenization: maximal runs of ASCII alphanumerics (plus any
// byte >= 0x80, so UTF-8 words stay whole), optionally ASCII-lowercased.
struct TokenizerConfig {
  bool lowercase = true;
  std::string version = "word-v1";
};

std::vector<std::string> tokenize(std::string_view text,
                                  const TokenizerConfig& config = {});

// Neumaier-compensated accumulator in extended precision.
class CompensatedSum {
 public:
  void add(long double x);
  long double value() const { return sum_ + compensation_; }

 private:
  long double sum_ = 0.0L;
  long double compensation_ = 0.0L;
};

class Vocabulary {
 public:
  // Tokens are deduplicated and ordered lexicographically.
  explicit Vocabulary(std::vector<std::string> tokens);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  // Index of token, or size() when absent.
  std::size_t index_of(std::string_view token) const;

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
};

using VocabularyPtr = std::shared_ptr<const Vocabulary>;

// Union of the tokens across all segments. Throws EmptyCorpus when no
// segment yields a token.
VocabularyPtr build_vocab(std::span<const std::string> segments,
                          const TokenizerConfig& config = {});
// Same, over pre-tokenized segments (e.g. test identifiers used verbatim).
VocabularyPtr build_vocab_from_tokens(
    std::span<const std::vector<std::string>> token_segments);

struct TokenDistribution {
  VocabularyPtr vocab;
  std::vector<double> probs;
  double alpha = 0.0;
  long long total_raw_count = 0;
};

// P(w) = (c(w) + alpha) / (sum_v c(v) + alpha |V|); out-of-vocabulary
// tokens are ignored.
TokenDistribution distribution(std::string_view segment,
                               const VocabularyPtr& vocab, double alpha,
                               const TokenizerConfig& config = {});
TokenDistribution distribution_from_tokens(std::span<const std::string> tokens,
                                           const VocabularyPtr& vocab,
                                           double alpha);

// Base-2 divergences. Throw VocabMismatch when vocabularies differ.
double kl(const TokenDistribution& p, const TokenDistribution& q);
double jsd(const TokenDistribution& p, const TokenDistribution& q);
// psi = 1 - jsd
double similarity(const TokenDistribution& p, const TokenDistribution& q);

// Set Jaccard over word tokens; two empty token sets score 1.0.
double jaccard(std::string_view a, std::string_view b,
               const TokenizerConfig& config = {});

// Shannon entropy (bits) over raw word frequencies; 0 for empty input.
double entropy(std::string_view segment, const TokenizerConfig& config = {});

// Fraction of curr's distinct word n-grams that do not occur in prev.
double ngram_novelty(std::string_view prev, std::string_view curr, int n,
                     const TokenizerConfig& config = {});

}  // namespace pdi
