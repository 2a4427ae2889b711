#include "pdi/textstats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "pdi/errors.hpp"

namespace pdi {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

void require_same_vocab(const TokenDistribution& p,
                        const TokenDistribution& q) {
  if (!p.vocab || !q.vocab ||
      (p.vocab != q.vocab && !(*p.vocab == *q.vocab)) ||
      p.probs.size() != q.probs.size()) {
    throw Error(ErrorCode::VocabMismatch,
                "distributions are defined over different vocabularies");
  }
}

std::set<std::string> token_set(std::string_view text,
                                const TokenizerConfig& config) {
  auto tokens = tokenize(text, config);
  return {tokens.begin(), tokens.end()};
}

std::set<std::vector<std::string>> ngram_set(
    const std::vector<std::string>& tokens, int n) {
  std::set<std::vector<std::string>> out;
  if (n <= 0 || tokens.size() < static_cast<std::size_t>(n)) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    out.emplace(tokens.begin() + i, tokens.begin() + i + n);
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text,
                                  const TokenizerConfig& config) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      if (config.lowercase && c >= 'A' && c <= 'Z') {
        current.push_back(static_cast<char>(c - 'A' + 'a'));
      } else {
        current.push_back(ch);
      }
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void CompensatedSum::add(long double x) {
  const long double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  std::sort(tokens_.begin(), tokens_.end());
  tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
}

std::size_t Vocabulary::index_of(std::string_view token) const {
  auto it = std::lower_bound(tokens_.begin(), tokens_.end(), token);
  if (it != tokens_.end() && *it == token) {
    return static_cast<std::size_t>(it - tokens_.begin());
  }
  return tokens_.size();
}

VocabularyPtr build_vocab(std::span<const std::string> segments,
                          const TokenizerConfig& config) {
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(segments.size());
  for (const auto& s : segments) tokenized.push_back(tokenize(s, config));
  return build_vocab_from_tokens(tokenized);
}

VocabularyPtr build_vocab_from_tokens(
    std::span<const std::vector<std::string>> token_segments) {
  std::vector<std::string> all;
  for (const auto& seg : token_segments) {
    all.insert(all.end(), seg.begin(), seg.end());
  }
  if (all.empty()) {
    throw Error(ErrorCode::EmptyCorpus, "no tokens in any segment");
  }
  return std::make_shared<const Vocabulary>(std::move(all));
}

TokenDistribution distribution(std::string_view segment,
                               const VocabularyPtr& vocab, double alpha,
                               const TokenizerConfig& config) {
  const auto tokens = tokenize(segment, config);
  return distribution_from_tokens(tokens, vocab, alpha);
}

TokenDistribution distribution_from_tokens(std::span<const std::string> tokens,
                                           const VocabularyPtr& vocab,
                                           double alpha) {
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::NonPositiveAlpha, "alpha must be > 0");
  }
  if (!vocab || vocab->size() == 0) {
    throw Error(ErrorCode::EmptyCorpus, "vocabulary is empty");
  }
  std::vector<long long> counts(vocab->size(), 0);
  long long total = 0;
  for (const auto& t : tokens) {
    const auto idx = vocab->index_of(t);
    if (idx == vocab->size()) continue;
    ++counts[idx];
    ++total;
  }
  const long double denom =
      static_cast<long double>(total) +
      static_cast<long double>(alpha) * static_cast<long double>(vocab->size());
  TokenDistribution d;
  d.vocab = vocab;
  d.alpha = alpha;
  d.total_raw_count = total;
  d.probs.resize(vocab->size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    d.probs[i] = static_cast<double>(
        (static_cast<long double>(counts[i]) + alpha) / denom);
  }
  return d;
}

double kl(const TokenDistribution& p, const TokenDistribution& q) {
  require_same_vocab(p, q);
  CompensatedSum sum;
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    const long double pi = p.probs[i];
    if (pi == 0.0L) continue;
    sum.add(pi * std::log2(pi / static_cast<long double>(q.probs[i])));
  }
  return std::max(0.0, static_cast<double>(sum.value()));
}

double jsd(const TokenDistribution& p, const TokenDistribution& q) {
  require_same_vocab(p, q);
  CompensatedSum sum;
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    const long double pi = p.probs[i];
    const long double qi = q.probs[i];
    const long double mi = (pi + qi) / 2.0L;
    if (pi > 0.0L) sum.add(0.5L * pi * std::log2(pi / mi));
    if (qi > 0.0L) sum.add(0.5L * qi * std::log2(qi / mi));
  }
  return std::clamp(static_cast<double>(sum.value()), 0.0, 1.0);
}

double similarity(const TokenDistribution& p, const TokenDistribution& q) {
  return 1.0 - jsd(p, q);
}

double jaccard(std::string_view a, std::string_view b,
               const TokenizerConfig& config) {
  const auto sa = token_set(a, config);
  const auto sb = token_set(b, config);
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t shared = 0;
  for (const auto& t : sa) shared += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - shared;
  return static_cast<double>(shared) / static_cast<double>(uni);
}

double entropy(std::string_view segment, const TokenizerConfig& config) {
  const auto tokens = tokenize(segment, config);
  if (tokens.empty()) return 0.0;
  std::map<std::string, long long> counts;
  for (const auto& t : tokens) ++counts[t];
  const long double n = static_cast<long double>(tokens.size());
  CompensatedSum sum;
  for (const auto& [_, c] : counts) {
    const long double pw = static_cast<long double>(c) / n;
    sum.add(-pw * std::log2(pw));
  }
  return std::max(0.0, static_cast<double>(sum.value()));
}

double ngram_novelty(std::string_view prev, std::string_view curr, int n,
                     const TokenizerConfig& config) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n-gram order must be >= 1");
  const auto curr_grams = ngram_set(tokenize(curr, config), n);
  if (curr_grams.empty()) return 0.0;
  const auto prev_grams = ngram_set(tokenize(prev, config), n);
  std::size_t fresh = 0;
  for (const auto& g : curr_grams) fresh += prev_grams.count(g) == 0 ? 1 : 0;
  return static_cast<double>(fresh) / static_cast<double>(curr_grams.size());
}

}  // namespace pdi
