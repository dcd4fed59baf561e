#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alirector/common/rng.hpp"
#include "alirector/common/types.hpp"

namespace alirector::corpus {

struct GrammarConfig {
  std::size_t successors = 3;  // preferred successors per symbol
  double smoothing = 0.05;     // weight of the unigram back-off
  double zipf_exponent = 1.0;  // skew of the unigram distribution
};

// First-order Markov source over symbol indices [0, symbol_count). Each row
// mixes a sparse preferred-successor table with a Zipfian unigram back-off
// and forbids immediate repetition, so well-formed sentences follow a small
// set of learnable transitions while rare transitions still occur.
class BigramGrammar {
 public:
  BigramGrammar(std::size_t symbol_count, std::uint64_t seed, GrammarConfig config = {});

  std::size_t symbol_count() const { return n_; }
  double transition(std::size_t from, std::size_t to) const { return rows_[from * n_ + to]; }
  std::span<const double> unigram() const { return unigram_; }
  // Stationary distribution of the transition matrix (power iteration).
  std::span<const double> stationary() const { return stationary_; }

  // First symbol from the stationary distribution, then transitions, so
  // every position is marginally stationary.
  std::vector<std::size_t> sample(Rng& rng, std::size_t length) const;

 private:
  static std::size_t draw(std::span<const double> cdf, Rng& rng);

  std::size_t n_;
  std::vector<double> rows_;
  std::vector<double> row_cdfs_;
  std::vector<double> unigram_;
  std::vector<double> stationary_;
  std::vector<double> stationary_cdf_;
};

struct CleanSentence {
  Tokens tokens;
};

struct GenerationConfig {
  std::size_t count = 0;
  std::size_t vocab_size = 0;  // number of ordinary symbols
  std::size_t min_len = 0;
  std::size_t max_len = 0;
  std::uint64_t seed = 0;
  GrammarConfig grammar;
};

// Throws ConfigError on invalid bounds. Sentence i depends only on
// (seed, i).
std::vector<CleanSentence> generate_clean_corpus(const GenerationConfig& config);
// Sentences [first, first + count) of the same stream.
std::vector<CleanSentence> generate_clean_range(const GenerationConfig& config, std::size_t first,
                                                std::size_t count);

void validate(const GenerationConfig& config);

// Symbol index <-> token id for synthetic vocabularies.
Token symbol_token(std::size_t symbol_index);
std::size_t token_symbol(Token token);

}  // namespace alirector::corpus
