#include "alirector/corpus/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "alirector/common/error.hpp"
#include "alirector/corpus/vocab.hpp"

namespace alirector::corpus {
namespace {

constexpr std::uint64_t kGrammarStream = 0x6772616d6d6172ULL;
constexpr std::uint64_t kSentenceStream = 0x73656e74656e6365ULL;

std::vector<double> cumulative(std::span<const double> p) {
  std::vector<double> cdf(p.size());
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  cdf.back() = 1.0;
  return cdf;
}

}  // namespace

Token symbol_token(std::size_t symbol_index) {
  return static_cast<Token>(symbol_index) + kNumReserved;
}

std::size_t token_symbol(Token token) { return static_cast<std::size_t>(token - kNumReserved); }

BigramGrammar::BigramGrammar(std::size_t symbol_count, std::uint64_t seed, GrammarConfig config)
    : n_(symbol_count) {
  if (n_ < 2) throw ConfigError("grammar needs at least two symbols");
  if (config.successors == 0 || config.successors >= n_) {
    throw ConfigError("grammar successors must be in [1, symbol_count)");
  }
  if (config.smoothing <= 0.0 || config.smoothing >= 1.0) {
    throw ConfigError("grammar smoothing must be in (0, 1)");
  }
  Rng rng(derive_seed(seed, kGrammarStream));

  // Zipfian unigram over a random rank order.
  std::vector<std::size_t> order(n_);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n_ - 1; i > 0; --i) {
    std::swap(order[i], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i)))]);
  }
  unigram_.assign(n_, 0.0);
  for (std::size_t rank = 0; rank < n_; ++rank) {
    unigram_[order[rank]] = 1.0 / std::pow(static_cast<double>(rank + 1), config.zipf_exponent);
  }
  const double usum = std::accumulate(unigram_.begin(), unigram_.end(), 0.0);
  for (double& u : unigram_) u /= usum;

  rows_.assign(n_ * n_, 0.0);
  row_cdfs_.assign(n_ * n_, 0.0);
  for (std::size_t a = 0; a < n_; ++a) {
    double* row = &rows_[a * n_];
    std::vector<double> preferred(n_, 0.0);
    std::size_t chosen = 0;
    while (chosen < config.successors) {
      const auto b = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(n_ - 1)));
      if (b == a || preferred[b] > 0.0) continue;
      preferred[b] = 0.5 + uniform01(rng);
      ++chosen;
    }
    const double psum = std::accumulate(preferred.begin(), preferred.end(), 0.0);
    double total = 0.0;
    for (std::size_t b = 0; b < n_; ++b) {
      if (b == a) continue;
      row[b] = (1.0 - config.smoothing) * preferred[b] / psum + config.smoothing * unigram_[b];
      total += row[b];
    }
    for (std::size_t b = 0; b < n_; ++b) row[b] /= total;
    const auto cdf = cumulative({row, n_});
    std::copy(cdf.begin(), cdf.end(), row_cdfs_.begin() + static_cast<std::ptrdiff_t>(a * n_));
  }

  stationary_.assign(n_, 1.0 / static_cast<double>(n_));
  std::vector<double> next(n_);
  for (int iter = 0; iter < 100000; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t a = 0; a < n_; ++a) {
      for (std::size_t b = 0; b < n_; ++b) next[b] += stationary_[a] * rows_[a * n_ + b];
    }
    double delta = 0.0;
    for (std::size_t b = 0; b < n_; ++b) delta += std::abs(next[b] - stationary_[b]);
    stationary_.swap(next);
    if (delta < 1e-15) break;
  }
  stationary_cdf_ = cumulative(stationary_);
}

std::size_t BigramGrammar::draw(std::span<const double> cdf, Rng& rng) {
  const double u = uniform01(rng);
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::vector<std::size_t> BigramGrammar::sample(Rng& rng, std::size_t length) const {
  std::vector<std::size_t> out;
  out.reserve(length);
  if (length == 0) return out;
  out.push_back(draw(stationary_cdf_, rng));
  while (out.size() < length) {
    const std::size_t prev = out.back();
    out.push_back(draw({row_cdfs_.data() + prev * n_, n_}, rng));
  }
  return out;
}

void validate(const GenerationConfig& config) {
  if (config.count == 0) throw ConfigError("corpus count must be positive");
  if (config.min_len < 2 || config.min_len > config.max_len) {
    throw ConfigError("corpus lengths must satisfy 2 <= min_len <= max_len");
  }
  if (config.vocab_size < 10) throw ConfigError("corpus vocab_size must be at least 10");
  if (config.vocab_size > Vocab::max_synthetic_symbols()) {
    throw ConfigError("corpus vocab_size exceeds the synthetic alphabet");
  }
}

std::vector<CleanSentence> generate_clean_range(const GenerationConfig& config, std::size_t first,
                                                std::size_t count) {
  validate(config);
  const BigramGrammar grammar(config.vocab_size, config.seed, config.grammar);
  std::vector<CleanSentence> out;
  out.reserve(count);
  for (std::size_t i = first; i < first + count; ++i) {
    Rng rng(derive_seed(config.seed ^ kSentenceStream, i));
    const auto length = static_cast<std::size_t>(uniform_int(
        rng, static_cast<std::int64_t>(config.min_len), static_cast<std::int64_t>(config.max_len)));
    CleanSentence sentence;
    for (std::size_t s : grammar.sample(rng, length)) sentence.tokens.push_back(symbol_token(s));
    out.push_back(std::move(sentence));
  }
  return out;
}

std::vector<CleanSentence> generate_clean_corpus(const GenerationConfig& config) {
  return generate_clean_range(config, 0, config.count);
}

}  // namespace alirector::corpus
