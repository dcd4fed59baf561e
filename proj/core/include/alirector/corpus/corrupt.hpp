#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "alirector/common/types.hpp"
#include "alirector/corpus/grammar.hpp"
#include "alirector/eval/edit.hpp"

namespace alirector::corpus {

enum class CorruptionKind { kMissing, kRedundant, kSubstitution, kWordOrder };

std::optional<CorruptionKind> parse_corruption_kind(std::string_view name);
std::string_view to_string(CorruptionKind kind);
eval::EditType edit_type_of(CorruptionKind kind);

// `rate` is the probability that one corruption pass applies this rule;
// `span_len` bounds the number of affected tokens (for word order, the total
// length of the two swapped adjacent spans).
struct CorruptionRule {
  CorruptionKind kind = CorruptionKind::kSubstitution;
  double rate = 0.0;
  std::size_t span_len = 1;
};

// A source/target pair with the gold edits turning source into target.
struct ParallelExample {
  Tokens source;
  Tokens target;
  std::vector<eval::Edit> applied_edits;
  std::uint64_t example_seed = 0;
  // Initial correction, present for alignment triples.
  std::optional<Tokens> prediction;

  bool clean() const { return applied_edits.empty(); }
};

struct CorruptionOptions {
  std::size_t passes = 1;           // independent rule draws per sentence
  std::size_t symbol_count = 0;     // range for random replacement symbols
  double duplicate_share = 0.5;     // redundant insertions copying a neighbour
};

// Throws ConfigError when a rate is outside [0, 1], the rates sum above 1 or
// a span length is invalid.
void validate_rules(std::span<const CorruptionRule> rules);

// Each pass picks at most one rule (rule k with probability rate_k) and
// applies it to a region not touched by earlier passes. Examples where no
// rule fires stay clean.
ParallelExample corrupt(const CleanSentence& sentence, std::span<const CorruptionRule> rules,
                        std::uint64_t rng_seed, const CorruptionOptions& options);

// Per-pass rates for the given relative rule weights such that a sentence
// stays clean with probability `clean_fraction` after `passes` passes.
std::vector<CorruptionRule> rules_for_clean_fraction(std::vector<CorruptionRule> weighted,
                                                     double clean_fraction, std::size_t passes);

// Probability that corrupt() leaves a sentence clean.
double expected_clean_fraction(std::span<const CorruptionRule> rules, std::size_t passes);

}  // namespace alirector::corpus
