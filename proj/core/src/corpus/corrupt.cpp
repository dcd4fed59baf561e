#include "alirector/corpus/corrupt.hpp"

#include <algorithm>
#include <cmath>

#include "alirector/common/error.hpp"
#include "alirector/common/rng.hpp"

namespace alirector::corpus {
namespace {

constexpr int kPlacementAttempts = 20;

// A corruption planned in target coordinates. Redundant insertions have
// length 0 in the target and sit before target[start].
struct Planned {
  CorruptionKind kind;
  std::size_t start;
  std::size_t length;
  Tokens source_tokens;
};

Token random_symbol(Rng& rng, std::size_t symbol_count) {
  return symbol_token(static_cast<std::size_t>(
      uniform_int(rng, 0, static_cast<std::int64_t>(symbol_count) - 1)));
}

bool is_permutation_of(Tokens a, Tokens b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

}  // namespace

std::optional<CorruptionKind> parse_corruption_kind(std::string_view name) {
  if (name == "missing") return CorruptionKind::kMissing;
  if (name == "redundant") return CorruptionKind::kRedundant;
  if (name == "substitution") return CorruptionKind::kSubstitution;
  if (name == "word_order") return CorruptionKind::kWordOrder;
  return std::nullopt;
}

std::string_view to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kMissing:
      return "missing";
    case CorruptionKind::kRedundant:
      return "redundant";
    case CorruptionKind::kSubstitution:
      return "substitution";
    case CorruptionKind::kWordOrder:
      return "word_order";
  }
  return "unknown";
}

eval::EditType edit_type_of(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kMissing:
      return eval::EditType::kMissing;
    case CorruptionKind::kRedundant:
      return eval::EditType::kRedundant;
    case CorruptionKind::kSubstitution:
      return eval::EditType::kSubstitution;
    case CorruptionKind::kWordOrder:
      return eval::EditType::kWordOrder;
  }
  return eval::EditType::kSubstitution;
}

void validate_rules(std::span<const CorruptionRule> rules) {
  double total = 0.0;
  for (const CorruptionRule& rule : rules) {
    if (!(rule.rate >= 0.0 && rule.rate <= 1.0)) {
      throw ConfigError("corruption rate for " + std::string(to_string(rule.kind)) +
                        " must be in [0, 1]");
    }
    if (rule.span_len == 0) throw ConfigError("corruption span_len must be positive");
    if (rule.kind == CorruptionKind::kWordOrder && rule.span_len < 2) {
      throw ConfigError("word_order span_len must be at least 2");
    }
    total += rule.rate;
  }
  if (total > 1.0 + 1e-12) {
    throw ConfigError("corruption rates sum to more than 1 within a pass");
  }
}

ParallelExample corrupt(const CleanSentence& sentence, std::span<const CorruptionRule> rules,
                        std::uint64_t rng_seed, const CorruptionOptions& options) {
  validate_rules(rules);
  const Tokens& target = sentence.tokens;
  if (target.empty()) throw ContractError("corrupt: sentence is empty");
  if (options.symbol_count < 2) throw ConfigError("corrupt: symbol_count must be at least 2");

  Rng rng(rng_seed);
  const std::size_t n = target.size();
  std::vector<bool> occupied(n, false);
  std::vector<Planned> plans;
  std::size_t deleted = 0;

  for (std::size_t pass = 0; pass < options.passes; ++pass) {
    const double u = uniform01(rng);
    double cumulative = 0.0;
    const CorruptionRule* rule = nullptr;
    for (const CorruptionRule& r : rules) {
      cumulative += r.rate;
      if (u < cumulative) {
        rule = &r;
        break;
      }
    }
    if (rule == nullptr) continue;

    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      const std::size_t min_len = rule->kind == CorruptionKind::kWordOrder ? 2 : 1;
      const auto length = static_cast<std::size_t>(uniform_int(
          rng, static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(rule->span_len)));
      const bool insertion = rule->kind == CorruptionKind::kRedundant;
      const std::size_t extent = insertion ? 0 : length;
      if (extent > n) continue;
      if (rule->kind == CorruptionKind::kMissing && deleted + length >= n) continue;
      const auto start = static_cast<std::size_t>(
          uniform_int(rng, 0, static_cast<std::int64_t>(n - extent)));

      // The touched region plus one neighbour on each side must be free, so
      // planned edits never overlap or abut.
      const std::size_t lo = start == 0 ? 0 : start - 1;
      const std::size_t hi = std::min(n - 1, start + extent);
      bool free = true;
      for (std::size_t i = lo; i <= hi; ++i) free = free && !occupied[i];
      if (!free) continue;

      Tokens tokens;
      bool ok = true;
      switch (rule->kind) {
        case CorruptionKind::kMissing:
          break;
        case CorruptionKind::kRedundant:
          for (std::size_t i = 0; i < length; ++i) {
            if (uniform01(rng) < options.duplicate_share) {
              tokens.push_back(start > 0 ? target[start - 1] : target[0]);
            } else {
              tokens.push_back(random_symbol(rng, options.symbol_count));
            }
          }
          break;
        case CorruptionKind::kSubstitution: {
          const Tokens original(target.begin() + static_cast<std::ptrdiff_t>(start),
                                target.begin() + static_cast<std::ptrdiff_t>(start + length));
          for (std::size_t i = 0; i < length; ++i) {
            Token t = random_symbol(rng, options.symbol_count);
            while (t == original[i]) t = random_symbol(rng, options.symbol_count);
            tokens.push_back(t);
          }
          ok = length == 1 || !is_permutation_of(tokens, original);
          break;
        }
        case CorruptionKind::kWordOrder: {
          const auto split = static_cast<std::size_t>(
              uniform_int(rng, 1, static_cast<std::int64_t>(length) - 1));
          tokens.assign(target.begin() + static_cast<std::ptrdiff_t>(start + split),
                        target.begin() + static_cast<std::ptrdiff_t>(start + length));
          tokens.insert(tokens.end(), target.begin() + static_cast<std::ptrdiff_t>(start),
                        target.begin() + static_cast<std::ptrdiff_t>(start + split));
          ok = !std::equal(tokens.begin(), tokens.end(),
                           target.begin() + static_cast<std::ptrdiff_t>(start));
          break;
        }
      }
      if (!ok) continue;

      for (std::size_t i = lo; i <= hi; ++i) occupied[i] = true;
      if (rule->kind == CorruptionKind::kMissing) deleted += length;
      plans.push_back({rule->kind, start, extent, std::move(tokens)});
      break;
    }
  }

  std::sort(plans.begin(), plans.end(),
            [](const Planned& a, const Planned& b) { return a.start < b.start; });

  ParallelExample example;
  example.target = target;
  example.example_seed = rng_seed;
  std::size_t cursor = 0;
  for (Planned& plan : plans) {
    example.source.insert(example.source.end(), target.begin() + static_cast<std::ptrdiff_t>(cursor),
                          target.begin() + static_cast<std::ptrdiff_t>(plan.start));
    const std::size_t p = example.source.size();
    eval::Edit edit;
    edit.type = edit_type_of(plan.kind);
    edit.source_span = {p, p + plan.source_tokens.size()};
    edit.target_span = {plan.start, plan.start + plan.length};
    edit.original = plan.source_tokens;
    edit.replacement.assign(target.begin() + static_cast<std::ptrdiff_t>(plan.start),
                            target.begin() + static_cast<std::ptrdiff_t>(plan.start + plan.length));
    example.source.insert(example.source.end(), plan.source_tokens.begin(),
                          plan.source_tokens.end());
    example.applied_edits.push_back(std::move(edit));
    cursor = plan.start + plan.length;
  }
  example.source.insert(example.source.end(), target.begin() + static_cast<std::ptrdiff_t>(cursor),
                        target.end());
  return example;
}

std::vector<CorruptionRule> rules_for_clean_fraction(std::vector<CorruptionRule> weighted,
                                                     double clean_fraction, std::size_t passes) {
  if (!(clean_fraction >= 0.0 && clean_fraction <= 1.0)) {
    throw ConfigError("clean_fraction must be in [0, 1]");
  }
  if (passes == 0) throw ConfigError("corruption passes must be positive");
  double weight_sum = 0.0;
  for (const CorruptionRule& r : weighted) {
    if (r.rate < 0.0) throw ConfigError("corruption weights must be non-negative");
    weight_sum += r.rate;
  }
  const double per_pass_clean = std::pow(clean_fraction, 1.0 / static_cast<double>(passes));
  const double fire = 1.0 - per_pass_clean;
  for (CorruptionRule& r : weighted) {
    r.rate = weight_sum > 0.0 ? fire * r.rate / weight_sum : 0.0;
  }
  return weighted;
}

double expected_clean_fraction(std::span<const CorruptionRule> rules, std::size_t passes) {
  double fire = 0.0;
  for (const CorruptionRule& r : rules) fire += r.rate;
  return std::pow(1.0 - fire, static_cast<double>(passes));
}

}  // namespace alirector::corpus
