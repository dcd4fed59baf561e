// Copyright 2026 The Alirector Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "alirector/common/error.hpp"
#include "alirector/common/kv.hpp"
#include "alirector/corpus/corrupt.hpp"
#include "alirector/corpus/dataset.hpp"
#include "alirector/corpus/grammar.hpp"
#include "alirector/corpus/vocab.hpp"
#include "alirector/eval/edit.hpp"

namespace alirector::corpus {
namespace {

GenerationConfig small_generation(std::size_t count, std::size_t vocab, std::size_t min_len,
                                  std::size_t max_len, std::uint64_t seed) {
  GenerationConfig g;
  g.count = count;
  g.vocab_size = vocab;
  g.min_len = min_len;
  g.max_len = max_len;
  g.seed = seed;
  return g;
}

CleanSentence sentence_of(std::initializer_list<std::size_t> symbols) {
  CleanSentence s;
  for (std::size_t x : symbols) s.tokens.push_back(symbol_token(x));
  return s;
}

CorruptionOptions options(std::size_t symbols = 20) {
  CorruptionOptions o;
  o.symbol_count = symbols;
  return o;
}

TEST(GenerateClean, LengthBoundForcesLength) {
  const auto out = generate_clean_corpus(small_generation(1, 20, 5, 5, 7));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].tokens.size(), 5u);
}

TEST(GenerateClean, Deterministic) {
  const auto g = small_generation(50, 20, 3, 9, 7);
  const auto a = generate_clean_corpus(g);
  const auto b = generate_clean_corpus(g);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].tokens, b[i].tokens);
  // Any slice reproduces the same sentences.
  const auto tail = generate_clean_range(g, 20, 10);
  for (std::size_t i = 0; i < tail.size(); ++i) EXPECT_EQ(tail[i].tokens, a[20 + i].tokens);
}

TEST(GenerateClean, InvalidBoundsThrow) {
  EXPECT_THROW(generate_clean_corpus(small_generation(0, 20, 3, 5, 1)), ConfigError);
  EXPECT_THROW(generate_clean_corpus(small_generation(5, 20, 1, 5, 1)), ConfigError);
  EXPECT_THROW(generate_clean_corpus(small_generation(5, 20, 6, 5, 1)), ConfigError);
  EXPECT_THROW(generate_clean_corpus(small_generation(5, 9, 3, 5, 1)), ConfigError);
}

TEST(GenerateClean, TokenFrequenciesFollowStationaryDistribution) {
  // Positions of different sentences are independent draws from the
  // stationary law; test a few fixed positions with a pooled chi-square.
  const auto g = small_generation(10000, 20, 6, 6, 31);
  const auto corpus = generate_clean_corpus(g);
  const BigramGrammar grammar(g.vocab_size, g.seed, g.grammar);
  const auto pi = grammar.stationary();
  for (std::size_t position : {0u, 2u, 5u}) {
    std::vector<double> counts(g.vocab_size, 0.0);
    for (const auto& s : corpus) counts[token_symbol(s.tokens[position])] += 1.0;
    double chi2 = 0.0;
    std::size_t cells = 0;
    double pooled_obs = 0.0, pooled_exp = 0.0;
    for (std::size_t k = 0; k < g.vocab_size; ++k) {
      const double expected = pi[k] * static_cast<double>(corpus.size());
      if (expected < 5.0) {
        pooled_obs += counts[k];
        pooled_exp += expected;
        continue;
      }
      chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
      ++cells;
    }
    if (pooled_exp > 0.0) {
      chi2 += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
      ++cells;
    }
    const double df = static_cast<double>(cells - 1);
    EXPECT_LT(chi2, df + 3.0 * std::sqrt(2.0 * df)) << "position " << position;
  }
}

TEST(Corrupt, ZeroRatesLeaveSentenceClean) {
  const std::vector<CorruptionRule> rules{{CorruptionKind::kMissing, 0.0, 1},
                                          {CorruptionKind::kSubstitution, 0.0, 1}};
  const auto ex = corrupt(sentence_of({0, 1, 2, 3, 4}), rules, 3, options());
  EXPECT_EQ(ex.source, ex.target);
  EXPECT_TRUE(ex.applied_edits.empty());
}

TEST(Corrupt, MissingRuleDropsOneToken) {
  const std::vector<CorruptionRule> rules{{CorruptionKind::kMissing, 1.0, 1}};
  const CleanSentence s = sentence_of({0, 1, 2, 3, 4});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto ex = corrupt(s, rules, seed, options());
    ASSERT_EQ(ex.source.size(), 4u);
    ASSERT_EQ(ex.applied_edits.size(), 1u);
    EXPECT_EQ(ex.applied_edits[0].type, eval::EditType::kMissing);
    // The source is the target with exactly one position removed.
    const std::size_t gap = ex.applied_edits[0].source_span.begin;
    Tokens rebuilt = ex.source;
    rebuilt.insert(rebuilt.begin() + static_cast<std::ptrdiff_t>(gap), ex.applied_edits[0].replacement.begin(),
                   ex.applied_edits[0].replacement.end());
    EXPECT_EQ(rebuilt, ex.target);
  }
}

TEST(Corrupt, WordOrderRuleSwapsAdjacentPair) {
  const std::vector<CorruptionRule> rules{{CorruptionKind::kWordOrder, 1.0, 2}};
  const CleanSentence s = sentence_of({0, 1, 2, 3, 4, 5});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto ex = corrupt(s, rules, seed, options());
    ASSERT_EQ(ex.applied_edits.size(), 1u);
    EXPECT_EQ(ex.applied_edits[0].type, eval::EditType::kWordOrder);
    std::size_t diffs = 0, first = 0;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (ex.source[i] != ex.target[i]) {
        if (diffs++ == 0) first = i;
      }
    }
    ASSERT_EQ(diffs, 2u);
    EXPECT_EQ(ex.source[first], ex.target[first + 1]);
    EXPECT_EQ(ex.source[first + 1], ex.target[first]);
  }
}

TEST(Corrupt, InvalidRatesThrow) {
  const std::vector<CorruptionRule> bad{{CorruptionKind::kMissing, 1.5, 1}};
  EXPECT_THROW(corrupt(sentence_of({0, 1, 2}), bad, 1, options()), ConfigError);
  const std::vector<CorruptionRule> negative{{CorruptionKind::kMissing, -0.1, 1}};
  EXPECT_THROW(validate_rules(negative), ConfigError);
}

TEST(Corrupt, RoundTripAndTypeFidelity) {
  const auto clean = generate_clean_corpus(small_generation(10000, 30, 4, 20, 5));
  const CorruptionKind kinds[] = {CorruptionKind::kMissing, CorruptionKind::kRedundant,
                                  CorruptionKind::kSubstitution, CorruptionKind::kWordOrder};
  const std::vector<CorruptionRule> mixed{{CorruptionKind::kMissing, 0.2, 2},
                                          {CorruptionKind::kRedundant, 0.2, 2},
                                          {CorruptionKind::kSubstitution, 0.2, 2},
                                          {CorruptionKind::kWordOrder, 0.2, 3}};
  CorruptionOptions multi = options(30);
  multi.passes = 3;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const auto ex = corrupt(clean[i], mixed, i, multi);
    ASSERT_EQ(eval::apply_edits(ex.source, ex.applied_edits), ex.target) << "example " << i;
    const CorruptionKind kind = kinds[i % 4];
    const std::vector<CorruptionRule> only{{kind, 0.9, 2}};
    const auto single = corrupt(clean[i], only, i, options(30));
    ASSERT_EQ(eval::apply_edits(single.source, single.applied_edits), single.target);
    for (const auto& e : single.applied_edits) ASSERT_EQ(e.type, edit_type_of(kind));
  }
}

TEST(Corrupt, CleanFractionMatchesExpectation) {
  const auto clean = generate_clean_corpus(small_generation(10000, 30, 6, 16, 8));
  const auto rules = rules_for_clean_fraction({{CorruptionKind::kMissing, 1, 1},
                                               {CorruptionKind::kRedundant, 1, 1},
                                               {CorruptionKind::kSubstitution, 2, 1},
                                               {CorruptionKind::kWordOrder, 1, 2}},
                                              0.45, 2);
  CorruptionOptions o = options(30);
  o.passes = 2;
  const double expected = expected_clean_fraction(rules, 2);
  EXPECT_NEAR(expected, 0.45, 1e-12);
  std::size_t clean_count = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) clean_count += corrupt(clean[i], rules, i, o).clean() ? 1 : 0;
  const double n = static_cast<double>(clean.size());
  const double sigma = std::sqrt(n * expected * (1 - expected));
  EXPECT_NEAR(static_cast<double>(clean_count), n * expected, 3 * sigma);
}

std::vector<ParallelExample> numbered(std::size_t n) {
  std::vector<ParallelExample> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].source = out[i].target = {static_cast<Token>(i)};
  return out;
}

TEST(SplitDataset, RatioAndDisjointness) {
  const auto split = split_dataset(numbered(100), 0.8, 3);
  EXPECT_EQ(split.correction_train.size(), 80u);
  EXPECT_EQ(split.alignment_train.size(), 20u);
  std::set<Token> seen;
  for (const auto* part : {&split.correction_train, &split.alignment_train}) {
    for (const auto& e : *part) EXPECT_TRUE(seen.insert(e.source[0]).second);
  }
  EXPECT_EQ(seen.size(), 100u);

  const auto tiny = split_dataset(numbered(2), 0.5, 3);
  EXPECT_EQ(tiny.correction_train.size(), 1u);
  EXPECT_EQ(tiny.alignment_train.size(), 1u);
}

TEST(SplitDataset, DeterministicAndSeeded) {
  const auto a = split_dataset(numbered(50), 0.8, 9);
  const auto b = split_dataset(numbered(50), 0.8, 9);
  const auto c = split_dataset(numbered(50), 0.8, 10);
  auto ids = [](const std::vector<ParallelExample>& v) {
    Tokens out;
    for (const auto& e : v) out.push_back(e.source[0]);
    return out;
  };
  EXPECT_EQ(ids(a.correction_train), ids(b.correction_train));
  EXPECT_NE(ids(a.correction_train), ids(c.correction_train));
}

TEST(SplitDataset, TooFewExamplesThrow) {
  EXPECT_THROW(split_dataset(numbered(1), 0.8, 1), SplitError);
  EXPECT_THROW(split_dataset(numbered(10), 1.0, 1), ConfigError);
}

TEST(ParallelJsonl, ParsesRecordsAndRecomputesEdits) {
  Vocab vocab = Vocab::synthetic(10);
  const std::string a = vocab.symbol(symbol_token(0));
  const std::string b = vocab.symbol(symbol_token(1));
  const std::string text = "{\"source\":\"" + a + b + "\",\"target\":\"" + a + b + "\"}\n" +
                           "{\"source\":\"" + a + b + "\",\"target\":\"" + b + "\"}\n";
  const auto examples = parse_parallel_jsonl(text, vocab);
  ASSERT_EQ(examples.size(), 2u);
  EXPECT_TRUE(examples[0].applied_edits.empty());
  ASSERT_EQ(examples[1].applied_edits.size(), 1u);
  EXPECT_EQ(examples[1].applied_edits[0].type, eval::EditType::kRedundant);
  EXPECT_TRUE(parse_parallel_jsonl("", vocab).empty());
}

TEST(ParallelJsonl, MalformedLineNamesLine) {
  Vocab vocab = Vocab::synthetic(10);
  try {
    parse_parallel_jsonl("{\"source\":\"\",\"target\":\"\"}\n{oops\n", vocab, "f.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(ParallelJsonl, UnknownCharactersGoToOverflow) {
  Vocab vocab = Vocab::synthetic(10);
  const auto before = vocab.size();
  const auto examples = parse_parallel_jsonl("{\"source\":\"\xe4\xb8\xad\",\"target\":\"\xe4\xb8\xad\"}", vocab);
  ASSERT_EQ(examples.size(), 1u);
  EXPECT_EQ(vocab.size(), before + 1);
  EXPECT_EQ(vocab.overflow_count(), 1u);
}

TEST(ParallelJsonl, WriteThenLoadRoundTrips) {
  CorpusConfig config = CorpusConfig::from_kv(KeyValues::parse(
      "corpus.count = 40\ncorpus.dev_count = 5\ncorpus.test_count = 5\ncorpus.vocab_size = 12\n"
      "corpus.min_len = 3\ncorpus.max_len = 8\nseed = 4\n"));
  const GeneratedCorpus g = generate_corpus(config);
  const auto path = std::filesystem::temp_directory_path() / "alirector_corpus_roundtrip.jsonl";
  write_parallel_jsonl(path, g.split.correction_train, g.vocab, "{\"note\":1}");
  Vocab vocab = g.vocab;
  std::string header;
  const auto back = load_parallel_jsonl(path, vocab, &header);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), g.split.correction_train.size());
  EXPECT_EQ(header, "{\"note\":1}");
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].source, g.split.correction_train[i].source);
    EXPECT_EQ(back[i].target, g.split.correction_train[i].target);
    EXPECT_EQ(back[i].applied_edits, g.split.correction_train[i].applied_edits);
  }
  EXPECT_EQ(g.split.correction_train.size(), 32u);
  EXPECT_EQ(g.split.dev.size(), 5u);
  EXPECT_EQ(g.split.test.size(), 5u);
}

TEST(Vocab, JsonRoundTrip) {
  Vocab v = Vocab::synthetic(15);
  v.intern("\xe4\xb8\xad");
  EXPECT_EQ(Vocab::from_json(v.to_json()), v);
  EXPECT_EQ(v.decode(v.encode_known(v.symbol(symbol_token(3)))), v.symbol(symbol_token(3)));
}

}  // namespace
}  // namespace alirector::corpus
