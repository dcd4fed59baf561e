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

#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "alirector/common/error.hpp"
#include "alirector/common/rng.hpp"
#include "alirector/eval/edit.hpp"
#include "alirector/eval/extract.hpp"
#include "alirector/eval/render.hpp"
#include "alirector/eval/score.hpp"

namespace alirector::eval {
namespace {

Tokens toks(const std::string& s) {
  Tokens out;
  for (char c : s) out.push_back(static_cast<Token>(c));
  return out;
}

// Top-down recursion with a memo table; deliberately not the bottom-up
// table used by the extractor.
std::size_t reference_distance(const Tokens& a, const Tokens& b) {
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> memo((a.size() + 1) * (b.size() + 1), kUnset);
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    std::size_t& slot = memo[i * (b.size() + 1) + j];
    if (slot != kUnset) return slot;
    std::size_t best = go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min(best, go(i + 1, j) + 1);
    best = std::min(best, go(i, j + 1) + 1);
    slot = best;
    return best;
  };
  return go(0, 0);
}

std::size_t script_cost(const Tokens& a, const Tokens& b) {
  std::size_t cost = 0;
  for (const EditOp& op : align(a, b)) cost += op.kind == OpKind::kMatch ? 0 : 1;
  return cost;
}

Tokens random_tokens(Rng& rng, std::size_t max_len, int alphabet) {
  Tokens t(static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(max_len))));
  for (Token& x : t) x = static_cast<Token>(uniform_int(rng, 0, alphabet - 1));
  return t;
}

TEST(ExtractEdits, SingleDeletionIsRedundant) {
  const auto edits = extract_edits(toks("abcd"), toks("abd"));
  ASSERT_EQ(edits.size(), 1u);
  EXPECT_EQ(edits[0].type, EditType::kRedundant);
  EXPECT_EQ(edits[0].source_span, (Span{2, 3}));
  EXPECT_TRUE(edits[0].replacement.empty());
}

TEST(ExtractEdits, IdentityHasNoEdits) {
  EXPECT_TRUE(extract_edits(toks("abc"), toks("abc")).empty());
  EXPECT_TRUE(extract_edits({}, {}).empty());
}

TEST(ExtractEdits, AdjacentSwapIsWordOrder) {
  const auto edits = extract_edits(toks("ab"), toks("ba"));
  ASSERT_EQ(edits.size(), 1u);
  EXPECT_EQ(edits[0].type, EditType::kWordOrder);
  EXPECT_EQ(edits[0].source_span, (Span{0, 2}));
  EXPECT_EQ(edits[0].target_span, (Span{0, 2}));
}

TEST(ExtractEdits, InsertionIsMissing) {
  const auto edits = extract_edits(toks("ac"), toks("axc"));
  ASSERT_EQ(edits.size(), 1u);
  EXPECT_EQ(edits[0].type, EditType::kMissing);
  EXPECT_TRUE(edits[0].source_span.empty());
  EXPECT_EQ(edits[0].replacement, toks("x"));
}

TEST(ExtractEdits, AdjacentSameTypeOperationsMerge) {
  const auto edits = extract_edits(toks("abcdef"), toks("abef"));
  ASSERT_EQ(edits.size(), 1u);
  EXPECT_EQ(edits[0].type, EditType::kRedundant);
  EXPECT_EQ(edits[0].source_span, (Span{2, 4}));
}

TEST(ClassifyEdit, ShapesDecideType) {
  Edit insertion{EditType::kSubstitution, {1, 1}, {1, 2}, {}, toks("x")};
  EXPECT_EQ(classify_edit(insertion), EditType::kMissing);
  Edit deletion{EditType::kSubstitution, {0, 2}, {0, 0}, toks("xy"), {}};
  EXPECT_EQ(classify_edit(deletion), EditType::kRedundant);
  Edit swap{EditType::kSubstitution, {0, 2}, {0, 2}, toks("ab"), toks("ba")};
  EXPECT_EQ(classify_edit(swap), EditType::kWordOrder);
  Edit sub{EditType::kMissing, {0, 1}, {0, 1}, toks("a"), toks("b")};
  EXPECT_EQ(classify_edit(sub), EditType::kSubstitution);
}

TEST(ClassifyEdit, MalformedSpansThrow) {
  Edit bad{EditType::kSubstitution, {0, 2}, {0, 1}, toks("a"), toks("b")};
  EXPECT_THROW(classify_edit(bad), ContractError);
}

TEST(ExtractEdits, RoundTripOnRandomPairs) {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const Tokens src = random_tokens(rng, 40, 6);
    const Tokens hyp = random_tokens(rng, 40, 6);
    const auto edits = extract_edits(src, hyp);
    ASSERT_EQ(apply_edits(src, edits), hyp) << "pair " << i;
  }
}

TEST(ExtractEdits, RoundTripOnNearbyPairs) {
  // Random pairs are mostly disjoint; also cover pairs a few edits apart.
  Rng rng(12);
  for (int i = 0; i < 10000; ++i) {
    const Tokens src = random_tokens(rng, 40, 8);
    Tokens hyp = src;
    const int changes = static_cast<int>(uniform_int(rng, 0, 4));
    for (int c = 0; c < changes; ++c) {
      const auto pos = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(hyp.size())));
      switch (uniform_int(rng, 0, 3)) {
        case 0: hyp.insert(hyp.begin() + static_cast<std::ptrdiff_t>(pos), 9); break;
        case 1: if (pos < hyp.size()) hyp.erase(hyp.begin() + static_cast<std::ptrdiff_t>(pos)); break;
        case 2: if (pos < hyp.size()) hyp[pos] = 10; break;
        default: if (pos + 1 < hyp.size()) std::swap(hyp[pos], hyp[pos + 1]);
      }
    }
    const auto edits = extract_edits(src, hyp);
    ASSERT_EQ(apply_edits(src, edits), hyp) << "pair " << i;
    if (src == hyp) ASSERT_TRUE(edits.empty());
  }
}

TEST(ExtractEdits, ScriptCostIsMinimalForShortSequences) {
  // Every pair up to length 5 over {0,1,2,3}, plus random pairs up to 8.
  std::vector<Tokens> all{{}};
  for (std::size_t begin = 0; begin < all.size(); ++begin) {
    if (all[begin].size() == 5) continue;
    for (Token t = 0; t < 4; ++t) {
      Tokens next = all[begin];
      next.push_back(t);
      all.push_back(next);
    }
  }
  for (const Tokens& a : all) {
    for (const Tokens& b : all) {
      ASSERT_EQ(script_cost(a, b), reference_distance(a, b));
    }
  }
  Rng rng(13);
  for (int i = 0; i < 100000; ++i) {
    const Tokens a = random_tokens(rng, 8, 4);
    const Tokens b = random_tokens(rng, 8, 4);
    ASSERT_EQ(script_cost(a, b), reference_distance(a, b));
    ASSERT_EQ(edit_distance(a, b), reference_distance(a, b));
  }
}

TEST(MatchEdits, ExactMatchCounts) {
  const auto gold = extract_edits(toks("abcd"), toks("abd"));
  const auto same = match_edits(gold, gold);
  EXPECT_EQ(same.tp, 1);
  EXPECT_EQ(same.fp, 0);
  EXPECT_EQ(same.fn, 0);

  // Hypothesis fixes the R error and also rewrites the first token.
  const auto predicted = extract_edits(toks("abcd"), toks("xbd"));
  ASSERT_EQ(predicted.size(), 2u);
  const auto m = match_edits(gold, predicted);
  EXPECT_EQ(m.tp, 1);
  EXPECT_EQ(m.fp, 1);
  EXPECT_EQ(m.fn, 0);
  EXPECT_EQ(m.per_type.at(EditType::kSubstitution).fp, 1);
  const EvalReport r = make_report(m, 1);
  EXPECT_DOUBLE_EQ(r.precision, 50.0);
  EXPECT_DOUBLE_EQ(r.recall, 100.0);
}

TEST(MatchEdits, MissedGoldIsUndercorrection) {
  const auto gold = extract_edits(toks("ac"), toks("abc"));
  const auto m = match_edits(gold, {});
  EXPECT_EQ(m.fn, 1);
  EXPECT_EQ(m.per_type.at(EditType::kMissing).fn, 1);
  EXPECT_EQ(make_report(m, 1).undercorrections, 1);
}

TEST(FBeta, ReproducesPublishedTriples) {
  EXPECT_NEAR(f_beta(65.44, 31.27), 53.70, 0.01);
  EXPECT_NEAR(f_beta(68.11, 43.87), 61.33, 0.01);
  EXPECT_NEAR(f_beta(58.55, 39.74), 53.49, 0.01);
  EXPECT_DOUBLE_EQ(f_beta(40, 40), 40);
  EXPECT_DOUBLE_EQ(f_beta(0, 0), 0);
}

TEST(FBeta, LiesBetweenPrecisionAndRecall) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double p = 0.01 + 99.99 * uniform01(rng);
    const double r = 0.01 + 99.99 * uniform01(rng);
    const double f = f_beta(p, r);
    EXPECT_GE(f, std::min(p, r) - 1e-9);
    EXPECT_LE(f, std::max(p, r) + 1e-9);
  }
}

EvalReport counts_report(long m, long r, long s, long w) {
  EvalReport out;
  out.per_type[EditType::kMissing].fp = m;
  out.per_type[EditType::kRedundant].fp = r;
  out.per_type[EditType::kSubstitution].fp = s;
  out.per_type[EditType::kWordOrder].fp = w;
  out.fp = out.overcorrections = m + r + s + w;
  return out;
}

TEST(OvercorrectionReport, ReproducesPublishedReductions) {
  // Per-type counts 91/203/129/39 sum to 462; the system side to 366.
  std::map<std::string, EvalReport> systems{{"baseline", counts_report(91, 203, 129, 39)},
                                            {"system", counts_report(67, 152, 113, 34)}};
  const auto tables = overcorrection_report(systems, "baseline");
  ASSERT_EQ(tables.size(), 1u);
  std::map<std::string, double> change;
  for (const auto& row : tables[0].rows) change[row.label] = row.over_change.value();
  EXPECT_NEAR(change["All"], -20.8, 0.1);
  EXPECT_NEAR(change["R"], -25.1, 0.1);
  EXPECT_NEAR(change["M"], -26.4, 0.1);
  EXPECT_NEAR(change["S"], -12.4, 0.1);
  EXPECT_NEAR(change["W"], -12.8, 0.1);
}

TEST(OvercorrectionReport, EqualCountsAndZeroBaseline) {
  EXPECT_DOUBLE_EQ(relative_change(10, 10).value(), 0.0);
  EXPECT_FALSE(relative_change(0, 3).has_value());
  std::map<std::string, EvalReport> one{{"a", EvalReport{}}};
  EXPECT_THROW(overcorrection_report(one, "a"), ContractError);
}

TEST(ScoreCorpus, PerfectAndNoOpSystems) {
  const std::vector<Tokens> src{toks("abcd"), toks("xyz")};
  const std::vector<Tokens> gold{toks("abd"), toks("xz")};
  const EvalReport perfect = score_corpus(src, gold, gold);
  EXPECT_DOUBLE_EQ(perfect.precision, 100.0);
  EXPECT_DOUBLE_EQ(perfect.recall, 100.0);
  EXPECT_DOUBLE_EQ(perfect.f05, 100.0);
  const EvalReport noop = score_corpus(src, gold, src);
  EXPECT_EQ(noop.tp, 0);
  EXPECT_EQ(noop.fp, 0);
  EXPECT_DOUBLE_EQ(noop.precision, 0.0);
  EXPECT_DOUBLE_EQ(noop.recall, 0.0);
}

TEST(ScoreCorpus, TotalsAreSumsOfSentences) {
  const std::vector<ScoredTriple> corpus{{toks("abcd"), toks("abd"), toks("xbd")},
                                         {toks("hello"), toks("helo"), toks("hello")},
                                         {toks("ba"), toks("ab"), toks("ab")}};
  long tp = 0, fp = 0, fn = 0;
  for (const auto& t : corpus) {
    const auto m = match_edits(extract_edits(t.source, t.target), extract_edits(t.source, t.hypothesis));
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
  }
  const EvalReport r = score_corpus(corpus);
  EXPECT_EQ(r.tp, tp);
  EXPECT_EQ(r.fp, fp);
  EXPECT_EQ(r.fn, fn);
  EXPECT_EQ(r.tp, 2);
  EXPECT_EQ(r.fp, 1);
  EXPECT_EQ(r.fn, 1);
  EXPECT_EQ(r.sentences, 3);
  EXPECT_EQ(report_to_json(r), report_to_json(score_corpus(corpus)));
}

TEST(ScoreCorpus, LengthMismatchThrows) {
  EXPECT_THROW(score_corpus({toks("a")}, {}, {toks("a")}), ContractError);
}

TEST(RenderDiff, MarksEdits) {
  const auto text = render_diff(toks("abcd"), toks("abd"),
                                [](Token t) { return std::string(1, static_cast<char>(t)); });
  EXPECT_NE(text.find('c'), std::string::npos);
}

}  // namespace
}  // namespace alirector::eval
