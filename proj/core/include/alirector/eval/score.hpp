#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "alirector/common/types.hpp"
#include "alirector/eval/edit.hpp"

namespace alirector::eval {

struct TypeCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  double precision() const;  // percentage
  bool operator==(const TypeCounts&) const = default;
};

struct MatchResult {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  std::map<EditType, TypeCounts> per_type;
};

// Exact matching on (type, source span, replacement). Unmatched predictions
// are false positives attributed to their own type; unmatched gold edits are
// false negatives attributed to the gold type.
MatchResult match_edits(const std::vector<Edit>& gold, const std::vector<Edit>& predicted);

// F-beta on percentages; 0 when both inputs are 0.
double f_beta(double precision, double recall, double beta = 0.5);

struct EvalReport {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 0.0;  // percentages in [0, 100]
  double recall = 0.0;
  double f05 = 0.0;
  std::map<EditType, TypeCounts> per_type;
  long overcorrections = 0;   // == fp
  long undercorrections = 0;  // == fn
  long sentences = 0;
};

EvalReport make_report(const MatchResult& counts, long sentences);

struct ScoredTriple {
  Tokens source;
  Tokens target;
  Tokens hypothesis;
};

// Micro-averaged corpus score: gold edits are extracted from source->target,
// predicted edits from source->hypothesis.
EvalReport score_corpus(const std::vector<ScoredTriple>& triples);
EvalReport score_corpus(const std::vector<Tokens>& sources, const std::vector<Tokens>& targets,
                        const std::vector<Tokens>& hypotheses);

// Relative change (b - a) / a in percent; empty when the baseline count is 0.
std::optional<double> relative_change(long baseline, long system);

struct ComparisonRow {
  std::string label;  // "M", "R", "S", "W" or "All"
  long baseline_over = 0;
  long baseline_under = 0;
  long system_over = 0;
  long system_under = 0;
  std::optional<double> over_change;
  std::optional<double> under_change;
};

struct ComparisonTable {
  std::string baseline;
  std::string system;
  std::vector<ComparisonRow> rows;
};

// Over/under-correction counts per error type of each system against the
// named baseline. Throws ContractError with fewer than two systems or an
// unknown baseline.
std::vector<ComparisonTable> overcorrection_report(const std::map<std::string, EvalReport>& systems,
                                                   const std::string& baseline);

std::string report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);
std::string comparison_to_text(const ComparisonTable& table);

}  // namespace alirector::eval
