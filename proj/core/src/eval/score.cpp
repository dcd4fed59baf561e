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

#include "alirector/eval/score.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "alirector/common/error.hpp"
#include "alirector/eval/extract.hpp"

namespace alirector::eval {
namespace {

using MatchKey = std::tuple<int, std::size_t, std::size_t, Tokens>;

MatchKey key_of(const Edit& edit) {
  return {static_cast<int>(edit.type), edit.source_span.begin, edit.source_span.end,
          edit.replacement};
}

double ratio_percent(long num, long den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::string format_change(const std::optional<double>& change) {
  if (!change) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f%%", *change);
  return buf;
}

}  // namespace

double TypeCounts::precision() const { return ratio_percent(tp, tp + fp); }

MatchResult match_edits(const std::vector<Edit>& gold, const std::vector<Edit>& predicted) {
  MatchResult result;
  for (EditType type : kAllEditTypes) result.per_type[type] = {};

  std::vector<MatchKey> gold_keys;
  gold_keys.reserve(gold.size());
  for (const Edit& e : gold) gold_keys.push_back(key_of(e));
  std::vector<bool> used(gold.size(), false);

  for (const Edit& p : predicted) {
    const MatchKey key = key_of(p);
    bool matched = false;
    for (std::size_t g = 0; g < gold.size(); ++g) {
      if (!used[g] && gold_keys[g] == key) {
        used[g] = true;
        matched = true;
        break;
      }
    }
    if (matched) {
      ++result.tp;
      ++result.per_type[p.type].tp;
    } else {
      ++result.fp;
      ++result.per_type[p.type].fp;
    }
  }
  for (std::size_t g = 0; g < gold.size(); ++g) {
    if (!used[g]) {
      ++result.fn;
      ++result.per_type[gold[g].type].fn;
    }
  }
  return result;
}

double f_beta(double precision, double recall, double beta) {
  const double b2 = beta * beta;
  const double den = b2 * precision + recall;
  if (den == 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / den;
}

EvalReport make_report(const MatchResult& counts, long sentences) {
  EvalReport report;
  report.tp = counts.tp;
  report.fp = counts.fp;
  report.fn = counts.fn;
  report.precision = ratio_percent(counts.tp, counts.tp + counts.fp);
  report.recall = ratio_percent(counts.tp, counts.tp + counts.fn);
  report.f05 = f_beta(report.precision, report.recall, 0.5);
  report.per_type = counts.per_type;
  report.overcorrections = counts.fp;
  report.undercorrections = counts.fn;
  report.sentences = sentences;
  return report;
}

EvalReport score_corpus(const std::vector<ScoredTriple>& triples) {
  MatchResult total;
  for (EditType type : kAllEditTypes) total.per_type[type] = {};
  for (const ScoredTriple& t : triples) {
    const MatchResult m =
        match_edits(extract_edits(t.source, t.target), extract_edits(t.source, t.hypothesis));
    total.tp += m.tp;
    total.fp += m.fp;
    total.fn += m.fn;
    for (const auto& [type, c] : m.per_type) {
      auto& agg = total.per_type[type];
      agg.tp += c.tp;
      agg.fp += c.fp;
      agg.fn += c.fn;
    }
  }
  return make_report(total, static_cast<long>(triples.size()));
}

EvalReport score_corpus(const std::vector<Tokens>& sources, const std::vector<Tokens>& targets,
                        const std::vector<Tokens>& hypotheses) {
  if (sources.size() != targets.size() || sources.size() != hypotheses.size()) {
    throw ContractError("score_corpus: corpus lengths differ (" + std::to_string(sources.size()) +
                        " sources, " + std::to_string(targets.size()) + " targets, " +
                        std::to_string(hypotheses.size()) + " hypotheses)");
  }
  std::vector<ScoredTriple> triples;
  triples.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    triples.push_back({sources[i], targets[i], hypotheses[i]});
  }
  return score_corpus(triples);
}

std::optional<double> relative_change(long baseline, long system) {
  if (baseline == 0) return std::nullopt;
  return 100.0 * static_cast<double>(system - baseline) / static_cast<double>(baseline);
}

std::vector<ComparisonTable> overcorrection_report(const std::map<std::string, EvalReport>& systems,
                                                   const std::string& baseline) {
  if (systems.size() < 2) {
    throw ContractError("overcorrection_report: need at least two systems");
  }
  const auto base_it = systems.find(baseline);
  if (base_it == systems.end()) {
    throw ContractError("overcorrection_report: unknown baseline '" + baseline + "'");
  }
  const EvalReport& base = base_it->second;

  std::vector<ComparisonTable> tables;
  for (const auto& [name, report] : systems) {
    if (name == baseline) continue;
    ComparisonTable table{baseline, name, {}};
    auto add_row = [&](std::string label, long bo, long bu, long so, long su) {
      table.rows.push_back(
          {std::move(label), bo, bu, so, su, relative_change(bo, so), relative_change(bu, su)});
    };
    for (EditType type : kAllEditTypes) {
      const auto find = [type](const EvalReport& r) {
        const auto it = r.per_type.find(type);
        return it == r.per_type.end() ? TypeCounts{} : it->second;
      };
      const TypeCounts b = find(base);
      const TypeCounts s = find(report);
      add_row(std::string(1, type_code(type)), b.fp, b.fn, s.fp, s.fn);
    }
    add_row("All", base.overcorrections, base.undercorrections, report.overcorrections,
            report.undercorrections);
    tables.push_back(std::move(table));
  }
  return tables;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["tp"] = report.tp;
  j["fp"] = report.fp;
  j["fn"] = report.fn;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["f05"] = report.f05;
  j["overcorrections"] = report.overcorrections;
  j["undercorrections"] = report.undercorrections;
  j["sentences"] = report.sentences;
  nlohmann::ordered_json per_type = nlohmann::ordered_json::object();
  for (const auto& [type, c] : report.per_type) {
    per_type[std::string(1, type_code(type))] = {
        {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"precision", c.precision()}};
  }
  j["per_type"] = per_type;
  return j.dump(2);
}

std::string report_to_text(const EvalReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %8s %8s %8s %9s\n", "type", "TP", "FP", "FN", "P");
  os << line;
  for (const auto& [type, c] : report.per_type) {
    std::snprintf(line, sizeof line, "%-6c %8ld %8ld %8ld %9.2f\n", type_code(type), c.tp, c.fp,
                  c.fn, c.precision());
    os << line;
  }
  std::snprintf(line, sizeof line, "%-6s %8ld %8ld %8ld %9.2f\n", "All", report.tp, report.fp,
                report.fn, report.precision);
  os << line;
  std::snprintf(line, sizeof line, "P %.2f  R %.2f  F0.5 %.2f  (%ld sentences)\n",
                report.precision, report.recall, report.f05, report.sentences);
  os << line;
  return os.str();
}

std::string comparison_to_text(const ComparisonTable& table) {
  std::ostringstream os;
  os << "#Overcorrections / #Undercorrections: " << table.baseline << " vs " << table.system
     << '\n';
  char line[200];
  for (const ComparisonRow& row : table.rows) {
    std::snprintf(line, sizeof line, "%-4s %6ld / %-6ld %6ld (%s) / %ld (%s)\n",
                  row.label.c_str(), row.baseline_over, row.baseline_under, row.system_over,
                  format_change(row.over_change).c_str(), row.system_under,
                  format_change(row.under_change).c_str());
    os << line;
  }
  return os.str();
}

}  // namespace alirector::eval
