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

#include "alirector/eval/extract.hpp"

#include <algorithm>

#include "alirector/common/error.hpp"

namespace alirector::eval {
namespace {

// Row-major (m+1) x (n+1) Levenshtein table.
std::vector<std::size_t> distance_table(const Tokens& a, const Tokens& b) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  std::vector<std::size_t> d((m + 1) * (n + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (n + 1) + j]; };
  for (std::size_t i = 0; i <= m; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= n; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  return d;
}

bool same_multiset(Tokens a, Tokens b) {
  if (a.size() != b.size()) return false;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

Edit make_edit(const Tokens& source, const Tokens& revised, Span src, Span tgt) {
  Edit edit;
  edit.source_span = src;
  edit.target_span = tgt;
  edit.original.assign(source.begin() + static_cast<std::ptrdiff_t>(src.begin),
                       source.begin() + static_cast<std::ptrdiff_t>(src.end));
  edit.replacement.assign(revised.begin() + static_cast<std::ptrdiff_t>(tgt.begin),
                          revised.begin() + static_cast<std::ptrdiff_t>(tgt.end));
  edit.type = classify_edit(edit);
  return edit;
}

}  // namespace

std::size_t edit_distance(const Tokens& source, const Tokens& revised) {
  return distance_table(source, revised).back();
}

std::vector<EditOp> align(const Tokens& source, const Tokens& revised) {
  const auto d = distance_table(source, revised);
  const std::size_t n = revised.size();
  auto at = [&](std::size_t i, std::size_t j) { return d[i * (n + 1) + j]; };

  std::vector<EditOp> ops;
  std::size_t i = source.size();
  std::size_t j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = source[i - 1] == revised[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        ops.push_back({same ? OpKind::kMatch : OpKind::kSubstitute, i - 1, j - 1});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ops.push_back({OpKind::kDelete, i - 1, j});
      --i;
    } else {
      ops.push_back({OpKind::kInsert, i, j - 1});
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

std::vector<Edit> extract_edits(const Tokens& source, const Tokens& revised) {
  const auto ops = align(source, revised);

  // Merge runs of the same operation kind into spans.
  struct Run {
    OpKind kind;
    Span src;
    Span tgt;
  };
  std::vector<Run> runs;
  for (const EditOp& op : ops) {
    if (op.kind == OpKind::kMatch) continue;
    const Span src = op.kind == OpKind::kInsert ? Span{op.source_index, op.source_index}
                                                : Span{op.source_index, op.source_index + 1};
    const Span tgt = op.kind == OpKind::kDelete ? Span{op.target_index, op.target_index}
                                                : Span{op.target_index, op.target_index + 1};
    if (!runs.empty() && runs.back().kind == op.kind && runs.back().src.end == src.begin &&
        runs.back().tgt.end == tgt.begin) {
      runs.back().src.end = src.end;
      runs.back().tgt.end = tgt.end;
    } else {
      runs.push_back({op.kind, src, tgt});
    }
  }

  std::vector<Edit> edits;
  edits.reserve(runs.size());
  for (std::size_t k = 0; k < runs.size(); ++k) {
    // An adjacent deletion/insertion pair covering the same tokens in a new
    // order is a single word-order edit.
    if (k + 1 < runs.size()) {
      const Run& a = runs[k];
      const Run& b = runs[k + 1];
      const bool del_ins = (a.kind == OpKind::kDelete && b.kind == OpKind::kInsert) ||
                           (a.kind == OpKind::kInsert && b.kind == OpKind::kDelete);
      if (del_ins && a.src.end == b.src.begin && a.tgt.end == b.tgt.begin) {
        Edit joined = make_edit(source, revised, {a.src.begin, b.src.end}, {a.tgt.begin, b.tgt.end});
        if (joined.type == EditType::kWordOrder) {
          edits.push_back(std::move(joined));
          ++k;
          continue;
        }
      }
    }
    edits.push_back(make_edit(source, revised, runs[k].src, runs[k].tgt));
  }
  return edits;
}

EditType classify_edit(const Edit& edit) {
  const Span src = edit.source_span;
  const Span tgt = edit.target_span;
  if (src.end < src.begin || tgt.end < tgt.begin || src.size() != edit.original.size() ||
      tgt.size() != edit.replacement.size()) {
    throw ContractError("classify_edit: spans inconsistent with edit contents");
  }
  if (edit.original == edit.replacement) {
    throw ContractError("classify_edit: edit changes nothing");
  }
  if (edit.original.empty()) return EditType::kMissing;
  if (edit.replacement.empty()) return EditType::kRedundant;
  if (same_multiset(edit.original, edit.replacement)) return EditType::kWordOrder;
  return EditType::kSubstitution;
}

}  // namespace alirector::eval
