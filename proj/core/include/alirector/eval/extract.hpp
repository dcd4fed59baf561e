#pragma once

#include <cstddef>
#include <vector>

#include "alirector/common/types.hpp"
#include "alirector/eval/edit.hpp"

namespace alirector::eval {

enum class OpKind { kMatch, kSubstitute, kDelete, kInsert };

// One step of a Levenshtein alignment. `source_index` and `target_index` are
// the positions consumed (insertions consume no source token and deletions
// no target token; the index then points at the next position).
struct EditOp {
  OpKind kind;
  std::size_t source_index;
  std::size_t target_index;
};

// Unit-cost Levenshtein distance.
std::size_t edit_distance(const Tokens& source, const Tokens& revised);

// Full minimal-cost alignment including matches. Ties are broken by
// preferring substitution (or match), then deletion, then insertion while
// tracing back from the end, which places edits as far left as possible.
std::vector<EditOp> align(const Tokens& source, const Tokens& revised);

// Span edits between two sentences: the alignment's non-match operations with
// adjacent same-kind runs merged, then permutation spans relabelled W.
std::vector<Edit> extract_edits(const Tokens& source, const Tokens& revised);

// M for insertions, R for deletions, W when the covered and replacement
// tokens are a reordering of each other, S otherwise. Throws ContractError on
// inconsistent spans or a no-op edit.
EditType classify_edit(const Edit& edit);

}  // namespace alirector::eval
