#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alirector/common/types.hpp"

namespace alirector::eval {

// Missing, redundant, substitution and word-order edits.
enum class EditType { kMissing, kRedundant, kSubstitution, kWordOrder };

inline constexpr EditType kAllEditTypes[] = {EditType::kMissing, EditType::kRedundant,
                                             EditType::kSubstitution, EditType::kWordOrder};

char type_code(EditType type);
std::optional<EditType> parse_type(std::string_view code);

// One span edit turning source[source_span] into `replacement`. `original`
// holds the covered source tokens so an edit can be classified on its own.
// `target_span` locates the replacement inside the revised sentence.
struct Edit {
  EditType type = EditType::kSubstitution;
  Span source_span;
  Span target_span;
  Tokens original;
  Tokens replacement;

  bool operator==(const Edit&) const = default;
};

// Rewrites  with non-overlapping edits sorted by source position.
// Throws ContractError when edits overlap or fall outside the source.
Tokens apply_edits(const Tokens& source, std::span<const Edit> edits);

std::string describe(const Edit& edit);

}  // namespace alirector::eval
