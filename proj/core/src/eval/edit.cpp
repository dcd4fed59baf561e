#include "alirector/eval/edit.hpp"

#include <sstream>

#include "alirector/common/error.hpp"

namespace alirector::eval {

char type_code(EditType type) {
  switch (type) {
    case EditType::kMissing:
      return 'M';
    case EditType::kRedundant:
      return 'R';
    case EditType::kSubstitution:
      return 'S';
    case EditType::kWordOrder:
      return 'W';
  }
  return '?';
}

std::optional<EditType> parse_type(std::string_view code) {
  if (code == "M") return EditType::kMissing;
  if (code == "R") return EditType::kRedundant;
  if (code == "S") return EditType::kSubstitution;
  if (code == "W") return EditType::kWordOrder;
  return std::nullopt;
}

Tokens apply_edits(const Tokens& source, std::span<const Edit> edits) {
  Tokens out;
  out.reserve(source.size() + 8);
  std::size_t cursor = 0;
  for (const Edit& edit : edits) {
    const Span span = edit.source_span;
    if (span.begin < cursor || span.end < span.begin || span.end > source.size()) {
      throw ContractError("apply_edits: edit " + describe(edit) +
                          " overlaps a previous edit or exceeds the source");
    }
    out.insert(out.end(), source.begin() + static_cast<std::ptrdiff_t>(cursor),
               source.begin() + static_cast<std::ptrdiff_t>(span.begin));
    out.insert(out.end(), edit.replacement.begin(), edit.replacement.end());
    cursor = span.end;
  }
  out.insert(out.end(), source.begin() + static_cast<std::ptrdiff_t>(cursor), source.end());
  return out;
}

std::string describe(const Edit& edit) {
  std::ostringstream os;
  os << type_code(edit.type) << "@[" << edit.source_span.begin << ',' << edit.source_span.end
     << ")->[";
  for (std::size_t i = 0; i < edit.replacement.size(); ++i) {
    if (i) os << ' ';
    os << edit.replacement[i];
  }
  os << ']';
  return os.str();
}

}  // namespace alirector::eval
