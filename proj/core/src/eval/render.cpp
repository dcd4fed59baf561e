#include "alirector/eval/render.hpp"

#include <algorithm>
#include <sstream>

#include "alirector/eval/extract.hpp"

namespace alirector::eval {

std::string render_diff(const Tokens& source, const Tokens& revised, const SymbolFn& symbol) {
  std::string top;
  std::string bottom;
  std::string marks;
  auto cell = [](std::string& row, const std::string& text, std::size_t width) {
    row += text;
    row.append(width - text.size() + 1, ' ');
  };
  for (const EditOp& op : align(source, revised)) {
    const std::string a = op.kind == OpKind::kInsert ? "-" : symbol(source[op.source_index]);
    const std::string b = op.kind == OpKind::kDelete ? "-" : symbol(revised[op.target_index]);
    const std::size_t width = std::max(a.size(), b.size());
    std::string mark = " ";
    switch (op.kind) {
      case OpKind::kMatch:
        break;
      case OpKind::kSubstitute:
        mark = "S";
        break;
      case OpKind::kDelete:
        mark = "R";
        break;
      case OpKind::kInsert:
        mark = "M";
        break;
    }
    cell(top, a, width);
    cell(bottom, b, width);
    cell(marks, mark, width);
  }
  std::ostringstream os;
  os << "src: " << top << "\nhyp: " << bottom << "\n     " << marks << '\n';
  return os.str();
}

}  // namespace alirector::eval
