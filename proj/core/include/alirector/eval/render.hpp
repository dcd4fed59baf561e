#pragma once

#include <functional>
#include <string>

#include "alirector/common/types.hpp"

namespace alirector::eval {

using SymbolFn = std::function<std::string(Token)>;

// Two-row column-aligned rendering of a source/revision pair with an edit
// marker row underneath (M, R, S or W under changed columns).
std::string render_diff(const Tokens& source, const Tokens& revised, const SymbolFn& symbol);

}  // namespace alirector::eval
