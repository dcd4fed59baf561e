#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace alirector {

// Splits a UTF-8 string into one string per code point. Throws ParseError on
// malformed input.
std::vector<std::string> split_utf8(std::string_view text);

}  // namespace alirector
