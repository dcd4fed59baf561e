#include "alirector/common/utf8.hpp"

#include "alirector/common/error.hpp"

namespace alirector {

std::vector<std::string> split_utf8(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t width = 1;
    if (lead >= 0xF0) {
      width = 4;
    } else if (lead >= 0xE0) {
      width = 3;
    } else if (lead >= 0xC0) {
      width = 2;
    } else if (lead >= 0x80) {
      throw ParseError("invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + width > text.size()) {
      throw ParseError("truncated UTF-8 sequence at offset " + std::to_string(i));
    }
    for (std::size_t k = 1; k < width; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        throw ParseError("invalid UTF-8 continuation at offset " + std::to_string(i + k));
      }
    }
    out.emplace_back(text.substr(i, width));
    i += width;
  }
  return out;
}

}  // namespace alirector
