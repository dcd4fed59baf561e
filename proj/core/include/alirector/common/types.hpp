#pragma once

#include <cstdint>
#include <vector>

namespace alirector {

using Token = std::int32_t;
using Tokens = std::vector<Token>;

// Half-open index range [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end == begin; }
  bool operator==(const Span&) const = default;
};

}  // namespace alirector
