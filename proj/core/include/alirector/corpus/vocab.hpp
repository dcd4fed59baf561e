#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "alirector/common/types.hpp"

namespace alirector::corpus {

// Reserved ids come first and are stable for every vocabulary, so a
// serialized run config always agrees on e.g. the separator index.
enum ReservedToken : Token {
  kPad = 0,
  kBos,
  kEos,
  kSep,
  kInstrGec,          // correction instruction
  kInstrAlign,        // alignment instruction
  kFieldInstruction,  // "### Instruction:" style field marker
  kFieldInput,
  kFieldResponse,
  kNumReserved,
};

// Per-character vocabulary: reserved tokens, the ordinary symbols, then an
// overflow bucket for characters first seen while loading external data.
class Vocab {
 public:
  // `symbol_count` characters drawn from a fixed printable alphabet.
  static Vocab synthetic(std::size_t symbol_count);
  static std::size_t max_synthetic_symbols();

  std::size_t size() const { return symbols_.size(); }
  std::size_t symbol_count() const { return symbols_.size() - kNumReserved; }
  std::size_t overflow_count() const { return symbols_.size() - base_size_; }

  static bool is_reserved(Token id) { return id >= 0 && id < kNumReserved; }

  std::optional<Token> find(std::string_view symbol) const;
  // Returns the id of `symbol`, appending it to the overflow bucket first if
  // it is new.
  Token intern(const std::string& symbol);
  const std::string& symbol(Token id) const;

  // Per-character encoding. Unknown characters throw VocabError unless
  // `allow_overflow`, in which case they are interned and reported through
  // `added`.
  Tokens encode(std::string_view text, bool allow_overflow = false,
                std::vector<std::string>* added = nullptr);
  Tokens encode_known(std::string_view text) const;
  std::string decode(const Tokens& tokens) const;

  std::string to_json() const;
  static Vocab from_json(const std::string& text);

  bool operator==(const Vocab& other) const { return symbols_ == other.symbols_; }

 private:
  void rebuild_index();

  std::vector<std::string> symbols_;
  std::size_t base_size_ = kNumReserved;
  std::unordered_map<std::string, Token> index_;
};

}  // namespace alirector::corpus
