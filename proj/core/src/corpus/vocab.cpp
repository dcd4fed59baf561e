#include "alirector/corpus/vocab.hpp"

#include <nlohmann/json.hpp>

#include "alirector/common/error.hpp"
#include "alirector/common/utf8.hpp"

namespace alirector::corpus {
namespace {

constexpr std::string_view kAlphabet =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    "!$%&()*+,-./:;<=>?@[]^_{|}~";

const std::vector<std::string>& reserved_names() {
  static const std::vector<std::string> names = {
      "[PAD]", "[BOS]", "[EOS]", "[SEP]", "[GEC]", "[ALIGN]", "[INSTRUCTION]", "[INPUT]",
      "[RESPONSE]"};
  return names;
}

}  // namespace

std::size_t Vocab::max_synthetic_symbols() { return kAlphabet.size(); }

Vocab Vocab::synthetic(std::size_t symbol_count) {
  if (symbol_count > kAlphabet.size()) {
    throw ConfigError("synthetic vocabulary supports at most " +
                      std::to_string(kAlphabet.size()) + " symbols");
  }
  Vocab v;
  v.symbols_ = reserved_names();
  for (std::size_t i = 0; i < symbol_count; ++i) v.symbols_.emplace_back(1, kAlphabet[i]);
  v.base_size_ = v.symbols_.size();
  v.rebuild_index();
  return v;
}

void Vocab::rebuild_index() {
  index_.clear();
  for (std::size_t i = kNumReserved; i < symbols_.size(); ++i) {
    index_.emplace(symbols_[i], static_cast<Token>(i));
  }
}

std::optional<Token> Vocab::find(std::string_view symbol) const {
  const auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Token Vocab::intern(const std::string& symbol) {
  if (const auto id = find(symbol)) return *id;
  const auto id = static_cast<Token>(symbols_.size());
  symbols_.push_back(symbol);
  index_.emplace(symbol, id);
  return id;
}

const std::string& Vocab::symbol(Token id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
    throw VocabError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(symbols_.size()));
  }
  return symbols_[static_cast<std::size_t>(id)];
}

Tokens Vocab::encode(std::string_view text, bool allow_overflow, std::vector<std::string>* added) {
  Tokens out;
  for (const std::string& ch : split_utf8(text)) {
    if (const auto id = find(ch)) {
      out.push_back(*id);
    } else if (allow_overflow) {
      out.push_back(intern(ch));
      if (added) added->push_back(ch);
    } else {
      throw VocabError("unknown character '" + ch + "'");
    }
  }
  return out;
}

Tokens Vocab::encode_known(std::string_view text) const {
  Tokens out;
  for (const std::string& ch : split_utf8(text)) {
    const auto id = find(ch);
    if (!id) throw VocabError("unknown character '" + ch + "'");
    out.push_back(*id);
  }
  return out;
}

std::string Vocab::decode(const Tokens& tokens) const {
  std::string out;
  for (Token t : tokens) out += symbol(t);
  return out;
}

std::string Vocab::to_json() const {
  nlohmann::ordered_json j;
  j["reserved"] = reserved_names();
  j["symbols"] = std::vector<std::string>(symbols_.begin() + kNumReserved,
                                          symbols_.begin() + static_cast<std::ptrdiff_t>(base_size_));
  j["overflow"] = std::vector<std::string>(symbols_.begin() + static_cast<std::ptrdiff_t>(base_size_),
                                           symbols_.end());
  return j.dump(2);
}

Vocab Vocab::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("vocab json: ") + e.what());
  }
  if (j.value("reserved", std::vector<std::string>{}) != reserved_names()) {
    throw ParseError("vocab json: reserved token table does not match this build");
  }
  Vocab v;
  v.symbols_ = reserved_names();
  for (const auto& s : j.at("symbols")) v.symbols_.push_back(s.get<std::string>());
  v.base_size_ = v.symbols_.size();
  for (const auto& s : j.value("overflow", nlohmann::json::array())) {
    v.symbols_.push_back(s.get<std::string>());
  }
  v.rebuild_index();
  return v;
}

}  // namespace alirector::corpus
