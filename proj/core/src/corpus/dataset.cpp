// Copyright 2026 The Alirector Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "alirector/corpus/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "alirector/common/error.hpp"
#include "alirector/common/log.hpp"
#include "alirector/common/rng.hpp"
#include "alirector/eval/extract.hpp"

namespace alirector::corpus {
namespace {

constexpr std::uint64_t kCorruptionStream = 0x636f7272757074ULL;
constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;

using Json = nlohmann::ordered_json;

Tokens slice(const Tokens& tokens, Span span) {
  return Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(span.begin),
                tokens.begin() + static_cast<std::ptrdiff_t>(span.end));
}

ParallelExample parse_record(const nlohmann::json& j, Vocab& vocab, const std::string& where) {
  auto text_field = [&](const char* name) -> std::string {
    const auto it = j.find(name);
    if (it == j.end() || !it->is_string()) {
      throw ParseError(where + ": missing string field \"" + name + "\"");
    }
    return it->get<std::string>();
  };
  auto encode = [&](const std::string& text) {
    std::vector<std::string> added;
    Tokens tokens = vocab.encode(text, true, &added);
    for (const auto& ch : added) {
      logger().warn("{}: unknown character '{}' added to the vocabulary overflow bucket", where, ch);
    }
    return tokens;
  };

  ParallelExample ex;
  try {
    ex.source = encode(text_field("source"));
    ex.target = encode(text_field("target"));
    if (j.contains("prediction")) ex.prediction = encode(text_field("prediction"));
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.what());
  }

  if (const auto it = j.find("edits"); it != j.end()) {
    if (!it->is_array()) throw ParseError(where + ": \"edits\" must be a list");
    for (const auto& e : *it) {
      try {
        eval::Edit edit;
        const auto type = eval::parse_type(e.at("type").get<std::string>());
        if (!type) throw ParseError("unknown edit type");
        edit.type = *type;
        edit.source_span = {e.at("src_start").get<std::size_t>(), e.at("src_end").get<std::size_t>()};
        edit.target_span = {e.at("tgt_start").get<std::size_t>(), e.at("tgt_end").get<std::size_t>()};
        if (edit.source_span.end < edit.source_span.begin || edit.source_span.end > ex.source.size() ||
            edit.target_span.end < edit.target_span.begin || edit.target_span.end > ex.target.size()) {
          throw ParseError("edit span out of range");
        }
        edit.original = slice(ex.source, edit.source_span);
        edit.replacement = slice(ex.target, edit.target_span);
        ex.applied_edits.push_back(std::move(edit));
      } catch (const nlohmann::json::exception& err) {
        throw ParseError(where + ": malformed edit: " + err.what());
      } catch (const ParseError& err) {
        throw ParseError(where + ": " + err.what());
      }
    }
    try {
      if (eval::apply_edits(ex.source, ex.applied_edits) != ex.target) {
        throw ParseError(where + ": edits do not turn source into target");
      }
    } catch (const ContractError& err) {
      throw ParseError(where + ": " + err.what());
    }
  } else {
    ex.applied_edits = eval::extract_edits(ex.source, ex.target);
  }
  return ex;
}

}  // namespace

DatasetSplit split_dataset(const std::vector<ParallelExample>& examples, double ratio,
                           std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must be in (0, 1)");
  const std::size_t n = examples.size();
  const auto first = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  if (first == 0 || first >= n) {
    throw SplitError("cannot split " + std::to_string(n) + " examples at ratio " +
                     std::to_string(ratio) + " into two non-empty parts");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, kSplitStream));
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i)))]);
  }
  DatasetSplit split;
  split.split_seed = seed;
  for (std::size_t k = 0; k < n; ++k) {
    (k < first ? split.correction_train : split.alignment_train).push_back(examples[order[k]]);
  }
  return split;
}

CorpusConfig CorpusConfig::from_kv(const KeyValues& kv) {
  CorpusConfig c;
  auto& g = c.generation;
  g.count = static_cast<std::size_t>(kv.get_long("corpus.count", 2000));
  g.vocab_size = static_cast<std::size_t>(kv.get_long("corpus.vocab_size", 60));
  g.min_len = static_cast<std::size_t>(kv.get_long("corpus.min_len", 8));
  g.max_len = static_cast<std::size_t>(kv.get_long("corpus.max_len", 20));
  g.seed = static_cast<std::uint64_t>(kv.get_long("corpus.seed", kv.get_long("seed", 1)));
  g.grammar.successors = static_cast<std::size_t>(kv.get_long("corpus.successors", 3));
  g.grammar.smoothing = kv.get_double("corpus.smoothing", 0.05);
  g.grammar.zipf_exponent = kv.get_double("corpus.zipf", 1.0);
  c.dev_count = static_cast<std::size_t>(kv.get_long("corpus.dev_count", 200));
  c.test_count = static_cast<std::size_t>(kv.get_long("corpus.test_count", 400));
  c.clean_fraction = kv.get_double("corpus.clean_fraction", 0.45);
  c.passes = static_cast<std::size_t>(kv.get_long("corpus.passes", 2));
  c.split_ratio = kv.get_double("corpus.split_ratio", 0.8);
  for (CorruptionKind kind : {CorruptionKind::kMissing, CorruptionKind::kRedundant,
                              CorruptionKind::kSubstitution, CorruptionKind::kWordOrder}) {
    const std::string name(to_string(kind));
    CorruptionRule rule;
    rule.kind = kind;
    rule.rate = kv.get_double("corpus.weight." + name, kind == CorruptionKind::kWordOrder ? 0.5 : 1.0);
    rule.span_len = static_cast<std::size_t>(
        kv.get_long("corpus.span." + name, kind == CorruptionKind::kWordOrder ? 3 : 2));
    c.rule_weights.push_back(rule);
  }
  validate(g);
  return c;
}

std::vector<CorruptionRule> CorpusConfig::rules() const {
  return rules_for_clean_fraction(rule_weights, clean_fraction, passes);
}

std::vector<ParallelExample> generate_parallel(const CorpusConfig& config, std::size_t first,
                                               std::size_t count) {
  const auto rules = config.rules();
  validate_rules(rules);
  CorruptionOptions options;
  options.passes = config.passes;
  options.symbol_count = config.generation.vocab_size;
  const auto clean = generate_clean_range(config.generation, first, count);
  std::vector<ParallelExample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(corrupt(clean[i], rules,
                          derive_seed(config.generation.seed ^ kCorruptionStream, first + i),
                          options));
  }
  return out;
}

GeneratedCorpus generate_corpus(const CorpusConfig& config) {
  GeneratedCorpus corpus{Vocab::synthetic(config.generation.vocab_size), {}};
  const std::size_t n = config.generation.count;
  auto train = generate_parallel(config, 0, n);
  corpus.split = split_dataset(train, config.split_ratio,
                               derive_seed(config.generation.seed, kSplitStream));
  corpus.split.dev = generate_parallel(config, n, config.dev_count);
  corpus.split.test = generate_parallel(config, n + config.dev_count, config.test_count);
  return corpus;
}

std::vector<ParallelExample> parse_parallel_jsonl(const std::string& text, Vocab& vocab,
                                                  const std::string& origin, std::string* header) {
  std::vector<ParallelExample> out;
  std::stringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(number);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError(where + ": record is not a JSON object");
    if (j.contains("header")) {
      if (header) *header = j.at("header").dump();
      continue;
    }
    out.push_back(parse_record(j, vocab, where));
  }
  return out;
}

std::vector<ParallelExample> load_parallel_jsonl(const std::filesystem::path& path, Vocab& vocab,
                                                 std::string* header) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_parallel_jsonl(buffer.str(), vocab, path.string(), header);
}

std::string to_jsonl_line(const ParallelExample& example, const Vocab& vocab) {
  Json j;
  j["source"] = vocab.decode(example.source);
  j["target"] = vocab.decode(example.target);
  if (example.prediction) j["prediction"] = vocab.decode(*example.prediction);
  Json edits = Json::array();
  for (const eval::Edit& e : example.applied_edits) {
    edits.push_back({{"type", std::string(1, eval::type_code(e.type))},
                     {"src_start", e.source_span.begin},
                     {"src_end", e.source_span.end},
                     {"tgt_start", e.target_span.begin},
                     {"tgt_end", e.target_span.end}});
  }
  j["edits"] = std::move(edits);
  return j.dump();
}

void write_parallel_jsonl(const std::filesystem::path& path,
                          const std::vector<ParallelExample>& examples, const Vocab& vocab,
                          const std::string& header) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  if (!header.empty()) out << Json{{"header", Json::parse(header)}}.dump() << '\n';
  for (const ParallelExample& ex : examples) out << to_jsonl_line(ex, vocab) << '\n';
}

}  // namespace alirector::corpus
