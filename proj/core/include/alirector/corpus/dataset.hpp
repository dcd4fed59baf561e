#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "alirector/common/kv.hpp"
#include "alirector/corpus/corrupt.hpp"
#include "alirector/corpus/grammar.hpp"
#include "alirector/corpus/vocab.hpp"

namespace alirector::corpus {

struct DatasetSplit {
  std::vector<ParallelExample> correction_train;
  std::vector<ParallelExample> alignment_train;
  std::vector<ParallelExample> dev;
  std::vector<ParallelExample> test;
  std::uint64_t split_seed = 0;
};

// Seeded shuffle, then the first round(ratio * n) examples train the
// corrector and the rest the aligners. Throws SplitError when either part
// would be empty and ConfigError when ratio is outside (0, 1).
DatasetSplit split_dataset(const std::vector<ParallelExample>& examples, double ratio,
                           std::uint64_t seed);

// Everything needed to synthesize a corpus; read from the `corpus.*` keys.
struct CorpusConfig {
  GenerationConfig generation;  // generation.count = training pairs
  std::size_t dev_count = 0;
  std::size_t test_count = 0;
  std::vector<CorruptionRule> rule_weights;  // relative weights
  double clean_fraction = 0.45;
  std::size_t passes = 1;
  double split_ratio = 0.8;

  static CorpusConfig from_kv(const KeyValues& kv);
  std::vector<CorruptionRule> rules() const;
};

struct GeneratedCorpus {
  Vocab vocab;
  DatasetSplit split;
};

GeneratedCorpus generate_corpus(const CorpusConfig& config);

// Generates `config.count` corrupted examples (indices [first, first+count)).
std::vector<ParallelExample> generate_parallel(const CorpusConfig& config, std::size_t first,
                                               std::size_t count);

// JSONL: {"source", "target", optional "prediction", optional "edits"}.
// Strings are tokenized per character; unknown characters go to the
// vocabulary's overflow bucket with a warning. Missing edits are recomputed
// with eval::extract_edits. Malformed lines raise ParseError naming the line.
// A record with a "header" key is not an example; its serialized value is
// stored in `header` when given.
std::vector<ParallelExample> load_parallel_jsonl(const std::filesystem::path& path, Vocab& vocab,
                                                 std::string* header = nullptr);
std::vector<ParallelExample> parse_parallel_jsonl(const std::string& text, Vocab& vocab,
                                                  const std::string& origin = "<string>",
                                                  std::string* header = nullptr);
// `header`, when non-empty, is a JSON object written as the first record.
void write_parallel_jsonl(const std::filesystem::path& path,
                          const std::vector<ParallelExample>& examples, const Vocab& vocab,
                          const std::string& header = "");
std::string to_jsonl_line(const ParallelExample& example, const Vocab& vocab);

}  // namespace alirector::corpus
