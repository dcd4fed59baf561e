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

#include "alirector/pipeline/stages.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "alirector/alignment/align.hpp"
#include "alirector/common/error.hpp"
#include "alirector/common/hash.hpp"
#include "alirector/common/log.hpp"
#include "alirector/corpus/dataset.hpp"
#include "alirector/correction/predict.hpp"
#include "alirector/distill/student.hpp"
#include "alirector/eval/extract.hpp"
#include "alirector/eval/render.hpp"
#include "alirector/eval/score.hpp"
#include "alirector/model/checkpoint.hpp"
#include "alirector/pipeline/manifest.hpp"

namespace alirector::pipeline {
namespace {

using json = nlohmann::ordered_json;
using alignment::AblationMode;
using alignment::AlignmentExample;
using corpus::ParallelExample;
using corpus::Vocab;
using model::Direction;
using model::ModelParams;

constexpr const char* kVocab = "data/vocab.json";
constexpr const char* kCorrectionTrain = "data/correction_train.jsonl";
constexpr const char* kAlignmentTrain = "data/alignment_train.jsonl";
constexpr const char* kDev = "data/dev.jsonl";
constexpr const char* kTest = "data/test.jsonl";
constexpr const char* kCorrector = "corrector/model.ckpt";
constexpr const char* kTriples = "triples/alignment.jsonl";
constexpr const char* kDevTriples = "triples/dev.jsonl";
constexpr const char* kForward = "align/forward/model.ckpt";
constexpr const char* kReverse = "align/reverse/model.ckpt";
constexpr const char* kStudent = "distill/model.ckpt";
constexpr const char* kVanilla = "ablate/no_kd/model.ckpt";

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

std::string producer_of(const std::string& rel) {
  if (starts_with(rel, "data/")) return "gen-data";
  if (starts_with(rel, "corrector/")) return "train-correct";
  if (starts_with(rel, "triples/")) return "build-triples";
  if (starts_with(rel, "align/")) return "train-align";
  if (starts_with(rel, "distill/")) return "distill";
  if (starts_with(rel, "ablate/")) return "ablate";
  return "predict";
}

std::string hash_config(const RunContext& ctx, std::initializer_list<const char*> prefixes,
                        const std::string& extra = "") {
  std::string text = "seed=" + std::to_string(ctx.seed()) + "\n";
  for (const char* p : prefixes) text += ctx.config().dump(p);
  if (ctx.init_from()) text += "init_from=" + sha256_file(*ctx.init_from()) + "\n";
  return sha256_hex(text + extra);
}

// Hashes inputs, decides whether the stage can be skipped and writes the
// manifest once outputs exist.
class StageRun {
 public:
  StageRun(const RunContext& ctx, std::string stage, std::string dir, std::string config_hash,
           const std::vector<std::string>& inputs)
      : ctx_(ctx),
        stage_(std::move(stage)),
        dir_(std::move(dir)),
        config_hash_(std::move(config_hash)),
        start_(std::chrono::steady_clock::now()) {
    for (const std::string& rel : inputs) {
      const fs::path p = ctx_.path(rel);
      if (!fs::exists(p)) {
        throw DependencyError("stage '" + stage_ + "' needs " + p.string() + "; run `alirector " +
                              producer_of(rel) + "` first");
      }
      inputs_[rel] = sha256_file(p);
    }
  }

  bool up_to_date() const {
    if (ctx_.force()) return false;
    const auto m = read_manifest(ctx_.path(dir_ + "/manifest.json"));
    if (!m || m->config_hash != config_hash_ || m->inputs != inputs_) return false;
    for (const auto& [rel, hash] : m->outputs) {
      const fs::path p = ctx_.path(rel);
      if (!fs::exists(p) || sha256_file(p) != hash) return false;
    }
    return true;
  }

  StageResult skipped() const {
    logger().info("{}: {} is up to date, skipping (use --force to rerun)", stage_, dir_);
    return {stage_, true, ctx_.path(dir_), read_text(ctx_.path(dir_ + "/metrics.json"))};
  }

  StageResult finish(std::vector<std::string> outputs, const std::string& metrics,
                     const std::string& extra = "{}") {
    const std::string metrics_rel = dir_ + "/metrics.json";
    write_text(ctx_.path(metrics_rel), metrics + "\n");
    outputs.push_back(metrics_rel);
    Manifest m;
    m.stage = stage_;
    m.config_hash = config_hash_;
    m.inputs = inputs_;
    for (const std::string& rel : outputs) m.outputs[rel] = sha256_file(ctx_.path(rel));
    m.extra = extra;
    m.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_manifest(ctx_.path(dir_ + "/manifest.json"), m);
    logger().info("{}: wrote {} in {:.1f}s", stage_, dir_, m.wall_seconds);
    return {stage_, false, ctx_.path(dir_), metrics + "\n"};
  }

  const std::map<std::string, std::string>& inputs() const { return inputs_; }

 private:
  const RunContext& ctx_;
  std::string stage_;
  std::string dir_;
  std::string config_hash_;
  std::map<std::string, std::string> inputs_;
  std::chrono::steady_clock::time_point start_;
};

// ---- loading helpers -------------------------------------------------------

Vocab load_vocab(const RunContext& ctx) { return Vocab::from_json(read_text(ctx.path(kVocab))); }

std::vector<ParallelExample> load_examples(const RunContext& ctx, const std::string& rel,
                                           Vocab& vocab, std::string* header = nullptr) {
  return corpus::load_parallel_jsonl(ctx.path(rel), vocab, header);
}

std::vector<Tokens> sources_of(const std::vector<ParallelExample>& v) {
  std::vector<Tokens> out;
  for (const auto& e : v) out.push_back(e.source);
  return out;
}

std::vector<Tokens> targets_of(const std::vector<ParallelExample>& v) {
  std::vector<Tokens> out;
  for (const auto& e : v) out.push_back(e.target);
  return out;
}

std::vector<AlignmentExample> triples_of(const std::vector<ParallelExample>& v) {
  std::vector<AlignmentExample> out;
  for (const auto& e : v) {
    if (!e.prediction) throw ParseError("alignment triple without a prediction");
    out.push_back({e.source, *e.prediction, e.target});
  }
  return out;
}

ModelParams load_params(const RunContext& ctx, const std::string& rel) {
  return model::load_checkpoint(ctx.path(rel)).params;
}

model::ModelConfig model_config(const RunContext& ctx, const Vocab& vocab) {
  return model::ModelConfig::from_kv(ctx.config(), vocab.size());
}

model::DecodeOptions decode_options(const RunContext& ctx) {
  model::DecodeOptions o;
  const long beam = ctx.config().get_long("decode.beam_size", 10);
  if (beam < 1) throw ConfigError("decode.beam_size must be at least 1");
  o.beam_size = static_cast<std::size_t>(beam);
  o.max_len = static_cast<std::size_t>(std::max(0L, ctx.config().get_long("decode.max_len", 0)));
  return o;
}

const model::DecodeOptions kGreedy{1, 0};

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) {
  std::uint64_t tag = 1469598103934665603ULL;
  for (char c : stage) tag = (tag ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return derive_seed(seed, tag);
}

correction::TrainConfig train_config(const RunContext& ctx, const std::string& section,
                                     std::uint64_t seed, std::string_view stage) {
  correction::TrainConfig c = correction::TrainConfig::from_kv(ctx.config(), section);
  c.seed = stage_seed(seed, stage);
  return c;
}

// Initial weights: --init-from when given (and compatible), else `fallback`.
ModelParams initial_params(const RunContext& ctx, const model::ModelConfig& config,
                           ModelParams fallback) {
  if (!ctx.init_from()) return fallback;
  ModelParams p = model::load_checkpoint(*ctx.init_from()).params;
  if (!(p.config() == config)) {
    throw ConfigError("--init-from checkpoint " + ctx.init_from()->string() +
                      " has a different model configuration");
  }
  return p;
}

json report_json(const eval::EvalReport& r) { return json::parse(eval::report_to_json(r)); }

json short_report(const eval::EvalReport& r) {
  return json{{"P", r.precision}, {"R", r.recall}, {"F05", r.f05},
              {"TP", r.tp},       {"FP", r.fp},     {"FN", r.fn}};
}

struct Recorder {
  std::string lines;
  void operator()(const correction::EpochMetrics& m) { lines += m.to_json() + "\n"; }
};

json training_summary(const correction::TrainResult& r) {
  const correction::EpochMetrics& best = r.history.at(r.best_epoch - 1);
  return json{{"best_epoch", r.best_epoch},
              {"epochs_run", r.history.size()},
              {"dev", {{"P", best.dev_precision}, {"R", best.dev_recall}, {"F05", best.dev_f05}}},
              {"probe_loss_first", r.history.front().probe_loss},
              {"probe_loss_best", best.probe_loss},
              {"param_hash", r.best.hash()}};
}

void save_model(const RunContext& ctx, const std::string& rel, const ModelParams& params,
                const json& metadata) {
  model::save_checkpoint(ctx.path(rel), params, nullptr, metadata.dump());
}

// Writes {"source","prediction","target"} records (plus "initial" when given).
void write_predictions(const RunContext& ctx, const std::string& rel, const Vocab& vocab,
                       const std::vector<Tokens>& sources, const std::vector<Tokens>& targets,
                       const std::vector<Tokens>& predictions, const json& header,
                       const std::vector<Tokens>* initial = nullptr) {
  std::string text = json{{"header", header}}.dump() + "\n";
  for (std::size_t i = 0; i < sources.size(); ++i) {
    json j{{"source", vocab.decode(sources[i])}, {"prediction", vocab.decode(predictions[i])}};
    if (initial) j["initial"] = vocab.decode((*initial)[i]);
    j["target"] = vocab.decode(targets[i]);
    text += j.dump() + "\n";
  }
  write_text(ctx.path(rel), text);
}

// ---- stages ---------------------------------------------------------------

StageResult gen_data(const RunContext& ctx) {
  StageRun st(ctx, "gen-data", "data", hash_config(ctx, {"corpus."}), {});
  if (st.up_to_date()) return st.skipped();
  const corpus::CorpusConfig config = corpus::CorpusConfig::from_kv(ctx.config());
  const corpus::GeneratedCorpus g = corpus::generate_corpus(config);
  write_text(ctx.path(kVocab), g.vocab.to_json());
  json counts;
  auto emit = [&](const char* rel, const char* name, const std::vector<ParallelExample>& v) {
    corpus::write_parallel_jsonl(ctx.path(rel), v, g.vocab);
    std::size_t clean = 0;
    std::size_t edits = 0;
    for (const auto& e : v) {
      clean += e.clean() ? 1 : 0;
      edits += e.applied_edits.size();
    }
    counts[name] = {{"examples", v.size()},
                    {"clean_fraction", v.empty() ? 0.0 : double(clean) / double(v.size())},
                    {"edits", edits}};
  };
  emit(kCorrectionTrain, "correction_train", g.split.correction_train);
  emit(kAlignmentTrain, "alignment_train", g.split.alignment_train);
  emit(kDev, "dev", g.split.dev);
  emit(kTest, "test", g.split.test);
  const json metrics{{"stage", "gen-data"},
                     {"corpus_seed", config.generation.seed},
                     {"vocab_size", g.vocab.size()},
                     {"splits", counts}};
  return st.finish({kVocab, kCorrectionTrain, kAlignmentTrain, kDev, kTest}, metrics.dump());
}

StageResult train_correct(const RunContext& ctx) {
  StageRun st(ctx, "train-correct", "corrector",
              hash_config(ctx, {"model.", "train.", "correct."}),
              {kVocab, kCorrectionTrain, kDev});
  if (st.up_to_date()) return st.skipped();
  Vocab vocab = load_vocab(ctx);
  const auto train = load_examples(ctx, kCorrectionTrain, vocab);
  const auto dev = load_examples(ctx, kDev, vocab);
  const model::ModelConfig mc = model_config(ctx, vocab);
  const model::Transformer net(mc);
  const auto tc = train_config(ctx, "correct", ctx.seed(), "train-correct");

  correction::TrainingTask task;
  for (const auto& e : train) {
    task.examples.push_back(
        model::make_sequence_input(mc, model::Task::kCorrect, e.source, e.target));
  }
  const auto dev_sources = sources_of(dev);
  const auto dev_targets = targets_of(dev);
  task.evaluate_dev = [&](const ModelParams& p) {
    return correction::evaluate_corrector(net, p, dev_sources, dev_targets, kGreedy);
  };
  Recorder rec;
  task.on_epoch = std::ref(rec);
  ModelParams init = initial_params(
      ctx, mc, ModelParams::initialize(mc, model::ModelRole::kCorrector, stage_seed(ctx.seed(), "init")));
  init.set_role(model::ModelRole::kCorrector);
  const correction::TrainResult r = correction::train(net, std::move(init), task, tc);

  json summary = training_summary(r);
  save_model(ctx, kCorrector, r.best, {{"stage", "train-correct"}, {"best_epoch", r.best_epoch}});
  write_text(ctx.path("corrector/metrics.jsonl"), rec.lines);
  json metrics{{"stage", "train-correct"}};
  metrics.update(summary);
  return st.finish({kCorrector, "corrector/metrics.jsonl"}, metrics.dump());
}

StageResult build_triples(const RunContext& ctx) {
  StageRun st(ctx, "build-triples", "triples", hash_config(ctx, {"decode."}),
              {kVocab, kCorrector, kAlignmentTrain, kDev});
  if (st.up_to_date()) return st.skipped();
  Vocab vocab = load_vocab(ctx);
  const auto split = load_examples(ctx, kAlignmentTrain, vocab);
  const auto dev = load_examples(ctx, kDev, vocab);
  const ModelParams corrector = load_params(ctx, kCorrector);
  const model::Transformer net(corrector.config());
  const model::DecodeOptions decode = decode_options(ctx);

  auto build = [&](const std::vector<ParallelExample>& v, const model::DecodeOptions& o) {
    return alignment::build_alignment_triples(net, corrector, sources_of(v), targets_of(v), o);
  };
  const auto triples = build(split, decode);
  const auto dev_triples = build(dev, kGreedy);
  auto to_examples = [](const std::vector<AlignmentExample>& v) {
    std::vector<ParallelExample> out;
    for (const auto& t : v) {
      ParallelExample e;
      e.source = t.source;
      e.target = t.target;
      e.prediction = t.prediction;
      e.applied_edits = eval::extract_edits(t.source, t.target);
      out.push_back(std::move(e));
    }
    return out;
  };
  const std::string hash = corrector.hash();
  corpus::write_parallel_jsonl(
      ctx.path(kTriples), to_examples(triples), vocab,
      json{{"corrector_hash", hash}, {"beam_size", decode.beam_size}, {"split", "alignment_train"}}
          .dump());
  corpus::write_parallel_jsonl(
      ctx.path(kDevTriples), to_examples(dev_triples), vocab,
      json{{"corrector_hash", hash}, {"beam_size", 1}, {"split", "dev"}}.dump());

  std::vector<Tokens> predictions;
  std::size_t unchanged = 0;
  for (const auto& t : triples) {
    predictions.push_back(t.prediction);
    unchanged += t.prediction == t.source ? 1 : 0;
  }
  const auto report = eval::score_corpus(sources_of(split), targets_of(split), predictions);
  const json metrics{{"stage", "build-triples"},
                     {"triples", triples.size()},
                     {"dev_triples", dev_triples.size()},
                     {"unchanged_predictions", unchanged},
                     {"corrector_hash", hash},
                     {"beam_size", decode.beam_size},
                     {"corrector_on_alignment_split", short_report(report)}};
  return st.finish({kTriples, kDevTriples}, metrics.dump());
}

struct AlignerOutcome {
  correction::TrainResult result;
  std::string epochs;
};

AlignerOutcome fit_aligner(const RunContext& ctx, const model::Transformer& net,
                           const ModelParams& init, const std::vector<AlignmentExample>& triples,
                           const std::vector<AlignmentExample>& dev, Direction direction,
                           AblationMode ablation, std::string_view tag) {
  Recorder rec;
  auto tc = train_config(ctx, "align", ctx.seed(), tag);
  auto r = alignment::train_alignment(net, init, triples, dev, direction, ablation, tc, kGreedy,
                                      std::ref(rec));
  return {std::move(r), rec.lines};
}

StageResult train_align(const RunContext& ctx) {
  const auto directions = ctx.config().get_strings("align.directions", {"forward", "reverse"});
  StageRun st(ctx, "train-align", "align", hash_config(ctx, {"model.", "train.", "align."}),
              {kVocab, kCorrector, kTriples, kDevTriples});
  if (st.up_to_date()) return st.skipped();
  Vocab vocab = load_vocab(ctx);
  const auto triples = triples_of(load_examples(ctx, kTriples, vocab));
  const auto dev = triples_of(load_examples(ctx, kDevTriples, vocab));
  const ModelParams corrector = load_params(ctx, kCorrector);
  const model::Transformer net(corrector.config());
  const ModelParams init = initial_params(ctx, corrector.config(), corrector);

  json metrics{{"stage", "train-align"}};
  std::vector<std::string> outputs;
  for (const std::string& name : directions) {
    Direction direction;
    if (name == "forward") {
      direction = Direction::kForward;
    } else if (name == "reverse") {
      direction = Direction::kReverse;
    } else {
      throw ConfigError("align.directions: unknown direction '" + name + "'");
    }
    const AlignerOutcome out =
        fit_aligner(ctx, net, init, triples, dev, direction, AblationMode::kNone, "align-" + name);
    const std::string rel = "align/" + name + "/model.ckpt";
    save_model(ctx, rel, out.result.best,
               {{"stage", "train-align"}, {"direction", name}, {"best_epoch", out.result.best_epoch}});
    write_text(ctx.path("align/" + name + "/metrics.jsonl"), out.epochs);
    outputs.push_back(rel);
    outputs.push_back("align/" + name + "/metrics.jsonl");
    metrics[name] = training_summary(out.result);
  }
  return st.finish(outputs, metrics.dump());
}

// Teacher logits are expensive; cache them per (teachers, ablation) within
// one process.
struct TeacherCache {
  std::map<std::string, std::shared_ptr<distill::TeacherLogits>> entries;

  std::shared_ptr<distill::TeacherLogits> get(const model::Transformer& net,
                                              const distill::TeacherBundle& teachers,
                                              const std::vector<AlignmentExample>& triples,
                                              AblationMode ablation, const std::string& key) {
    auto& slot = entries[key + "|" + teachers.forward_hash() + "|" + teachers.reverse_hash() + "|" +
                         std::string(alignment::to_string(ablation))];
    if (!slot) {
      slot = std::make_shared<distill::TeacherLogits>(
          distill::compute_teacher_logits(net, teachers, triples, ablation));
    }
    return slot;
  }
};

TeacherCache& teacher_cache() {
  static TeacherCache cache;
  return cache;
}

struct StudentOutcome {
  correction::TrainResult result;
  std::string epochs;
};

StudentOutcome fit_student(const RunContext& ctx, const model::Transformer& net,
                           const ModelParams& init, const std::vector<AlignmentExample>& triples,
                           const std::vector<ParallelExample>& dev,
                           const distill::TeacherBundle* teachers,
                           const distill::TeacherLogits* logits, const distill::DistillConfig& dc,
                           std::uint64_t seed) {
  distill::StudentTask task;
  task.triples = &triples;
  task.teacher_logits = logits;
  task.teachers = teachers;
  task.distill = dc;
  task.dev_sources = sources_of(dev);
  task.dev_targets = targets_of(dev);
  task.dev_decode = kGreedy;
  Recorder rec;
  task.on_epoch = std::ref(rec);
  auto tc = train_config(ctx, "distill", seed, "distill");
  auto r = distill::train_alirector(net, init, task, tc);
  return {std::move(r), rec.lines};
}

std::string distill_hash(const RunContext& ctx, const distill::DistillConfig& dc,
                         const std::string& extra = "") {
  return hash_config(ctx, {"train.", "distill."}, dc.to_json() + extra);
}

StageResult distill_stage(const RunContext& ctx) {
  const distill::DistillConfig dc = distill::DistillConfig::from_kv(ctx.config());
  StageRun st(ctx, "distill", "distill", distill_hash(ctx, dc),
              {kVocab, kCorrector, kForward, kReverse, kTriples, kDev});
  if (st.up_to_date()) return st.skipped();
  Vocab vocab = load_vocab(ctx);
  const auto triples = triples_of(load_examples(ctx, kTriples, vocab));
  const auto dev = load_examples(ctx, kDev, vocab);
  const ModelParams corrector = load_params(ctx, kCorrector);
  const model::Transformer net(corrector.config());
  const distill::TeacherBundle teachers(load_params(ctx, kForward), load_params(ctx, kReverse));
  const auto logits = teacher_cache().get(net, teachers, triples, AblationMode::kNone,
                                          st.inputs().at(kTriples));
  const ModelParams init = initial_params(ctx, corrector.config(), corrector);
  const StudentOutcome out =
      fit_student(ctx, net, init, triples, dev, &teachers, logits.get(), dc, ctx.seed());

  const json provenance{{"teacher_forward_hash", teachers.forward_hash()},
                        {"teacher_reverse_hash", teachers.reverse_hash()},
                        {"triples_hash", st.inputs().at(kTriples)},
                        {"distill", json::parse(dc.to_json())}};
  save_model(ctx, kStudent, out.result.best, provenance);
  write_text(ctx.path("distill/metrics.jsonl"), out.epochs);
  json metrics{{"stage", "distill"}};
  metrics.update(training_summary(out.result));
  metrics["provenance"] = provenance;
  return st.finish({kStudent, "distill/metrics.jsonl"}, metrics.dump(), provenance.dump());
}

// Test-set predictions of one correction model.
StageResult predict_one(const RunContext& ctx, const std::string& name, const std::string& ckpt) {
  const std::string dir = "predictions/" + name;
  StageRun st(ctx, "predict", dir, hash_config(ctx, {"decode."}), {kVocab, kTest, ckpt});
  if (st.up_to_date()) return st.skipped();
  Vocab vocab = load_vocab(ctx);
  const auto test = load_examples(ctx, kTest, vocab);
  const ModelParams params = load_params(ctx, ckpt);
  const model::Transformer net(params.config());
  const model::DecodeOptions decode = decode_options(ctx);
  const auto sources = sources_of(test);
  const auto targets = targets_of(test);
  const auto predictions = correction::predict_corpus(net, params, sources, decode);
  const std::string rel = dir + "/test.jsonl";
  write_predictions(ctx, rel, vocab, sources, targets, predictions,
                    {{"model", name}, {"model_hash", params.hash()}, {"beam_size", decode.beam_size}});
  const auto report = eval::score_corpus(sources, targets, predictions);
  json metrics{{"stage", "predict"}, {"model", name}, {"test", report_json(report)}};
  return st.finish({rel}, metrics.dump());
}

const std::vector<std::pair<std::string, std::string>> kPredictable = {
    {"corrector", kCorrector}, {"alirector", kStudent}, {"vanilla", kVanilla}};

StageResult predict_stage(const RunContext& ctx) {
  std::vector<std::string> names = ctx.modes();
  if (names.empty()) {
    for (const auto& [name, ckpt] : kPredictable) {
      if (fs::exists(ctx.path(ckpt))) names.push_back(name);
    }
  }
  json metrics{{"stage", "predict"}};
  StageResult last;
  for (const std::string& name : names) {
    const auto it = std::find_if(kPredictable.begin(), kPredictable.end(),
                                 [&](const auto& p) { return p.first == name; });
    if (it == kPredictable.end()) {
      throw ConfigError("predict: unknown model '" + name + "' (corrector, alirector, vanilla)");
    }
    last = predict_one(ctx, name, it->second);
    metrics[name] = json::parse(last.metrics_json)["test"];
  }
  if (names.empty()) throw DependencyError("predict: no trained model; run `alirector train-correct` first");
  StageResult out{"predict", last.skipped, ctx.path("predictions"), metrics.dump() + "\n"};
  return out;
}

StageResult predict_and_align_stage(const RunContext& ctx) {
  const std::string dir = "predictions/predict_and_align";
  StageRun st(ctx, "predict-and-align", dir, hash_config(ctx, {"decode."}),
              {kVocab, kTest, kCorrector, kForward});
  if (st.up_to_date()) return st.skipped();
  Vocab vocab = load_vocab(ctx);
  const auto test = load_examples(ctx, kTest, vocab);
  const ModelParams corrector = load_params(ctx, kCorrector);
  const ModelParams aligner = load_params(ctx, kForward);
  const model::Transformer net(corrector.config());
  const model::DecodeOptions decode = decode_options(ctx);
  std::vector<Tokens> initial;
  std::vector<Tokens> final_out;
  for (const auto& e : test) {
    auto r = alignment::predict_and_align(net, corrector, aligner, e.source, decode);
    initial.push_back(std::move(r.initial));
    final_out.push_back(std::move(r.final));
  }
  const auto sources = sources_of(test);
  const auto targets = targets_of(test);
  const std::string rel = dir + "/test.jsonl";
  write_predictions(ctx, rel, vocab, sources, targets, final_out,
                    {{"model", "predict_and_align"},
                     {"corrector_hash", corrector.hash()},
                     {"aligner_hash", aligner.hash()},
                     {"beam_size", decode.beam_size}},
                    &initial);
  const json metrics{{"stage", "predict-and-align"},
                     {"model", "predict_and_align"},
                     {"test", report_json(eval::score_corpus(sources, targets, final_out))},
                     {"stage_one", report_json(eval::score_corpus(sources, targets, initial))}};
  return st.finish({rel}, metrics.dump());
}

eval::EvalReport score_file(const RunContext& ctx, const std::string& rel) {
  Vocab vocab = load_vocab(ctx);
  const auto records = load_examples(ctx, rel, vocab);
  std::vector<eval::ScoredTriple> triples;
  for (const auto& r : records) {
    if (!r.prediction) throw ParseError(rel + ": record without a prediction");
    triples.push_back({r.source, r.target, *r.prediction});
  }
  return eval::score_corpus(triples);
}

StageResult evaluate_stage(const RunContext& ctx) {
  std::map<std::string, std::string> files;
  for (const auto& [name, ckpt] : kPredictable) {
    if (!fs::exists(ctx.path(ckpt))) continue;
    predict_one(ctx, name, ckpt);
    files[name] = "predictions/" + name + "/test.jsonl";
  }
  if (fs::exists(ctx.path(kForward)) && fs::exists(ctx.path(kCorrector))) {
    predict_and_align_stage(ctx);
    files["predict_and_align"] = "predictions/predict_and_align/test.jsonl";
  }
  std::vector<std::string> inputs{kVocab};
  for (const auto& [name, rel] : files) inputs.push_back(rel);
  if (files.empty()) {
    throw DependencyError("evaluate: no predictions; run `alirector train-correct` first");
  }
  StageRun st(ctx, "evaluate", "evaluate", hash_config(ctx, {"eval."}), inputs);
  if (st.up_to_date()) return st.skipped();

  std::map<std::string, eval::EvalReport> reports;
  for (const auto& [name, rel] : files) reports[name] = score_file(ctx, rel);
  const std::string baseline = reports.count("vanilla") ? "vanilla" : "corrector";
  json systems = json::object();
  std::string text;
  for (const auto& [name, r] : reports) {
    systems[name] = report_json(r);
    text += "== " + name + "\n" + eval::report_to_text(r) + "\n";
  }
  json tables = json::array();
  if (reports.size() >= 2 && reports.count(baseline)) {
    for (const eval::ComparisonTable& t : eval::overcorrection_report(reports, baseline)) {
      json rows = json::array();
      for (const auto& row : t.rows) {
        rows.push_back({{"type", row.label},
                        {"baseline_over", row.baseline_over},
                        {"system_over", row.system_over},
                        {"over_change", row.over_change ? json(*row.over_change) : json(nullptr)},
                        {"baseline_under", row.baseline_under},
                        {"system_under", row.system_under},
                        {"under_change", row.under_change ? json(*row.under_change) : json(nullptr)}});
      }
      tables.push_back({{"baseline", t.baseline}, {"system", t.system}, {"rows", rows}});
      text += eval::comparison_to_text(t) + "\n";
    }
  }
  const json report{{"stage", "evaluate"}, {"baseline", baseline}, {"systems", systems},
                    {"overcorrection", tables}};
  write_text(ctx.path("evaluate/report.json"), report.dump(2) + "\n");
  write_text(ctx.path("evaluate/report.txt"), text);
  return st.finish({"evaluate/report.json", "evaluate/report.txt"}, report.dump());
}

// ---- ablations ------------------------------------------------------------

StageResult ablate_one(const RunContext& ctx, const std::string& mode, TeacherCache& cache) {
  if (std::find(kAblationModes.begin(), kAblationModes.end(), mode) == kAblationModes.end()) {
    throw ConfigError("ablate: unknown mode '" + mode +
                      "' (no_kd_f, no_kd_r, no_kd, disc_source, disc_predict)");
  }
  const bool disc = mode == "disc_source" || mode == "disc_predict";
  distill::DistillConfig dc = distill::DistillConfig::from_kv(ctx.config());
  if (mode == "no_kd_f") dc.alpha = 0.0;
  if (mode == "no_kd_r") dc.alpha = 1.0;
  if (mode == "no_kd") dc.beta = 0.0;
  std::vector<std::string> inputs{kVocab, kCorrector, kTriples, kDev, kTest};
  if (disc) {
    inputs.push_back(kDevTriples);
  } else {
    inputs.push_back(kForward);
    inputs.push_back(kReverse);
  }
  const std::string dir = "ablate/" + mode;
  StageRun st(ctx, "ablate", dir,
              hash_config(ctx, {"model.", "train.", "distill.", "decode.", disc ? "align." : "-"},
                          dc.to_json() + mode),
              inputs);
  if (st.up_to_date()) return st.skipped();

  Vocab vocab = load_vocab(ctx);
  const auto triples = triples_of(load_examples(ctx, kTriples, vocab));
  const auto dev = load_examples(ctx, kDev, vocab);
  const auto test = load_examples(ctx, kTest, vocab);
  const ModelParams corrector = load_params(ctx, kCorrector);
  const model::Transformer net(corrector.config());

  json metrics{{"stage", "ablate"}, {"mode", mode}, {"distill", json::parse(dc.to_json())}};
  std::vector<std::string> outputs;
  std::optional<distill::TeacherBundle> teachers;
  AblationMode ablation = AblationMode::kNone;
  if (disc) {
    ablation = mode == "disc_source" ? AblationMode::kDiscSource : AblationMode::kDiscPredict;
    const auto dev_triples = triples_of(load_examples(ctx, kDevTriples, vocab));
    const AlignerOutcome aligner = fit_aligner(ctx, net, corrector, triples, dev_triples,
                                               Direction::kForward, ablation, "align-forward");
    save_model(ctx, dir + "/aligner.ckpt", aligner.result.best,
               {{"stage", "ablate"}, {"mode", mode}, {"best_epoch", aligner.result.best_epoch}});
    write_text(ctx.path(dir + "/aligner.metrics.jsonl"), aligner.epochs);
    outputs.push_back(dir + "/aligner.ckpt");
    outputs.push_back(dir + "/aligner.metrics.jsonl");
    metrics["aligner"] = training_summary(aligner.result);
    // Both slots carry the same sentence, so one teacher serves both directions.
    ModelParams reverse = aligner.result.best;
    reverse.set_role(model::ModelRole::kReverseAligner);
    teachers.emplace(aligner.result.best, std::move(reverse));
  } else {
    teachers.emplace(load_params(ctx, kForward), load_params(ctx, kReverse));
  }
  const auto logits = cache.get(net, *teachers, triples, ablation, st.inputs().at(kTriples));
  const StudentOutcome out =
      fit_student(ctx, net, corrector, triples, dev, &*teachers, logits.get(), dc, ctx.seed());
  save_model(ctx, dir + "/model.ckpt", out.result.best, {{"stage", "ablate"}, {"mode", mode}});
  write_text(ctx.path(dir + "/metrics.jsonl"), out.epochs);
  const auto sources = sources_of(test);
  const auto targets = targets_of(test);
  const model::DecodeOptions decode = decode_options(ctx);
  const auto predictions = correction::predict_corpus(net, out.result.best, sources, decode);
  write_predictions(ctx, dir + "/test.jsonl", vocab, sources, targets, predictions,
                    {{"model", mode}, {"model_hash", out.result.best.hash()}});
  outputs.insert(outputs.end(), {dir + "/model.ckpt", dir + "/metrics.jsonl", dir + "/test.jsonl"});
  metrics.update(training_summary(out.result));
  metrics["test"] = report_json(eval::score_corpus(sources, targets, predictions));
  return st.finish(outputs, metrics.dump());
}

std::vector<std::string> selected_modes(const RunContext& ctx, const std::string& key,
                                        const std::vector<std::string>& fallback) {
  std::vector<std::string> modes;
  for (const std::string& m : ctx.modes()) {
    std::stringstream ss(m);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) modes.push_back(item);
    }
  }
  if (modes.empty()) modes = ctx.config().get_strings(key, fallback);
  return modes;
}

StageResult ablate_stage(const RunContext& ctx) {
  if (!fs::exists(ctx.path(kStudent))) {
    throw DependencyError("ablate compares against the full model; run `alirector distill` first");
  }
  const auto modes = selected_modes(ctx, "ablate.modes", kAblationModes);
  for (const std::string& m : modes) {
    if (std::find(kAblationModes.begin(), kAblationModes.end(), m) == kAblationModes.end()) {
      throw ConfigError("ablate: unknown mode '" + m +
                        "' (no_kd_f, no_kd_r, no_kd, disc_source, disc_predict)");
    }
  }
  const StageResult full = predict_one(ctx, "alirector", kStudent);
  json rows = json::array();
  std::string text = fmt::format("{:<14}{:>8}{:>8}{:>8}{:>6}{:>6}\n", "system", "P", "R", "F0.5",
                                 "FP", "FN");
  auto add_row = [&](const std::string& name, const json& test) {
    rows.push_back({{"system", name},
                    {"P", test["precision"]},
                    {"R", test["recall"]},
                    {"F05", test["f05"]},
                    {"FP", test["fp"]},
                    {"FN", test["fn"]}});
    text += fmt::format("{:<14}{:>8.2f}{:>8.2f}{:>8.2f}{:>6}{:>6}\n", name,
                        test["precision"].get<double>(), test["recall"].get<double>(),
                        test["f05"].get<double>(), test["fp"].get<long>(), test["fn"].get<long>());
  };
  add_row("alirector", json::parse(full.metrics_json)["test"]);
  TeacherCache& cache = teacher_cache();
  bool all_skipped = full.skipped;
  for (const std::string& mode : modes) {
    const StageResult r = ablate_one(ctx, mode, cache);
    all_skipped = all_skipped && r.skipped;
    add_row(mode, json::parse(r.metrics_json)["test"]);
  }
  const json report{{"stage", "ablate"}, {"rows", rows}};
  write_text(ctx.path("ablate/report.json"), report.dump(2) + "\n");
  write_text(ctx.path("ablate/report.txt"), text);
  write_text(ctx.path("ablate/metrics.json"), report.dump() + "\n");
  return {"ablate", all_skipped, ctx.path("ablate"), report.dump() + "\n"};
}

// ---- sweep ----------------------------------------------------------------

std::string cell_key(double alpha, double beta, std::uint64_t seed) {
  return fmt::format("a{:g}-b{:g}-s{}", alpha, beta, seed);
}

StageResult sweep_stage(const RunContext& ctx) {
  const distill::DistillConfig base = distill::DistillConfig::from_kv(ctx.config());
  const auto alphas = ctx.config().get_doubles("sweep.alpha", {base.alpha});
  const auto betas = ctx.config().get_doubles("sweep.beta", {0.5, 1.0, 1.5, 2.0});
  std::vector<std::uint64_t> seeds;
  for (double s : ctx.config().get_doubles("sweep.seeds", {static_cast<double>(ctx.seed())})) {
    if (s < 0 || s != std::floor(s)) throw ConfigError("sweep.seeds must be non-negative integers");
    seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (alphas.empty() || betas.empty() || seeds.empty()) {
    throw ConfigError("sweep grid lists must be non-empty");
  }
  for (double a : alphas) {
    for (double b : betas) distill::DistillConfig{a, b, base.tau}.validate();
  }
  for (const char* rel : {kVocab, kCorrector, kForward, kReverse, kTriples, kDev, kTest}) {
    if (!fs::exists(ctx.path(rel))) {
      throw DependencyError("sweep needs " + ctx.path(rel).string() + "; run `alirector " +
                            producer_of(rel) + "` first");
    }
  }

  // Loaded lazily: a fully resumed sweep touches no model.
  struct Shared {
    Vocab vocab;
    std::vector<AlignmentExample> triples;
    std::vector<ParallelExample> dev;
    std::vector<ParallelExample> test;
    ModelParams corrector;
    model::Transformer net;
    distill::TeacherBundle teachers;
    std::shared_ptr<distill::TeacherLogits> logits;
  };
  std::unique_ptr<Shared> shared;
  auto load_shared = [&]() -> Shared& {
    if (!shared) {
      Vocab vocab = load_vocab(ctx);
      auto triples = triples_of(load_examples(ctx, kTriples, vocab));
      auto dev = load_examples(ctx, kDev, vocab);
      auto test = load_examples(ctx, kTest, vocab);
      ModelParams corrector = load_params(ctx, kCorrector);
      model::Transformer net(corrector.config());
      distill::TeacherBundle teachers(load_params(ctx, kForward), load_params(ctx, kReverse));
      shared.reset(new Shared{std::move(vocab), std::move(triples), std::move(dev),
                              std::move(test), std::move(corrector), std::move(net),
                              std::move(teachers), nullptr});
      shared->logits = teacher_cache().get(shared->net, shared->teachers, shared->triples,
                                           AblationMode::kNone, sha256_file(ctx.path(kTriples)));
    }
    return *shared;
  };

  json cells = json::array();
  bool all_skipped = true;
  for (double alpha : alphas) {
    for (double beta : betas) {
      for (std::uint64_t seed : seeds) {
        const distill::DistillConfig dc{alpha, beta, base.tau};
        const std::string key = cell_key(alpha, beta, seed);
        const std::string dir = "sweep/cells/" + key;
        StageRun st(ctx, "sweep", dir,
                    distill_hash(ctx, dc, "cell-seed=" + std::to_string(seed) +
                                              ctx.config().dump("decode.")),
                    {kVocab, kCorrector, kForward, kReverse, kTriples, kDev, kTest});
        StageResult r;
        if (st.up_to_date()) {
          r = st.skipped();
        } else {
          all_skipped = false;
          Shared& s = load_shared();
          const StudentOutcome out = fit_student(ctx, s.net, s.corrector, s.triples, s.dev,
                                                 &s.teachers, s.logits.get(), dc, seed);
          const auto sources = sources_of(s.test);
          const auto targets = targets_of(s.test);
          const auto predictions =
              correction::predict_corpus(s.net, out.result.best, sources, decode_options(ctx));
          write_text(ctx.path(dir + "/metrics.jsonl"), out.epochs);
          json m{{"stage", "sweep"}, {"alpha", alpha}, {"beta", beta}, {"seed", seed}};
          m.update(training_summary(out.result));
          m["test"] = short_report(eval::score_corpus(sources, targets, predictions));
          r = st.finish({dir + "/metrics.jsonl"}, m.dump());
        }
        cells.push_back(json::parse(r.metrics_json));
      }
    }
  }

  // Seed means per (alpha, beta), then the precision/recall trend along beta.
  json curve = json::array();
  json trends = json::array();
  std::string csv = "alpha,beta,seeds,dev_P,dev_R,dev_F05,test_P,test_R,test_F05\n";
  std::string text;
  for (double alpha : alphas) {
    std::vector<double> ps;
    std::vector<double> rs;
    for (double beta : betas) {
      double sums[6] = {0, 0, 0, 0, 0, 0};
      std::size_t n = 0;
      for (const json& c : cells) {
        if (c["alpha"].get<double>() != alpha || c["beta"].get<double>() != beta) continue;
        sums[0] += c["dev"]["P"].get<double>();
        sums[1] += c["dev"]["R"].get<double>();
        sums[2] += c["dev"]["F05"].get<double>();
        sums[3] += c["test"]["P"].get<double>();
        sums[4] += c["test"]["R"].get<double>();
        sums[5] += c["test"]["F05"].get<double>();
        ++n;
      }
      for (double& v : sums) v /= static_cast<double>(n);
      curve.push_back({{"alpha", alpha},
                       {"beta", beta},
                       {"seeds", n},
                       {"dev", {{"P", sums[0]}, {"R", sums[1]}, {"F05", sums[2]}}},
                       {"test", {{"P", sums[3]}, {"R", sums[4]}, {"F05", sums[5]}}}});
      csv += fmt::format("{:g},{:g},{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f}\n", alpha, beta, n,
                         sums[0], sums[1], sums[2], sums[3], sums[4], sums[5]);
      ps.push_back(sums[3]);
      rs.push_back(sums[4]);
    }
    std::size_t p_up = 0;
    std::size_t r_down = 0;
    for (std::size_t i = 1; i < ps.size(); ++i) {
      p_up += ps[i] >= ps[i - 1] ? 1 : 0;
      r_down += rs[i] <= rs[i - 1] ? 1 : 0;
    }
    trends.push_back({{"alpha", alpha},
                      {"transitions", ps.empty() ? 0 : ps.size() - 1},
                      {"precision_non_decreasing", p_up},
                      {"recall_non_increasing", r_down}});
    text += fmt::format("alpha {:g}: precision non-decreasing in {}/{} steps, recall "
                        "non-increasing in {}/{} steps\n",
                        alpha, p_up, ps.size() - 1, r_down, rs.size() - 1);
  }
  const json report{{"stage", "sweep"}, {"cells", cells}, {"curve", curve}, {"trend", trends}};
  write_text(ctx.path("sweep/report.json"), report.dump(2) + "\n");
  write_text(ctx.path("sweep/curve.csv"), csv);
  write_text(ctx.path("sweep/report.txt"), text);
  write_text(ctx.path("sweep/metrics.json"), report.dump() + "\n");
  return {"sweep", all_skipped, ctx.path("sweep"), report.dump() + "\n"};
}

}  // namespace

StageResult run_stage(const std::string& stage, const RunContext& ctx) {
  if (stage == "gen-data") return gen_data(ctx);
  if (stage == "train-correct") return train_correct(ctx);
  if (stage == "build-triples") return build_triples(ctx);
  if (stage == "train-align") return train_align(ctx);
  if (stage == "distill") return distill_stage(ctx);
  if (stage == "predict") return predict_stage(ctx);
  if (stage == "predict-and-align") return predict_and_align_stage(ctx);
  if (stage == "evaluate") return evaluate_stage(ctx);
  if (stage == "ablate") return ablate_stage(ctx);
  if (stage == "sweep") return sweep_stage(ctx);
  throw ConfigError("unknown stage '" + stage + "'");
}

std::vector<StageResult> run_pipeline(const RunContext& ctx) {
  std::vector<StageResult> out;
  for (const char* stage :
       {"gen-data", "train-correct", "build-triples", "train-align", "distill", "evaluate"}) {
    out.push_back(run_stage(stage, ctx));
  }
  return out;
}

}  // namespace alirector::pipeline
