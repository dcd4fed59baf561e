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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include "alirector/common/error.hpp"
#include "alirector/pipeline/context.hpp"
#include "alirector/pipeline/manifest.hpp"
#include "alirector/pipeline/stages.hpp"

namespace alirector::pipeline {
namespace {

using nlohmann::json;

constexpr const char* kTinyConfig = R"(seed = 3
corpus.count = 60
corpus.dev_count = 6
corpus.test_count = 6
corpus.vocab_size = 10
corpus.min_len = 3
corpus.max_len = 6
model.layers = 1
model.heads = 2
model.hidden_dim = 8
model.ffn_dim = 16
train.max_epochs = 1
train.warmup_steps = 1
train.batch_size = 8
decode.beam_size = 1
)";

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("alirector_pipeline_") + info->name());
    fs::remove_all(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  RunContext context(const std::string& leaf, const std::string& extra = "", bool force = false) const {
    return RunContext(KeyValues::parse(std::string(kTinyConfig) + extra), root_ / leaf, force);
  }

  fs::path root_;
};

TEST_F(PipelineTest, FullPipelineWritesEveryArtifact) {
  const RunContext ctx = context("run");
  const auto results = run_pipeline(ctx);
  ASSERT_EQ(results.size(), 6u);
  for (const char* rel :
       {"data/vocab.json", "data/correction_train.jsonl", "data/alignment_train.jsonl", "data/dev.jsonl",
        "data/test.jsonl", "corrector/model.ckpt", "triples/alignment.jsonl", "triples/dev.jsonl",
        "align/forward/model.ckpt", "align/reverse/model.ckpt", "distill/model.ckpt",
        "evaluate/report.json", "evaluate/report.txt"}) {
    EXPECT_TRUE(fs::exists(ctx.path(rel))) << rel;
  }
  const json report = json::parse(read_text(ctx.path("evaluate/report.json")));
  EXPECT_TRUE(report["systems"].contains("alirector"));
  EXPECT_TRUE(report["systems"].contains("corrector"));
  EXPECT_TRUE(report["systems"].contains("predict_and_align"));
  EXPECT_EQ(report["baseline"], "corrector");

  // The student records which teachers and triples it was distilled from.
  const json distill = json::parse(read_text(ctx.path("distill/metrics.json")));
  const json align = json::parse(read_text(ctx.path("align/metrics.json")));
  EXPECT_EQ(distill["provenance"]["teacher_forward_hash"], align["forward"]["param_hash"]);
  EXPECT_EQ(distill["provenance"]["teacher_reverse_hash"], align["reverse"]["param_hash"]);

  // Everything is up to date now.
  for (const auto& r : run_pipeline(ctx)) EXPECT_TRUE(r.skipped) << r.stage;
}

TEST_F(PipelineTest, MissingInputNamesProducerStage) {
  const RunContext ctx = context("run");
  try {
    run_stage("train-correct", ctx);
    FAIL() << "expected DependencyError";
  } catch (const DependencyError& e) {
    EXPECT_NE(std::string(e.what()).find("gen-data"), std::string::npos) << e.what();
  }
  run_stage("gen-data", ctx);
  run_stage("train-correct", ctx);
  try {
    run_stage("distill", ctx);
    FAIL() << "expected DependencyError";
  } catch (const DependencyError& e) {
    EXPECT_NE(std::string(e.what()).find("train-align"), std::string::npos) << e.what();
  }
  EXPECT_THROW(run_stage("no-such-stage", ctx), ConfigError);
}

TEST_F(PipelineTest, RerunSkipsUnlessForcedOrChanged) {
  const RunContext ctx = context("run");
  const auto first = run_stage("gen-data", ctx);
  EXPECT_FALSE(first.skipped);
  const auto second = run_stage("gen-data", ctx);
  EXPECT_TRUE(second.skipped);
  EXPECT_EQ(second.metrics_json, first.metrics_json);

  const auto forced = run_stage("gen-data", context("run", "", true));
  EXPECT_FALSE(forced.skipped);
  EXPECT_EQ(forced.metrics_json, first.metrics_json);

  const auto changed = run_stage("gen-data", context("run", "corpus.count = 61\n"));
  EXPECT_FALSE(changed.skipped);
  EXPECT_NE(changed.metrics_json, first.metrics_json);
}

TEST_F(PipelineTest, TamperedOutputIsRebuilt) {
  const RunContext ctx = context("run");
  run_stage("gen-data", ctx);
  run_stage("train-correct", ctx);
  const std::string original = read_text(ctx.path("corrector/metrics.json"));
  write_text(ctx.path("corrector/metrics.jsonl"), "tampered\n");
  const auto again = run_stage("train-correct", ctx);
  EXPECT_FALSE(again.skipped);
  EXPECT_EQ(read_text(ctx.path("corrector/metrics.json")), original);
}

TEST_F(PipelineTest, SeparateRunsAreBitwiseIdentical) {
  const RunContext a = context("a");
  const RunContext b = context("b");
  for (const char* stage : {"gen-data", "train-correct", "build-triples"}) {
    run_stage(stage, a);
    run_stage(stage, b);
  }
  for (const char* rel : {"data/metrics.json", "corrector/metrics.json", "triples/metrics.json",
                          "data/test.jsonl", "triples/alignment.jsonl"}) {
    EXPECT_EQ(read_text(a.path(rel)), read_text(b.path(rel))) << rel;
  }
  const RunContext other = context("c", "seed = 4\n");
  run_stage("gen-data", other);
  EXPECT_NE(read_text(a.path("data/test.jsonl")), read_text(other.path("data/test.jsonl")));
}

TEST_F(PipelineTest, SweepResumesFinishedCells) {
  const RunContext ctx = context("run", "sweep.beta = 0.5,1\n");
  for (const char* stage : {"gen-data", "train-correct", "build-triples", "train-align"}) run_stage(stage, ctx);
  run_stage("sweep", ctx);
  const auto cell = ctx.path("sweep/cells/a0.9-b0.5-s3/manifest.json");
  ASSERT_TRUE(fs::exists(cell));
  const std::string manifest = read_text(cell);

  const RunContext wider = context("run", "sweep.beta = 0.5,1,1.5\n");
  const auto result = run_stage("sweep", wider);
  EXPECT_FALSE(result.skipped);
  EXPECT_EQ(read_text(cell), manifest);
  const json report = json::parse(read_text(ctx.path("sweep/report.json")));
  EXPECT_EQ(report["cells"].size(), 3u);
  EXPECT_EQ(report["curve"].size(), 3u);
  EXPECT_TRUE(run_stage("sweep", wider).skipped);
}

TEST_F(PipelineTest, AblateWritesRequestedModes) {
  RunContext ctx = context("run");
  for (const char* stage : {"gen-data", "train-correct", "build-triples", "train-align", "distill"}) {
    run_stage(stage, ctx);
  }
  ctx.set_modes({"no_kd", "disc_predict"});
  run_stage("ablate", ctx);
  EXPECT_TRUE(fs::exists(ctx.path("ablate/no_kd/model.ckpt")));
  EXPECT_TRUE(fs::exists(ctx.path("ablate/disc_predict/aligner.ckpt")));
  EXPECT_FALSE(fs::exists(ctx.path("ablate/disc_source")));
  const json no_kd = json::parse(read_text(ctx.path("ablate/no_kd/metrics.json")));
  EXPECT_EQ(no_kd["distill"]["beta"], 0.0);

  // With a vanilla model present, evaluation compares against it.
  run_stage("evaluate", ctx);
  const json report = json::parse(read_text(ctx.path("evaluate/report.json")));
  EXPECT_EQ(report["baseline"], "vanilla");

  ctx.set_modes({"bogus"});
  EXPECT_THROW(run_stage("ablate", ctx), ConfigError);
}

#ifdef ALIRECTOR_CLI_PATH
int run_cli(const std::string& args) {
  const std::string command = std::string("\"") + ALIRECTOR_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(PipelineTest, CliExitCodes) {
  if (std::string(ALIRECTOR_CLI_PATH).empty()) GTEST_SKIP() << "command-line tool not built";
  fs::create_directories(root_);
  const fs::path config = root_ / "tiny.conf";
  write_text(config, kTinyConfig);
  const std::string common = "-q -c \"" + config.string() + "\" --run-dir \"" + (root_ / "cli").string() + "\"";
  EXPECT_EQ(run_cli("train-correct " + common), 2);
  EXPECT_EQ(run_cli("gen-data " + common), 0);
  EXPECT_EQ(run_cli("gen-data " + common + " --set corpus.min_len=9"), 1);
  EXPECT_EQ(run_cli("no-such-stage " + common), 1);
}
#endif

}  // namespace
}  // namespace alirector::pipeline
