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

#pragma once

#include <string>
#include <vector>

#include "alirector/pipeline/context.hpp"

namespace alirector::pipeline {

inline const std::vector<std::string> kStages = {
    "gen-data", "train-correct", "build-triples",     "train-align", "distill",
    "predict",  "predict-and-align", "evaluate", "ablate",      "sweep"};

inline const std::vector<std::string> kAblationModes = {"no_kd_f", "no_kd_r", "no_kd",
                                                        "disc_source", "disc_predict"};

struct StageResult {
  std::string stage;
  bool skipped = false;
  fs::path output_dir;
  // Deterministic summary (no timings); also written to
  // <output_dir>/metrics.json.
  std::string metrics_json;
};

// Runs one stage. Throws DependencyError naming the stage to run first when
// an input artifact is missing, ConfigError for an unknown stage or mode.
StageResult run_stage(const std::string& stage, const RunContext& ctx);

// gen-data through evaluate in order.
std::vector<StageResult> run_pipeline(const RunContext& ctx);

}  // namespace alirector::pipeline
