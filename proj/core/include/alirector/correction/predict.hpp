#pragma once

#include <vector>

#include "alirector/eval/score.hpp"
#include "alirector/model/decode.hpp"

namespace alirector::correction {

// Decodes a correction for every source, order preserved. Accepts corrector
// and student parameters; throws ContractError for aligner roles.
std::vector<Tokens> predict_corpus(const model::Transformer& model,
                                   const model::ModelParams& params,
                                   const std::vector<Tokens>& sources,
                                   const model::DecodeOptions& options);

// predict_corpus followed by score_corpus against `targets`.
eval::EvalReport evaluate_corrector(const model::Transformer& model,
                                    const model::ModelParams& params,
                                    const std::vector<Tokens>& sources,
                                    const std::vector<Tokens>& targets,
                                    const model::DecodeOptions& options);

}  // namespace alirector::correction
