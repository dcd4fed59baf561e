#include "alirector/correction/predict.hpp"

#include "alirector/common/error.hpp"
#include "alirector/model/prompt.hpp"

namespace alirector::correction {

std::vector<Tokens> predict_corpus(const model::Transformer& model,
                                   const model::ModelParams& params,
                                   const std::vector<Tokens>& sources,
                                   const model::DecodeOptions& options) {
  const model::ModelRole role = params.role();
  if (role != model::ModelRole::kCorrector && role != model::ModelRole::kAlirectorStudent) {
    throw ContractError("predict_corpus needs a correction model, got " +
                        std::string(model::to_string(role)));
  }
  std::vector<Tokens> out;
  out.reserve(sources.size());
  for (const Tokens& source : sources) {
    const auto prefix =
        model::make_sequence_input(model.config(), model::Task::kCorrect, source, std::nullopt);
    out.push_back(model::decode(model, params, prefix, options).tokens);
  }
  return out;
}

eval::EvalReport evaluate_corrector(const model::Transformer& model,
                                    const model::ModelParams& params,
                                    const std::vector<Tokens>& sources,
                                    const std::vector<Tokens>& targets,
                                    const model::DecodeOptions& options) {
  return eval::score_corpus(sources, targets, predict_corpus(model, params, sources, options));
}

}  // namespace alirector::correction
