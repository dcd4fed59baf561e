#include "alirector/model/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "alirector/common/error.hpp"
#include "alirector/corpus/vocab.hpp"

namespace alirector::model {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

RowVector log_softmax_masked(const RowVector& logits) {
  RowVector out = logits;
  for (Token t = 0; t < corpus::kNumReserved && t < out.size(); ++t) {
    if (t != corpus::kEos) out(t) = kNegInf;
  }
  const double top = out.maxCoeff();
  const double lse = top + std::log((out.array() - top).exp().sum());
  return (out.array() - lse).matrix();
}

struct Hypothesis {
  DecoderState state;
  Tokens tokens;
  double logp = 0.0;
  RowVector next;
};

struct Start {
  Hypothesis hyp;
  std::size_t limit = 0;
};

Start prepare(const Transformer& model, const ModelParams& params, const SequenceInput& prefix,
              const DecodeOptions& options) {
  if (prefix.decoder.empty()) throw ContractError("decoding prefix must be non-empty");
  Start s;
  s.hyp.state = model.start(params, prefix.encoder);
  RowVector logits;
  for (Token t : prefix.decoder) logits = model.step(params, s.hyp.state, t);
  s.hyp.next = log_softmax_masked(logits);
  const std::size_t max_positions = model.config().max_positions;
  // The final token is never fed back, hence the + 1.
  s.limit = max_positions - prefix.decoder.size() + 1;
  if (options.max_len > 0) s.limit = std::min(s.limit, options.max_len);
  return s;
}

DecodeResult greedy(const Transformer& model, const ModelParams& params, Start s) {
  Hypothesis& h = s.hyp;
  for (std::size_t k = 0; k < s.limit; ++k) {
    Eigen::Index best = 0;
    h.logp += h.next.maxCoeff(&best);
    const auto token = static_cast<Token>(best);
    if (token == corpus::kEos) {
      return {h.tokens, h.logp / static_cast<double>(k + 1), false};
    }
    h.tokens.push_back(token);
    if (k + 1 < s.limit) h.next = log_softmax_masked(model.step(params, h.state, token));
  }
  return {h.tokens, h.logp / static_cast<double>(std::max<std::size_t>(h.tokens.size(), 1)), true};
}

bool better(const DecodeResult& a, const DecodeResult& b) {
  if (a.truncated != b.truncated) return !a.truncated;
  return a.score > b.score;
}

}  // namespace

DecodeResult decode(const Transformer& model, const ModelParams& params,
                    const SequenceInput& prefix, const DecodeOptions& options) {
  if (options.beam_size == 0) throw ContractError("beam_size must be at least 1");
  Start start = prepare(model, params, prefix, options);
  const DecodeResult greedy_result = greedy(model, params, start);
  if (options.beam_size == 1) return greedy_result;

  struct Candidate {
    std::size_t beam;
    Token token;
    double logp;
  };
  const std::size_t width = options.beam_size;
  std::vector<Hypothesis> live;
  live.push_back(std::move(start.hyp));
  std::vector<DecodeResult> finished;
  for (std::size_t k = 0; k < start.limit && !live.empty(); ++k) {
    std::vector<Candidate> candidates;
    for (std::size_t b = 0; b < live.size(); ++b) {
      const RowVector& next = live[b].next;
      for (Eigen::Index v = 0; v < next.size(); ++v) {
        if (next(v) == kNegInf) continue;
        candidates.push_back({b, static_cast<Token>(v), live[b].logp + next(v)});
      }
    }
    const std::size_t keep = std::min(candidates.size(), 2 * width);
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), [](const Candidate& a, const Candidate& b) {
                        if (a.logp != b.logp) return a.logp > b.logp;
                        if (a.beam != b.beam) return a.beam < b.beam;
                        return a.token < b.token;
                      });
    std::vector<Hypothesis> next_live;
    for (std::size_t i = 0; i < keep && next_live.size() < width; ++i) {
      const Candidate& c = candidates[i];
      if (c.token == corpus::kEos) {
        if (i < width) {
          finished.push_back({live[c.beam].tokens, c.logp / static_cast<double>(k + 1), false});
        }
        continue;
      }
      Hypothesis h;
      h.state = live[c.beam].state;
      h.tokens = live[c.beam].tokens;
      h.tokens.push_back(c.token);
      h.logp = c.logp;
      next_live.push_back(std::move(h));
    }
    if (finished.size() >= width) break;
    if (k + 1 == start.limit) {
      for (const Hypothesis& h : next_live) {
        finished.push_back({h.tokens, h.logp / static_cast<double>(h.tokens.size()), true});
      }
      break;
    }
    for (Hypothesis& h : next_live) {
      h.next = log_softmax_masked(model.step(params, h.state, h.tokens.back()));
    }
    live = std::move(next_live);
  }

  DecodeResult best = greedy_result;
  for (const DecodeResult& r : finished) {
    if (better(r, best)) best = r;
  }
  return best;
}

}  // namespace alirector::model
