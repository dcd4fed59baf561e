#include <gtest/gtest.h>

#include <cmath>

#include "alirector/common/error.hpp"
#include "alirector/correction/loss.hpp"
#include "alirector/correction/optimizer.hpp"
#include "alirector/correction/predict.hpp"
#include "alirector/correction/train.hpp"
#include "alirector/model/prompt.hpp"
#include "test_util.hpp"

namespace alirector::correction {
namespace {

using model::Matrix;

TEST(GecLoss, UniformLogits) {
  const Matrix logits = Matrix::Zero(5, 20);
  EXPECT_NEAR(gec_loss(logits, Tokens{1, 2, 3, 4, 5}), 5.0 * std::log(20.0), 1e-12);
  EXPECT_NEAR(gec_loss_mean(logits, Tokens{1, 2, 3, 4, 5}), std::log(20.0), 1e-12);
}

TEST(GecLoss, PeakedLogitsApproachZero) {
  Matrix logits = Matrix::Zero(2, 4);
  logits(0, 1) = 50.0;
  logits(1, 3) = 50.0;
  EXPECT_LT(gec_loss(logits, Tokens{1, 3}), 1e-20);
  EXPECT_NEAR(gec_loss(logits, Tokens{0, 3}), 50.0, 1e-9);
}

TEST(GecLoss, GradientIsSoftmaxMinusOneHot) {
  Matrix logits(2, 3);
  logits << 0.1, -0.4, 2.0, 1.5, 0.0, -1.0;
  const Tokens gold{2, 0};
  Matrix d;
  gec_loss(logits, gold, &d);
  for (Eigen::Index r = 0; r < 2; ++r) {
    for (Eigen::Index c = 0; c < 3; ++c) {
      Matrix up = logits, down = logits;
      up(r, c) += 1e-6;
      down(r, c) -= 1e-6;
      const double numeric = (gec_loss(up, gold) - gec_loss(down, gold)) / 2e-6;
      EXPECT_NEAR(d(r, c), numeric, 1e-7);
    }
    EXPECT_NEAR(d.row(r).sum(), 0.0, 1e-12);
  }
}

TEST(GecLoss, ShapeErrors) {
  EXPECT_THROW(gec_loss(Matrix::Zero(2, 3), Tokens{1}), ContractError);
  EXPECT_THROW(gec_loss(Matrix::Zero(1, 3), Tokens{3}), ContractError);
}

TEST(Schedule, WarmupThenPolynomialDecay) {
  LearningRateSchedule s;
  s.peak = 1.0;
  s.end = 0.0;
  s.warmup_steps = 10;
  s.total_steps = 110;
  EXPECT_NEAR(s.at(5), 0.5, 1e-12);
  EXPECT_NEAR(s.at(10), 1.0, 1e-12);
  EXPECT_NEAR(s.at(60), 0.5, 1e-12);
  EXPECT_NEAR(s.at(110), 0.0, 1e-12);
}

TEST(Adam, FirstStepMovesEachWeightByLearningRate) {
  Adam adam(3);
  std::vector<double> w{1.0, -2.0, 0.5};
  const std::vector<double> g{0.3, -7.0, 0.0};
  adam.step(w, g, 0.1);
  EXPECT_NEAR(w[0], 0.9, 1e-6);
  EXPECT_NEAR(w[1], -1.9, 1e-6);
  EXPECT_NEAR(w[2], 0.5, 1e-12);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(ClipGradients, ScalesToMaxNorm) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_NEAR(clip_gradients(g, 1.0), 5.0, 1e-12);
  EXPECT_NEAR(g[0], 0.6, 1e-12);
  EXPECT_NEAR(g[1], 0.8, 1e-12);
  std::vector<double> small{0.1};
  clip_gradients(small, 1.0);
  EXPECT_EQ(small[0], 0.1);
}

struct CopyTask {
  model::ModelConfig config = testing::micro_config();
  model::Transformer net{config};
  TrainingTask task;
  std::vector<Tokens> sources;
  std::vector<Tokens> targets;

  CopyTask() {
    config.init_std = 0.1;
    net = model::Transformer(config);
    Rng rng(12);
    for (int i = 0; i < 24; ++i) {
      Tokens x;
      for (int k = 0; k < 4; ++k) x.push_back(static_cast<Token>(uniform_int(rng, 9, 19)));
      Tokens y = x;
      // Symbol 9 marks a redundant token to be removed.
      y.erase(std::remove(y.begin(), y.end(), Token{9}), y.end());
      if (y.empty()) continue;
      sources.push_back(x);
      targets.push_back(y);
      task.examples.push_back(model::make_sequence_input(config, model::Task::kCorrect, x, y));
    }
  }

  TrainConfig train_config(std::size_t epochs) const {
    TrainConfig c;
    c.batch_size = 8;
    c.max_epochs = epochs;
    c.learning_rate = 1e-2;
    c.warmup_steps = 3;
    c.patience = 0;
    c.seed = 2;
    c.probe_size = 4;
    return c;
  }
};

TEST(Train, LossFallsAndRunIsDeterministic) {
  CopyTask t;
  const auto init = model::ModelParams::initialize(t.config, model::ModelRole::kCorrector, 1);
  const auto a = train(t.net, init, t.task, t.train_config(6));
  const auto b = train(t.net, init, t.task, t.train_config(6));
  ASSERT_EQ(a.history.size(), 6u);
  EXPECT_LT(a.history.back().train.gec, a.history.front().train.gec);
  EXPECT_EQ(a.best.hash(), b.best.hash());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train.gec, b.history[i].train.gec);
    EXPECT_EQ(a.history[i].train.total, a.history[i].train.gec);
  }
  TrainConfig other = t.train_config(6);
  other.seed = 3;
  EXPECT_NE(train(t.net, init, t.task, other).best.hash(), a.best.hash());
}

TEST(Train, DevSelectionKeepsBestEpoch) {
  CopyTask t;
  std::size_t calls = 0;
  t.task.evaluate_dev = [&](const model::ModelParams& p) {
    ++calls;
    return evaluate_corrector(t.net, p, t.sources, t.targets, {1, 0});
  };
  const auto result = train(t.net, model::ModelParams::initialize(t.config, model::ModelRole::kCorrector, 1),
                            t.task, t.train_config(4));
  EXPECT_EQ(calls, result.history.size());
  double best = -1.0;
  std::size_t flagged = 0;
  for (const auto& m : result.history) {
    best = std::max(best, m.dev_f05);
    flagged += m.best ? 1 : 0;
  }
  EXPECT_GE(flagged, 1u);
  EXPECT_EQ(result.history[result.best_epoch - 1].dev_f05, best);
  const auto report = evaluate_corrector(t.net, result.best, t.sources, t.targets, {1, 0});
  EXPECT_NEAR(report.f05, best, 1e-9);
}

TEST(Train, InvalidConfigRejected) {
  CopyTask t;
  TrainConfig c = t.train_config(2);
  c.batch_size = 0;
  EXPECT_THROW(train(t.net, model::ModelParams::initialize(t.config, model::ModelRole::kCorrector, 1), t.task, c),
               ConfigError);
}

TEST(PredictCorpus, LearnsToDropMarkedToken) {
  CopyTask t;
  const auto result = train(t.net, model::ModelParams::initialize(t.config, model::ModelRole::kCorrector, 1),
                            t.task, t.train_config(150));
  const auto predictions = predict_corpus(t.net, result.best, t.sources, {1, 0});
  ASSERT_EQ(predictions.size(), t.sources.size());
  std::size_t exact = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) exact += predictions[i] == t.targets[i] ? 1 : 0;
  EXPECT_GE(exact, predictions.size() - 1);
  const auto report = evaluate_corrector(t.net, result.best, t.sources, t.targets, {2, 0});
  EXPECT_GT(report.f05, 90.0);
}

}  // namespace
}  // namespace alirector::correction
