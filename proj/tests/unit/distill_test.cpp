// Distillation objective: tempered softmax, KL, the two-teacher mix and the
// student training loop with frozen teachers.

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "alirector/alignment/align.hpp"
#include "alirector/common/error.hpp"
#include "alirector/common/rng.hpp"
#include "alirector/correction/loss.hpp"
#include "alirector/distill/kd.hpp"
#include "alirector/distill/student.hpp"
#include "alirector/model/prompt.hpp"
#include "alirector/model/transformer.hpp"
#include "test_util.hpp"

namespace alirector::distill {
namespace {

using model::Matrix;
using model::RowVector;

RowVector row(std::initializer_list<double> v) {
  RowVector r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

Matrix random_logits(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 3.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * (2.0 * uniform01(rng) - 1.0);
  return m;
}

TEST(TemperedDistribution, ClosedForms) {
  const RowVector uniform = tempered_distribution(RowVector::Zero(7), 1.0);
  for (Eigen::Index i = 0; i < 7; ++i) EXPECT_NEAR(uniform(i), 1.0 / 7.0, 1e-15);

  const RowVector p = tempered_distribution(row({1, 0}), 1.0);
  const double e = std::exp(1.0);
  EXPECT_NEAR(p(0), e / (e + 1), 1e-12);
  EXPECT_NEAR(p(1), 1 / (e + 1), 1e-12);
  EXPECT_NEAR(p(0), 0.7311, 1e-4);

  const RowVector flat = tempered_distribution(row({1, 0}), 1e6);
  EXPECT_NEAR(flat(0), 0.5, 1e-4);
  EXPECT_NEAR(flat(1), 0.5, 1e-4);
}

TEST(TemperedDistribution, RowsSumToOne) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double tau = 0.1 + 5.0 * uniform01(rng);
    const RowVector p = tempered_distribution(random_logits(rng, 1, 20, 50.0).row(0), tau);
    ASSERT_NEAR(p.sum(), 1.0, 1e-9);
    ASSERT_TRUE((p.array() >= 0).all());
  }
}

TEST(KlDiv, HandValueAndIdentity) {
  const double e = std::exp(1.0);
  const RowVector p = row({e / (e + 1), 1 / (e + 1)});
  const RowVector q = row({1 / (e + 1), e / (e + 1)});
  EXPECT_NEAR(kl_div(p, q), 0.4621, 1e-3);
  EXPECT_NEAR(kl_div(p, q), (e - 1) / (e + 1), 1e-12);
  EXPECT_LT(kl_div(p, p), 1e-9);
}

TEST(KlDiv, NonNegativeOnRandomPairs) {
  Rng rng(6);
  for (int i = 0; i < 10000; ++i) {
    const Matrix z = random_logits(rng, 2, 12, 4.0);
    const RowVector p = tempered_distribution(z.row(0), 1.0);
    const RowVector q = tempered_distribution(z.row(1), 1.0);
    ASSERT_GE(kl_div(p, q), 0.0);
    ASSERT_LT(kl_div(p, p), 1e-9);
  }
}

TEST(KlDiv, ZeroStudentMassIsClampedAndFlagged) {
  bool clamped = false;
  const double v = kl_div(row({0.5, 0.5}), row({1.0, 0.0}), &clamped);
  EXPECT_TRUE(clamped);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 0.5 * std::log(0.5) + 0.5 * std::log(0.5 / 1e-12), 1e-9);
  clamped = false;
  kl_div(row({1.0, 0.0}), row({0.5, 0.5}), &clamped);
  EXPECT_FALSE(clamped);
}

TEST(KdLoss, IdenticalLogitsGiveZero) {
  Rng rng(7);
  const Matrix z = random_logits(rng, 4, 9);
  const KdTerms t = kd_loss(z, z, z, DistillConfig{});
  EXPECT_NEAR(t.forward, 0.0, 1e-12);
  EXPECT_NEAR(t.reverse, 0.0, 1e-12);
  EXPECT_NEAR(t.kd, 0.0, 1e-12);
}

TEST(KdLoss, AlphaOneKeepsOnlyForwardTeacher) {
  Rng rng(8);
  const Matrix f = random_logits(rng, 3, 6), r = random_logits(rng, 3, 6), c = random_logits(rng, 3, 6);
  const KdTerms t = kd_loss(f, r, c, DistillConfig{1.0, 0.5, 1.0});
  EXPECT_EQ(t.kd, t.forward);
  const KdTerms mixed = kd_loss(f, r, c, DistillConfig{0.3, 0.5, 2.0});
  EXPECT_NEAR(mixed.kd, 0.3 * mixed.forward + 0.7 * mixed.reverse, 1e-12);
}

TEST(KdLoss, SinglePositionMatchesDirectFormula) {
  Matrix f(1, 2), r(1, 2), c(1, 2);
  f << 2.0, -1.0;
  r << 0.5, 0.25;
  c << -0.3, 0.8;
  const double tau = 2.0, alpha = 0.7;
  auto softmax = [&](double a, double b) {
    const double ea = std::exp(a / tau), eb = std::exp(b / tau);
    return std::pair{ea / (ea + eb), eb / (ea + eb)};
  };
  auto kl = [](std::pair<double, double> p, std::pair<double, double> q) {
    return p.first * std::log(p.first / q.first) + p.second * std::log(p.second / q.second);
  };
  const auto pf = softmax(2.0, -1.0), pr = softmax(0.5, 0.25), pc = softmax(-0.3, 0.8);
  const KdTerms t = kd_loss(f, r, c, DistillConfig{alpha, 1.0, tau});
  EXPECT_NEAR(t.forward, kl(pf, pc), 1e-12);
  EXPECT_NEAR(t.reverse, kl(pr, pc), 1e-12);
  EXPECT_NEAR(t.kd, alpha * kl(pf, pc) + (1 - alpha) * kl(pr, pc), 1e-12);
}

TEST(KdLoss, PositionMismatchThrows) {
  Rng rng(9);
  EXPECT_THROW(kd_loss(random_logits(rng, 3, 5), random_logits(rng, 2, 5),
                       random_logits(rng, 3, 5), DistillConfig{}),
               ContractError);
}

TEST(KdLoss, InvariantToVocabularyPermutation) {
  Rng rng(10);
  const Matrix f = random_logits(rng, 5, 8), r = random_logits(rng, 5, 8), c = random_logits(rng, 5, 8);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(8);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + 8, rng);
  const DistillConfig cfg{0.6, 1.0, 1.5};
  const KdTerms a = kd_loss(f, r, c, cfg);
  const KdTerms b = kd_loss(f * perm, r * perm, c * perm, cfg);
  EXPECT_NEAR(a.kd, b.kd, 1e-12);
  EXPECT_NEAR(a.forward, b.forward, 1e-12);
}

TEST(KdLoss, LogitGradientMatchesDifferences) {
  Rng rng(11);
  const Matrix f = random_logits(rng, 3, 5), r = random_logits(rng, 3, 5);
  Matrix c = random_logits(rng, 3, 5);
  const DistillConfig cfg{0.4, 1.0, 1.7};
  Matrix grad;
  kd_loss(f, r, c, cfg, &grad);
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    Matrix up = c, down = c;
    up.data()[i] += h;
    down.data()[i] -= h;
    const double numeric = (kd_loss(f, r, up, cfg).kd - kd_loss(f, r, down, cfg).kd) / (2 * h);
    EXPECT_NEAR(grad.data()[i], numeric, 1e-8);
  }
}

TEST(TotalLoss, Arithmetic) {
  EXPECT_DOUBLE_EQ(total_loss(1.0, 0.5, 1.5), 1.75);
  EXPECT_DOUBLE_EQ(total_loss(2.25, 123.0, 0.0), 2.25);
}

TEST(DistillConfig, Validation) {
  EXPECT_NO_THROW((DistillConfig{0.0, 0.0, 1.0}.validate()));
  EXPECT_THROW((DistillConfig{1.2, 0.5, 1.0}.validate()), ConfigError);
  EXPECT_THROW((DistillConfig{0.5, -1.0, 1.0}.validate()), ConfigError);
  EXPECT_THROW((DistillConfig{0.5, 0.5, 0.0}.validate()), ConfigError);
}

// Gradients of the distillation and overall objectives through the whole
// student network, against central differences.
class ObjectiveGradient : public ::testing::TestWithParam<model::Architecture> {};

TEST_P(ObjectiveGradient, MatchesFiniteDifferences) {
  const model::ModelConfig config = testing::micro_config(GetParam());
  const model::Transformer net(config);
  const auto student = model::ModelParams::initialize(config, model::ModelRole::kAlirectorStudent, 3);
  const Tokens x{9, 10, 11, 12, 13}, y{9, 14, 11, 15, 13};
  const auto input = model::make_sequence_input(config, model::Task::kCorrect, x, y);
  const Tokens gold = correction::target_tokens(input);
  Rng rng(12);
  const auto n = static_cast<Eigen::Index>(gold.size());
  const Matrix zf = random_logits(rng, n, 20), zr = random_logits(rng, n, 20);
  const DistillConfig cfg{0.7, 1.5, 1.3};

  auto logits_of = [&](const model::ModelParams& p) { return net.forward(p, input); };
  auto kd_of = [&](const model::ModelParams& p) { return kd_loss(zf, zr, logits_of(p), cfg).kd; };
  auto total_of = [&](const model::ModelParams& p) {
    const Matrix z = logits_of(p);
    return total_loss(correction::gec_loss(z, gold), kd_loss(zf, zr, z, cfg).kd, cfg.beta);
  };

  model::Tape tape;
  const Matrix z = net.forward(student, input, tape, nullptr);
  Matrix dkd, dgec;
  kd_loss(zf, zr, z, cfg, &dkd);
  correction::gec_loss(z, gold, &dgec);

  model::Gradients gkd(student);
  net.backward(student, tape, dkd, gkd);
  EXPECT_LT(testing::worst_gradient_error(student, gkd.values(), kd_of), 1e-4);

  model::Gradients gtotal(student);
  net.backward(student, tape, dgec + cfg.beta * dkd, gtotal);
  EXPECT_LT(testing::worst_gradient_error(student, gtotal.values(), total_of), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(BothArchitectures, ObjectiveGradient,
                         ::testing::Values(model::Architecture::kEncoderDecoder,
                                           model::Architecture::kDecoderOnly));

// Small shared fixture: a few triples and a corrector-initialised student.
struct StudentSetup {
  model::ModelConfig config = testing::micro_config();
  model::Transformer net{config};
  model::ModelParams corrector = model::ModelParams::initialize(config, model::ModelRole::kCorrector, 21);
  std::vector<alignment::AlignmentExample> triples;

  StudentSetup() {
    Rng rng(4);
    for (int i = 0; i < 12; ++i) {
      Tokens y;
      for (int k = 0; k < 5; ++k) y.push_back(static_cast<Token>(uniform_int(rng, 9, 19)));
      Tokens x = y;
      x[static_cast<std::size_t>(i % 5)] = 9;
      Tokens pred = x;
      if (i % 3 == 0) pred = y;
      triples.push_back({x, pred, y});
    }
  }

  model::ModelParams teacher(model::ModelRole role) const {
    model::ModelParams p = corrector;
    p.set_role(role);
    return p;
  }

  correction::TrainConfig train_config() const {
    correction::TrainConfig c;
    c.batch_size = 4;
    c.max_epochs = 2;
    c.warmup_steps = 1;
    c.patience = 0;
    c.seed = 5;
    c.probe_size = 4;
    return c;
  }

  StudentTask task(const TeacherLogits* logits, const TeacherBundle* teachers,
                   DistillConfig cfg) const {
    StudentTask t;
    t.triples = &triples;
    t.teacher_logits = logits;
    t.teachers = teachers;
    t.distill = cfg;
    for (const auto& e : triples) {
      t.dev_sources.push_back(e.source);
      t.dev_targets.push_back(e.target);
    }
    t.dev_decode = {1, 8};
    return t;
  }
};

TEST(Student, BetaZeroEqualsVanillaContinuedTraining) {
  StudentSetup s;
  const TeacherBundle teachers(s.teacher(model::ModelRole::kForwardAligner),
                               s.teacher(model::ModelRole::kReverseAligner));
  const TeacherLogits logits =
      compute_teacher_logits(s.net, teachers, s.triples, alignment::AblationMode::kNone);
  const auto with_kd =
      train_alirector(s.net, s.corrector, s.task(&logits, &teachers, {0.9, 0.0, 1.0}), s.train_config());
  const auto control =
      train_alirector(s.net, s.corrector, s.task(nullptr, nullptr, {0.9, 0.0, 1.0}), s.train_config());
  ASSERT_EQ(with_kd.history.size(), control.history.size());
  for (std::size_t i = 0; i < control.history.size(); ++i) {
    EXPECT_EQ(with_kd.history[i].train.gec, control.history[i].train.gec);
    EXPECT_EQ(with_kd.history[i].train.total, control.history[i].train.total);
  }
  EXPECT_EQ(with_kd.best.hash(), control.best.hash());
  EXPECT_GT(with_kd.history[0].train.kd, 0.0);
}

TEST(Student, TeachersSeeDifferentInputsSoKdStartsPositive) {
  StudentSetup s;
  const TeacherBundle teachers(s.teacher(model::ModelRole::kForwardAligner),
                               s.teacher(model::ModelRole::kReverseAligner));
  const TeacherLogits logits =
      compute_teacher_logits(s.net, teachers, s.triples, alignment::AblationMode::kNone);
  ASSERT_EQ(logits.forward.size(), s.triples.size());
  double kd = 0.0;
  for (std::size_t i = 0; i < s.triples.size(); ++i) {
    const auto input = model::make_sequence_input(s.config, model::Task::kCorrect,
                                                  s.triples[i].source, s.triples[i].target);
    const Matrix z = s.net.forward(s.corrector, input);
    ASSERT_EQ(z.rows(), logits.forward[i].rows());
    kd += kd_loss(logits.forward[i], logits.reverse[i], z, DistillConfig{}).kd;
  }
  EXPECT_GT(kd, 0.0);
}

TEST(Student, TeacherWeightsStayFrozen) {
  StudentSetup s;
  const TeacherBundle teachers(s.teacher(model::ModelRole::kForwardAligner),
                               s.teacher(model::ModelRole::kReverseAligner));
  const std::string forward = teachers.forward().hash();
  const TeacherLogits logits =
      compute_teacher_logits(s.net, teachers, s.triples, alignment::AblationMode::kNone);
  const auto result =
      train_alirector(s.net, s.corrector, s.task(&logits, &teachers, {0.9, 1.0, 1.0}), s.train_config());
  EXPECT_EQ(teachers.forward().hash(), forward);
  EXPECT_EQ(result.best.role(), model::ModelRole::kAlirectorStudent);
  EXPECT_NO_THROW(teachers.verify());

  // Drift is detected.
  auto& tampered = const_cast<model::ModelParams&>(teachers.reverse());
  tampered.values()[0] += 1.0;
  EXPECT_THROW(teachers.verify(), IntegrityError);
}

TEST(Student, LoggedTotalDecomposes) {
  StudentSetup s;
  const TeacherBundle teachers(s.teacher(model::ModelRole::kForwardAligner),
                               s.teacher(model::ModelRole::kReverseAligner));
  const TeacherLogits logits =
      compute_teacher_logits(s.net, teachers, s.triples, alignment::AblationMode::kNone);
  const DistillConfig cfg{0.6, 1.5, 1.0};
  const auto result = train_alirector(s.net, s.corrector, s.task(&logits, &teachers, cfg), s.train_config());
  for (const auto& m : result.history) {
    const auto& t = m.train;
    EXPECT_NEAR(t.kd, cfg.alpha * t.kd_forward + (1 - cfg.alpha) * t.kd_reverse, 1e-6);
    EXPECT_NEAR(t.total, t.gec + cfg.beta * t.kd, 1e-6);
  }
}

TEST(Student, ProbeKlFallsFromInitialisation) {
  StudentSetup s;
  // Teachers distinct from the student so there is something to learn.
  const TeacherBundle teachers(
      [&] { auto p = model::ModelParams::initialize(s.config, model::ModelRole::kForwardAligner, 77); return p; }(),
      [&] { auto p = model::ModelParams::initialize(s.config, model::ModelRole::kReverseAligner, 78); return p; }());
  const TeacherLogits logits =
      compute_teacher_logits(s.net, teachers, s.triples, alignment::AblationMode::kNone);
  const DistillConfig cfg{0.9, 2.0, 1.0};
  correction::TrainingTask probe;
  for (const auto& e : s.triples) {
    probe.examples.push_back(model::make_sequence_input(s.config, model::Task::kCorrect, e.source, e.target));
  }
  probe.auxiliary = make_kd_loss(logits, cfg);
  const double before = correction::probe_loss(s.net, s.corrector, probe, 4).kd;
  auto tc = s.train_config();
  tc.max_epochs = 6;
  tc.learning_rate = 3e-3;
  const auto result = train_alirector(s.net, s.corrector, s.task(&logits, &teachers, cfg), tc);
  EXPECT_LT(result.history.at(result.best_epoch - 1).probe_kl, before);
}

TEST(Student, RejectsNonCorrectorStart) {
  StudentSetup s;
  EXPECT_THROW(train_alirector(s.net, s.teacher(model::ModelRole::kForwardAligner),
                               s.task(nullptr, nullptr, {}), s.train_config()),
               ContractError);
}

}  // namespace
}  // namespace alirector::distill
