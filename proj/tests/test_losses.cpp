#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sclood/errors.hpp"
#include "sclood/losses.hpp"

using namespace sclood;

namespace {

std::vector<int> random_labels(std::mt19937_64& g, std::size_t n, int classes) {
  std::uniform_int_distribution<int> d(0, classes - 1);
  std::vector<int> y(n);
  for (int& v : y) v = d(g);
  return y;
}

}  // namespace

// ---------------------------------------------------------------- CE

TEST(CeLoss, UniformLogitsGiveLogTwo) {
  const Matrix reps = Matrix::from_rows({{0.0, 1.0}});
  const Matrix head = Matrix::from_rows({{1.0, -1.0}, {0.0, 0.0}});  // columns (1,0) and (-1,0)
  EXPECT_NEAR(ce_loss(reps, std::vector<int>{0}, head, {}).loss, std::log(2.0), 1e-15);
}

TEST(CeLoss, MatchesOracleAndFiniteDifferences) {
  std::mt19937_64 g(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix reps = oracle::random_matrix(g, 4, 5);
    const Matrix head = oracle::random_matrix(g, 5, 3);
    const auto y = random_labels(g, 4, 3);
    LossConfig cfg;
    cfg.tau_ce = 0.5 + 0.1 * trial;
    const auto r = ce_loss(reps, y, head, cfg);
    EXPECT_NEAR(r.loss, oracle::softmax_xent(reps, y, head, cfg.tau_ce), 1e-12);
    const auto fr = oracle::fd_gradient(
        [&](const Vec& x) { return oracle::softmax_xent(oracle::with_data(reps, x), y, head, cfg.tau_ce); }, reps.data);
    const auto fh = oracle::fd_gradient(
        [&](const Vec& x) { return oracle::softmax_xent(reps, y, oracle::with_data(head, x), cfg.tau_ce); }, head.data);
    EXPECT_LT(oracle::rel_err(r.grad_reps.data, fr), 1e-6);
    EXPECT_LT(oracle::rel_err(r.grad_head.data, fh), 1e-6);
  }
}

TEST(CeLoss, RejectsBadLabels) {
  const Matrix reps(2, 2, 1.0), head(2, 3, 1.0);
  EXPECT_THROW(ce_loss(reps, std::vector<int>{0, 3}, head, {}), NumericError);
  EXPECT_THROW(ce_loss(reps, std::vector<int>{0}, head, {}), NumericError);
}

// ---------------------------------------------------------------- LMCL

TEST(LmclLoss, MarginZeroEqualsCeOnUnitInputs) {
  std::mt19937_64 g(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 6, 4));
    const Matrix head = oracle::unit_cols(oracle::random_matrix(g, 4, 5));
    const auto y = random_labels(g, 6, 5);
    LossConfig cfg;
    cfg.margin_m = 0.0;
    EXPECT_LT(std::abs(lmcl_loss(reps, y, head, cfg).loss - ce_loss(reps, y, head, cfg).loss), 1e-9);
  }
}

TEST(LmclLoss, MarginRaisesLoss) {
  std::mt19937_64 g(3);
  const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 6, 4));
  const Matrix head = oracle::unit_cols(oracle::random_matrix(g, 4, 5));
  const auto y = random_labels(g, 6, 5);
  LossConfig a, b;
  a.margin_m = 0.0;
  b.margin_m = 0.35;
  EXPECT_GT(lmcl_loss(reps, y, head, b).loss, lmcl_loss(reps, y, head, a).loss);
}

TEST(LmclLoss, MatchesOracleAndFiniteDifferences) {
  std::mt19937_64 g(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 5, 4));
    const Matrix head = oracle::unit_cols(oracle::random_matrix(g, 4, 3));
    const auto y = random_labels(g, 5, 3);
    LossConfig cfg;
    const auto r = lmcl_loss(reps, y, head, cfg);
    const auto f = [&](const Matrix& s, const Matrix& w) { return oracle::softmax_xent(s, y, w, 1.0, 0.35); };
    EXPECT_NEAR(r.loss, f(reps, head), 1e-12);
    EXPECT_LT(oracle::rel_err(r.grad_reps.data,
                              oracle::fd_gradient([&](const Vec& x) { return f(oracle::with_data(reps, x), head); },
                                                  reps.data)),
              1e-6);
    EXPECT_LT(oracle::rel_err(r.grad_head.data,
                              oracle::fd_gradient([&](const Vec& x) { return f(reps, oracle::with_data(head, x)); },
                                                  head.data)),
              1e-6);
  }
}

TEST(LmclLoss, RequiresUnitVectors) {
  const Matrix reps = Matrix::from_rows({{2.0, 0.0}});
  const Matrix head = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  EXPECT_THROW(lmcl_loss(reps, std::vector<int>{0}, head, {}), NumericError);
}

// ---------------------------------------------------------------- SCL

TEST(SclLoss, MatchesBruteForceOnFourUnitReps) {
  std::mt19937_64 g(5);
  const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 4, 3));
  const std::vector<int> y{0, 0, 1, 1};
  const auto r = scl_loss(reps, y, {});
  std::size_t anchors = 0;
  const double sum = oracle::scl_sum(reps, y, 0.1, {}, &anchors);
  EXPECT_EQ(anchors, 4u);
  EXPECT_EQ(r.anchors, 4u);
  EXPECT_NEAR(r.loss, sum / 4.0, 1e-10);
  const auto fd = oracle::fd_gradient(
      [&](const Vec& x) { return oracle::scl_sum(oracle::with_data(reps, x), y, 0.1) / 4.0; }, reps.data);
  EXPECT_LT(oracle::rel_err(r.grad_reps.data, fd), 1e-6);
}

TEST(SclLoss, FiniteDifferencesOnRandomBatches) {
  std::mt19937_64 g(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 8, 4));
    const auto y = random_labels(g, 8, 3);
    LossConfig cfg;
    cfg.tau_scl = 0.1 + 0.05 * trial;
    const auto r = scl_loss(reps, y, cfg);
    std::size_t anchors = 0;
    const double sum = oracle::scl_sum(reps, y, cfg.tau_scl, {}, &anchors);
    ASSERT_EQ(r.anchors, anchors);
    if (anchors == 0) continue;
    const double a = static_cast<double>(anchors);
    EXPECT_NEAR(r.loss, sum / a, 1e-12 * std::max(1.0, std::abs(r.loss)));
    const auto fd = oracle::fd_gradient(
        [&](const Vec& x) { return oracle::scl_sum(oracle::with_data(reps, x), y, cfg.tau_scl) / a; }, reps.data);
    EXPECT_LT(oracle::rel_err(r.grad_reps.data, fd), 1e-5);
  }
}

TEST(SclLoss, SingletonLabelsContributeNothing) {
  std::mt19937_64 g(7);
  const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 4, 3));
  const auto r = scl_loss(reps, std::vector<int>{0, 1, 2, 3}, {});
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.anchors, 0u);
  for (double v : r.grad_reps.data) EXPECT_EQ(v, 0.0);
}

TEST(SclLoss, SkipsAnchorsWithoutPositives) {
  std::mt19937_64 g(8);
  const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 5, 3));
  const std::vector<int> y{0, 0, 1, 2, 0};
  std::size_t anchors = 0;
  const double sum = oracle::scl_sum(reps, y, 0.1, {}, &anchors);
  EXPECT_EQ(anchors, 3u);
  EXPECT_NEAR(scl_loss(reps, y, {}).loss, sum / 3.0, 1e-10);
}

TEST(SclLoss, AllIdenticalBatchEqualsLogOfOthers) {
  // Positives also sit in the denominator, so n identical same-label reps
  // give log(n - 1) per anchor, with zero gradient.
  const Matrix reps = Matrix::from_rows({{1, 0}, {1, 0}, {1, 0}});
  const auto r = scl_loss(reps, std::vector<int>{4, 4, 4}, {});
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-12);
  for (double v : r.grad_reps.data) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(SclLoss, PairOfIdenticalPositivesIsZero) {
  // One positive and nothing else in the denominator: -log(e^x/e^x) = 0.
  const Matrix reps = Matrix::from_rows({{0.6, 0.8}, {0.6, 0.8}});
  EXPECT_NEAR(scl_loss(reps, std::vector<int>{1, 1}, {}).loss, 0.0, 1e-15);
}

TEST(SclLoss, AnchorMaskRestrictsAnchorsOnly) {
  std::mt19937_64 g(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 8, 3));
    const auto y = random_labels(g, 8, 2);
    std::vector<bool> mask(8);
    for (std::size_t i = 0; i < 8; ++i) mask[i] = i < 4;
    const auto r = scl_loss(reps, y, {}, mask);
    std::size_t anchors = 0;
    const double sum = oracle::scl_sum(reps, y, 0.1, mask, &anchors);
    ASSERT_EQ(r.anchors, anchors);
    if (anchors == 0) continue;
    const double a = static_cast<double>(anchors);
    EXPECT_NEAR(r.loss, sum / a, 1e-12);
    const auto fd = oracle::fd_gradient(
        [&](const Vec& x) { return oracle::scl_sum(oracle::with_data(reps, x), y, 0.1, mask) / a; }, reps.data);
    EXPECT_LT(oracle::rel_err(r.grad_reps.data, fd), 1e-5);
  }
}

TEST(SclLoss, PermutationSymmetric) {
  std::mt19937_64 g(10);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 7, 4));
    const auto y = random_labels(g, 7, 3);
    std::vector<std::size_t> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g);
    Matrix pr(7, 4);
    std::vector<int> py(7);
    for (std::size_t i = 0; i < 7; ++i) {
      std::copy(reps.row(perm[i]).begin(), reps.row(perm[i]).end(), pr.row(i).begin());
      py[i] = y[perm[i]];
    }
    const auto a = scl_loss(reps, y, {}), b = scl_loss(pr, py, {});
    EXPECT_NEAR(a.loss, b.loss, 1e-12);
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t d = 0; d < 4; ++d) EXPECT_NEAR(b.grad_reps(i, d), a.grad_reps(perm[i], d), 1e-12);
  }
}

TEST(SclLoss, InvariantUnderJointRotation) {
  std::mt19937_64 g(12);
  const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 6, 2));
  const auto y = random_labels(g, 6, 2);
  const double th = 0.7;
  const Matrix rot = Matrix::from_rows({{std::cos(th), std::sin(th)}, {-std::sin(th), std::cos(th)}});
  EXPECT_NEAR(scl_loss(reps, y, {}).loss, scl_loss(matmul(reps, rot), y, {}).loss, 1e-12);
}

TEST(SclLoss, LowerWhenClassesSeparate) {
  const std::vector<int> y{0, 0, 1, 1};
  const Matrix tight = Matrix::from_rows({{1, 0}, {1, 0}, {-1, 0}, {-1, 0}});
  const Matrix mixed = Matrix::from_rows({{1, 0}, {-1, 0}, {1, 0}, {-1, 0}});
  EXPECT_LT(scl_loss(tight, y, {}).loss, scl_loss(mixed, y, {}).loss);
}

// ---------------------------------------------------------------- multitask

TEST(MultitaskLoss, IsCePlusWeightedScl) {
  std::mt19937_64 g(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 6, 3));
    const Matrix head = oracle::random_matrix(g, 3, 2);
    const auto y = random_labels(g, 6, 2);
    LossConfig cfg;
    cfg.scl_weight = 1.0;
    const auto m = multitask_loss(reps, y, head, cfg);
    EXPECT_NEAR(m.loss, ce_loss(reps, y, head, cfg).loss + scl_loss(reps, y, cfg).loss, 1e-12);

    cfg.scl_weight = 0.0;
    const auto z = multitask_loss(reps, y, head, cfg);
    const auto ce = ce_loss(reps, y, head, cfg);
    EXPECT_EQ(z.loss, ce.loss);
    EXPECT_EQ(z.grad_reps, ce.grad_reps);
    EXPECT_EQ(z.grad_head, ce.grad_head);
  }
}

TEST(LossConfig, Validation) {
  LossConfig c;
  c.tau_scl = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.margin_m = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(MultitaskLoss, GradientIsOfTheReportedLoss) {
  std::mt19937_64 g(14);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 6, 3));
    const Matrix head = oracle::random_matrix(g, 3, 2);
    const auto y = random_labels(g, 6, 2);
    LossConfig cfg;
    cfg.scl_weight = 0.5 + 0.1 * trial;
    const auto m = multitask_loss(reps, y, head, cfg);
    const auto fd = oracle::fd_gradient(
        [&](const Vec& x) { return multitask_loss(oracle::with_data(reps, x), y, head, cfg).loss; }, reps.data);
    EXPECT_LT(oracle::rel_err(m.grad_reps.data, fd), 1e-6);
  }
}
