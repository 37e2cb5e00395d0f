#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "grad_helpers.hpp"
#include "sclood/errors.hpp"

using namespace sclood;

TEST(FgvDelta, ScaledUnitGradient) {
  const Vec d = fgv_delta(Vec{3.0, 4.0}, 1.5);
  EXPECT_NEAR(d[0], 0.9, 1e-15);
  EXPECT_NEAR(d[1], 1.2, 1e-15);
  EXPECT_NEAR(norm(d), 1.5, 1e-15);
}

TEST(FgvDelta, NormEqualsEpsilonAndDirectionPreserved) {
  std::mt19937_64 g(1);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec grad = oracle::random_matrix(g, 1, 7, std::pow(10.0, trial % 9 - 4)).data;
    const double eps = 0.01 + 0.05 * (trial % 40);
    const Vec d = fgv_delta(grad, eps);
    EXPECT_NEAR(norm(d), eps, 1e-9);
    EXPECT_NEAR(dot(d, grad), eps * norm(grad), 1e-9 * eps * norm(grad));
  }
}

TEST(FgvDelta, ZeroGradientIsAnError) {
  try {
    fgv_delta(Vec{0.0, 0.0}, 1.0);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_STREQ(e.what(), "zero gradient: no adversarial direction");
  }
}

TEST(FgvDelta, IncreasesCeOfLinearClassifier) {
  // Linear classifier on the input: logits = W^T x. Small steps along the
  // normalized CE gradient cannot decrease the loss.
  std::mt19937_64 g(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix w = oracle::random_matrix(g, 4, 3);
    const Vec x = oracle::random_matrix(g, 1, 4).data;
    const std::vector<int> y{trial % 3};
    const auto ce_at = [&](const Vec& v) { return oracle::softmax_xent(oracle::with_data(Matrix(1, 4), v), y, w, 1.0); };
    const auto r = ce_loss(oracle::with_data(Matrix(1, 4), x), y, w, {});
    for (double eps : {1e-4, 1e-3, 0.01, 0.05, 0.1}) {
      const Vec d = fgv_delta(r.grad_reps.data, eps);
      Vec xa = x;
      for (std::size_t i = 0; i < 4; ++i) xa[i] += d[i];
      EXPECT_GE(ce_at(xa), ce_at(x));
    }
  }
}

namespace {

std::vector<ForwardTrace> encode_all(const EncoderParams& p, const std::vector<std::vector<std::size_t>>& utts,
                                     bool normalize) {
  std::vector<ForwardTrace> out;
  for (const auto& u : utts) out.push_back(encode(p, u, normalize));
  return out;
}

}  // namespace

TEST(AugmentBatch, OneViewPerSampleAtDistanceEpsilon) {
  std::mt19937_64 g(3);
  const auto p = gradfix::random_params(g, 8, 4, 5, 3, 2);
  const auto utts = gradfix::random_utterances(g, 6, 8);
  const std::vector<int> y{0, 1, 0, 1, 1, 0};
  const auto traces = encode_all(p, utts, true);
  AdvConfig cfg;
  cfg.epsilon = 0.7;
  const auto b = augment_batch(traces, y, p, cfg, {});
  ASSERT_EQ(b.traces.size(), 12u);
  EXPECT_EQ(b.skipped, 0u);
  for (std::size_t i = 6; i < 12; ++i) {
    EXPECT_TRUE(b.is_adversarial[i]);
    EXPECT_EQ(b.labels[i], y[b.source[i]]);
    EXPECT_NEAR(std::sqrt(squared_distance(b.traces[i].pooled, traces[b.source[i]].pooled)), 0.7, 1e-9);
    EXPECT_NEAR(norm(b.traces[i].rep.vector), 1.0, 1e-12);
  }
}

TEST(AugmentBatch, DeltaFollowsCeInputGradient) {
  std::mt19937_64 g(4);
  const auto p = gradfix::random_params(g, 8, 4, 5, 3, 2);
  const auto utts = gradfix::random_utterances(g, 3, 8);
  const std::vector<int> y{0, 1, 1};
  const auto traces = encode_all(p, utts, true);
  AdvConfig cfg;
  cfg.epsilon = 0.3;
  const auto b = augment_batch(traces, y, p, cfg, {});
  // Oracle: finite-difference gradient of batch CE w.r.t. sample 1's pooled vector.
  const Vec fd = oracle::fd_gradient(
      [&](const Vec& x) {
        auto t = traces;
        t[1] = encode_from_pooled(p, utts[1], x, true);
        return oracle::softmax_xent(gradfix::stack(t), y, p.head_w, 1.0);
      },
      traces[1].pooled);
  Vec delta(4);
  for (std::size_t d = 0; d < 4; ++d) delta[d] = b.traces[4].pooled[d] - traces[1].pooled[d];
  EXPECT_LT(oracle::rel_err(delta, fgv_delta(fd, 0.3)), 1e-6);
}

TEST(AugmentBatch, DisabledOrZeroEpsilonIsNoOp) {
  std::mt19937_64 g(5);
  const auto p = gradfix::random_params(g, 8, 4, 5, 3, 2);
  const auto traces = encode_all(p, gradfix::random_utterances(g, 4, 8), true);
  const std::vector<int> y{0, 1, 0, 1};
  AdvConfig off;
  off.enabled = false;
  AdvConfig zero;
  zero.epsilon = 0.0;
  for (const auto& cfg : {off, zero}) {
    const auto b = augment_batch(traces, y, p, cfg, {});
    EXPECT_EQ(b.traces.size(), 4u);
    EXPECT_EQ(gradfix::stack(b.traces), gradfix::stack(traces));
  }
}

TEST(AugmentBatch, ZeroGradientSampleIsSkipped) {
  // Identical head columns make every logit equal, so the CE gradient
  // w.r.t. the representation vanishes for every sample.
  std::mt19937_64 g(6);
  auto p = gradfix::random_params(g, 8, 4, 5, 3, 2);
  for (std::size_t r = 0; r < 3; ++r) p.head_w(r, 1) = p.head_w(r, 0);
  const auto traces = encode_all(p, gradfix::random_utterances(g, 3, 8), true);
  const auto b = augment_batch(traces, std::vector<int>{0, 1, 0}, p, AdvConfig{}, {});
  EXPECT_EQ(b.skipped, 3u);
  EXPECT_EQ(b.traces.size(), 3u);
}

TEST(AugmentBatch, AnchorMaskExcludesViewsOnRequest) {
  std::mt19937_64 g(7);
  const auto p = gradfix::random_params(g, 8, 4, 5, 3, 2);
  const auto traces = encode_all(p, gradfix::random_utterances(g, 2, 8), true);
  const auto b = augment_batch(traces, std::vector<int>{0, 1}, p, AdvConfig{}, {});
  EXPECT_TRUE(b.anchor_mask(true).empty());
  EXPECT_EQ(b.anchor_mask(false), (std::vector<bool>{true, true, false, false}));
}

TEST(AdvConfig, Validation) {
  AdvConfig c;
  c.epsilon = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.epsilon = 0.0;
  EXPECT_FALSE(c.active());
}
