#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sclood/encoder.hpp"
#include "sclood/losses.hpp"
#include "sclood/numerics.hpp"

namespace sclood {

struct AdvConfig {
  double epsilon = 1.5;
  bool enabled = true;
  // When false, adversarial views are positives/negatives only, never anchors.
  bool adv_views_as_anchors = true;

  bool active() const { return enabled && epsilon > 0.0; }
  void validate() const;
};

/// delta = epsilon * g / ||g||. Throws NumericError("zero gradient: no
/// adversarial direction") when g vanishes.
Vec fgv_delta(std::span<const double> grad_pooled, double epsilon);

struct AugmentedBatch {
  std::vector<ForwardTrace> traces;  // originals first, then adversarial views
  std::vector<int> labels;
  std::vector<bool> is_adversarial;
  std::vector<std::size_t> source;   // index of the original each row came from
  std::size_t skipped = 0;           // samples whose CE gradient vanished

  Matrix reps() const;
  std::vector<bool> anchor_mask(bool adv_views_as_anchors) const;
};

/// Builds one adversarial view per sample: the CE gradient w.r.t. the pooled
/// input gives delta, and the MLP is re-run on pooled + delta. Inputs are not
/// modified. `normalize_head` applies cosine logits (LMCL models).
AugmentedBatch augment_batch(const std::vector<ForwardTrace>& traces, std::span<const int> labels,
                             const EncoderParams& params, const AdvConfig& cfg, const LossConfig& loss_cfg,
                             bool normalize_head = false);

}  // namespace sclood
