#pragma once

#include <span>
#include <vector>

#include "sclood/numerics.hpp"

namespace sclood {

struct LossConfig {
  double tau_ce = 1.0;    // temperature of the CE / LMCL softmax
  double tau_scl = 0.1;   // temperature of the contrastive softmax
  double margin_m = 0.35; // LMCL cosine margin on negative classes
  double scl_weight = 1.0;

  void validate() const;
};

struct BatchLossResult {
  // Batch mean for CE/LMCL, mean over contributing anchors for SCL. The
  // gradients below are of this value.
  double loss = 0.0;
  // Terms averaged into `loss`: batch size for CE/LMCL, anchors with at
  // least one positive for SCL.
  std::size_t anchors = 0;
  Matrix grad_reps;  // batch x rep_dim
  Matrix grad_head;  // rep_dim x classes; empty for SCL
};

/// Mean softmax cross-entropy over logits head^T s / tau. Rows of `reps`
/// are representations.
BatchLossResult ce_loss(const Matrix& reps, std::span<const int> labels, const Matrix& head, const LossConfig& cfg);

/// Large-margin cosine loss. `reps` rows and `head` columns must be unit
/// vectors (to 1e-6); the margin is added to the negative-class cosines.
BatchLossResult lmcl_loss(const Matrix& reps, std::span<const int> labels, const Matrix& head, const LossConfig& cfg);

/// Supervised contrastive loss over unit-norm rows. Anchors with no other
/// same-label sample contribute nothing. When `anchor_mask` is non-empty,
/// only rows flagged true act as anchors; all rows still count as
/// positives and in every denominator.
BatchLossResult scl_loss(const Matrix& reps, std::span<const int> labels, const LossConfig& cfg,
                         const std::vector<bool>& anchor_mask = {});

/// ce_loss + scl_weight * scl_loss with summed gradients.
BatchLossResult multitask_loss(const Matrix& reps, std::span<const int> labels, const Matrix& head,
                               const LossConfig& cfg);

}  // namespace sclood
