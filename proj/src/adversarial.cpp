#include "sclood/adversarial.hpp"

#include <cmath>

#include "sclood/errors.hpp"

namespace sclood {

void AdvConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be a finite value >= 0");
}

Vec fgv_delta(std::span<const double> grad_pooled, double epsilon) {
  if (!(epsilon > 0.0)) throw NumericError("fgv_delta: epsilon must be positive");
  const double n = norm(grad_pooled);
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("zero gradient: no adversarial direction");
  Vec delta(grad_pooled.begin(), grad_pooled.end());
  for (double& d : delta) d *= epsilon / n;
  return delta;
}

Matrix AugmentedBatch::reps() const {
  if (traces.empty()) return {};
  Matrix m(traces.size(), traces.front().rep.vector.size());
  for (std::size_t i = 0; i < traces.size(); ++i)
    std::copy(traces[i].rep.vector.begin(), traces[i].rep.vector.end(), m.row(i).begin());
  return m;
}

std::vector<bool> AugmentedBatch::anchor_mask(bool adv_views_as_anchors) const {
  if (adv_views_as_anchors) return {};
  std::vector<bool> mask(is_adversarial.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = !is_adversarial[i];
  return mask;
}

AugmentedBatch augment_batch(const std::vector<ForwardTrace>& traces, std::span<const int> labels,
                             const EncoderParams& params, const AdvConfig& cfg, const LossConfig& loss_cfg,
                             bool normalize_head) {
  AugmentedBatch out;
  out.traces = traces;
  out.labels.assign(labels.begin(), labels.end());
  out.is_adversarial.assign(traces.size(), false);
  out.source.resize(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) out.source[i] = i;
  if (!cfg.active() || traces.empty()) return out;

  const Matrix reps = out.reps();
  const Matrix head = normalize_head ? normalize_columns(params.head_w) : params.head_w;
  const BatchLossResult ce = ce_loss(reps, labels, head, loss_cfg);

  for (std::size_t i = 0; i < traces.size(); ++i) {
    const Vec g = encoder_backward(traces[i], ce.grad_reps.row(i), params, nullptr);
    Vec delta;
    try {
      delta = fgv_delta(g, cfg.epsilon);
    } catch (const NumericError&) {
      ++out.skipped;
      continue;
    }
    Vec x_adv = traces[i].pooled;
    axpy(1.0, delta, x_adv);
    out.traces.push_back(encode_from_pooled(params, traces[i].token_ids, std::move(x_adv), traces[i].rep.normalized));
    out.labels.push_back(labels[i]);
    out.is_adversarial.push_back(true);
    out.source.push_back(i);
  }
  return out;
}

}  // namespace sclood
