#include "sclood/losses.hpp"

#include <cmath>
#include <string>

#include "sclood/errors.hpp"

namespace sclood {

void LossConfig::validate() const {
  if (!(tau_ce > 0.0) || !(tau_scl > 0.0)) throw ConfigError("loss temperatures must be positive");
  if (!(margin_m >= 0.0)) throw ConfigError("margin_m must be >= 0");
  if (!(scl_weight >= 0.0)) throw ConfigError("scl_weight must be >= 0");
}

namespace {

void check_labels(const Matrix& reps, std::span<const int> labels, std::size_t num_classes) {
  if (reps.rows == 0) throw NumericError("loss: empty batch");
  if (labels.size() != reps.rows) throw NumericError("loss: label count does not match batch size");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
      throw NumericError("loss: label " + std::to_string(labels[i]) + " at position " + std::to_string(i) +
                         " outside [0, " + std::to_string(num_classes) + ")");
}

// Shared softmax-over-classes core. `scores(i, j)` are the pre-temperature
// scores; `margin` is added to every j != y_i. Gradient w.r.t. the scores is
// returned in `grad_scores`.
double class_softmax_loss(const Matrix& scores, std::span<const int> labels, double tau, double margin,
                          Matrix& grad_scores) {
  const std::size_t n = scores.rows, c = scores.cols;
  grad_scores = Matrix(n, c);
  Vec z(c);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    for (std::size_t j = 0; j < c; ++j) z[j] = (scores(i, j) + (j == y ? 0.0 : margin)) / tau;
    const double lse = log_sum_exp(z);
    total += lse - z[y];
    for (std::size_t j = 0; j < c; ++j) {
      const double p = std::exp(z[j] - lse);
      grad_scores(i, j) = (p - (j == y ? 1.0 : 0.0)) / (tau * static_cast<double>(n));
    }
  }
  return total / static_cast<double>(n);
}

// scores = reps * head; fills gradients for both factors from grad_scores.
BatchLossResult linear_head_loss(const Matrix& reps, std::span<const int> labels, const Matrix& head, double tau,
                                 double margin) {
  if (reps.cols != head.rows) throw NumericError("loss: representation width does not match head rows");
  const Matrix scores = matmul(reps, head);
  Matrix gs;
  BatchLossResult out;
  out.loss = class_softmax_loss(scores, labels, tau, margin, gs);
  out.anchors = reps.rows;
  out.grad_reps = matmul(gs, head.transposed());
  out.grad_head = matmul(reps.transposed(), gs);
  return out;
}

}  // namespace

BatchLossResult ce_loss(const Matrix& reps, std::span<const int> labels, const Matrix& head, const LossConfig& cfg) {
  if (!(cfg.tau_ce > 0.0)) throw NumericError("ce_loss: tau must be positive");
  check_labels(reps, labels, head.cols);
  return linear_head_loss(reps, labels, head, cfg.tau_ce, 0.0);
}

BatchLossResult lmcl_loss(const Matrix& reps, std::span<const int> labels, const Matrix& head, const LossConfig& cfg) {
  if (!(cfg.tau_ce > 0.0)) throw NumericError("lmcl_loss: tau must be positive");
  check_labels(reps, labels, head.cols);
  constexpr double kTol = 1e-6;
  for (std::size_t i = 0; i < reps.rows; ++i)
    if (std::abs(norm(reps.row(i)) - 1.0) > kTol)
      throw NumericError("lmcl_loss: representation " + std::to_string(i) + " is not unit-norm");
  for (std::size_t c = 0; c < head.cols; ++c) {
    double n2 = 0.0;
    for (std::size_t r = 0; r < head.rows; ++r) n2 += head(r, c) * head(r, c);
    if (std::abs(std::sqrt(n2) - 1.0) > kTol)
      throw NumericError("lmcl_loss: head column " + std::to_string(c) + " is not unit-norm");
  }
  return linear_head_loss(reps, labels, head, cfg.tau_ce, cfg.margin_m);
}

BatchLossResult scl_loss(const Matrix& reps, std::span<const int> labels, const LossConfig& cfg,
                         const std::vector<bool>& anchor_mask) {
  const std::size_t n = reps.rows;
  if (n < 2) throw NumericError("scl_loss: batch must hold at least 2 samples");
  if (labels.size() != n) throw NumericError("scl_loss: label count does not match batch size");
  if (!anchor_mask.empty() && anchor_mask.size() != n) throw NumericError("scl_loss: anchor mask size mismatch");
  if (!(cfg.tau_scl > 0.0)) throw NumericError("scl_loss: tau must be positive");
  const double tau = cfg.tau_scl;

  BatchLossResult out;
  out.grad_reps = Matrix(n, reps.cols);

  Matrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i; k < n; ++k) sim(i, k) = sim(k, i) = dot(reps.row(i), reps.row(k)) / tau;

  double total = 0.0;
  std::size_t anchors = 0;
  Vec others;
  Vec coeff(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!anchor_mask.empty() && !anchor_mask[i]) continue;
    std::size_t positives = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && labels[j] == labels[i]) ++positives;
    if (positives == 0) continue;
    ++anchors;

    others.clear();
    for (std::size_t k = 0; k < n; ++k)
      if (k != i) others.push_back(sim(i, k));
    const double lse = log_sum_exp(others);
    const double inv_p = 1.0 / static_cast<double>(positives);
    double pos_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) {
        coeff[k] = 0.0;
        continue;
      }
      const bool pos = labels[k] == labels[i];
      if (pos) pos_sum += sim(i, k);
      coeff[k] = std::exp(sim(i, k) - lse) - (pos ? inv_p : 0.0);
    }
    total += lse - pos_sum * inv_p;

    // d sim(i,k) / d s_i = s_k / tau and symmetrically for s_k.
    auto gi = out.grad_reps.row(i);
    for (std::size_t k = 0; k < n; ++k) {
      if (coeff[k] == 0.0) continue;
      const double a = coeff[k] / tau;
      axpy(a, reps.row(k), gi);
      axpy(a, reps.row(i), out.grad_reps.row(k));
    }
  }
  out.anchors = anchors;
  if (anchors > 0) {
    out.loss = total / static_cast<double>(anchors);
    for (double& g : out.grad_reps.data) g /= static_cast<double>(anchors);
  }
  return out;
}

BatchLossResult multitask_loss(const Matrix& reps, std::span<const int> labels, const Matrix& head,
                               const LossConfig& cfg) {
  BatchLossResult out = ce_loss(reps, labels, head, cfg);
  if (cfg.scl_weight == 0.0) return out;
  const BatchLossResult scl = scl_loss(reps, labels, cfg);
  out.loss += cfg.scl_weight * scl.loss;
  axpy(cfg.scl_weight, scl.grad_reps.data, out.grad_reps.data);
  return out;
}

}  // namespace sclood
