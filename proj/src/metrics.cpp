#include "sclood/metrics.hpp"

#include "sclood/errors.hpp"

namespace sclood {

namespace {

double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

// Per-class counts from predicted labels where -1 means "flagged OOD".
void fill_class_scores(std::span<const int> truth, std::span<const int> predicted, std::size_t num_classes,
                       std::vector<ClassScore>& out, double& macro) {
  std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t >= 0 && p == t) {
      ++tp[static_cast<std::size_t>(t)];
      continue;
    }
    if (t >= 0) ++fn[static_cast<std::size_t>(t)];
    if (p >= 0) ++fp[static_cast<std::size_t>(p)];
  }
  out.assign(num_classes, {});
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto& s = out[c];
    s.support = tp[c] + fn[c];
    s.counted = (tp[c] + fp[c] + fn[c]) > 0;
    s.precision = safe_div(static_cast<double>(tp[c]), static_cast<double>(tp[c] + fp[c]));
    s.recall = safe_div(static_cast<double>(tp[c]), static_cast<double>(tp[c] + fn[c]));
    s.f1 = safe_div(2.0 * static_cast<double>(tp[c]), static_cast<double>(2 * tp[c] + fp[c] + fn[c]));
    if (s.counted) {
      sum += s.f1;
      ++counted;
    }
  }
  macro = safe_div(sum, static_cast<double>(counted));
}

}  // namespace

MetricsReport compute_metrics(std::span<const int> truth, std::span<const Verdict> verdicts, std::size_t num_classes) {
  if (truth.size() != verdicts.size()) throw NumericError("compute_metrics: truth and verdict counts differ");
  MetricsReport r;
  std::vector<int> predicted(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Verdict& v = verdicts[i];
    if (!v.is_ood && (v.predicted_class < 0 || static_cast<std::size_t>(v.predicted_class) >= num_classes))
      throw NumericError("compute_metrics: IND verdict without a valid class at row " + std::to_string(i));
    predicted[i] = v.is_ood ? -1 : v.predicted_class;
    if (truth[i] >= 0) {
      ++r.ind_total;
      if (predicted[i] == truth[i]) ++r.ind_correct;
      if (v.is_ood) ++r.ind_flagged_ood;
    } else {
      ++r.ood_total;
      if (v.is_ood) ++r.ood_detected;
    }
    if (v.is_ood && truth[i] >= 0) ++r.false_ood;
  }
  r.ind_accuracy = safe_div(static_cast<double>(r.ind_correct), static_cast<double>(r.ind_total));
  fill_class_scores(truth, predicted, num_classes, r.per_class, r.ind_macro_f1);
  r.ood_recall = safe_div(static_cast<double>(r.ood_detected), static_cast<double>(r.ood_total));
  r.ood_f1 = safe_div(2.0 * static_cast<double>(r.ood_detected),
                      static_cast<double>(2 * r.ood_detected + r.false_ood + (r.ood_total - r.ood_detected)));
  return r;
}

double macro_f1(std::span<const int> truth, std::span<const int> predicted, std::size_t num_classes) {
  std::vector<ClassScore> scores;
  double macro = 0.0;
  fill_class_scores(truth, predicted, num_classes, scores, macro);
  return macro;
}

}  // namespace sclood
