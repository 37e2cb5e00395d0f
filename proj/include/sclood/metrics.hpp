#pragma once

#include <span>
#include <vector>

#include "sclood/detectors.hpp"

namespace sclood {

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  bool counted = false;  // false when the class has neither support nor predictions

  friend bool operator==(const ClassScore&, const ClassScore&) = default;
};

struct MetricsReport {
  double ind_accuracy = 0.0;
  double ind_macro_f1 = 0.0;
  double ood_recall = 0.0;
  double ood_f1 = 0.0;
  std::vector<ClassScore> per_class;

  // Confusion summary.
  std::size_t ind_total = 0;
  std::size_t ind_correct = 0;
  std::size_t ind_flagged_ood = 0;
  std::size_t ood_total = 0;
  std::size_t ood_detected = 0;
  std::size_t false_ood = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// `truth[i]` is a class index or -1 for OOD. An IND sample flagged OOD
/// counts as an IND error; the OOD class is the positive class for the OOD
/// recall/F1.
MetricsReport compute_metrics(std::span<const int> truth, std::span<const Verdict> verdicts, std::size_t num_classes);

/// Macro-F1 of plain class predictions (no OOD), used for early stopping.
double macro_f1(std::span<const int> truth, std::span<const int> predicted, std::size_t num_classes);

}  // namespace sclood
