#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sclood/numerics.hpp"

namespace sclood {

enum class DetectorKind { msp, lof, gda };

std::string_view to_string(DetectorKind kind);
DetectorKind parse_detector_kind(std::string_view name);

struct Verdict {
  bool is_ood = false;
  double score = 0.0;
  int predicted_class = -1;  // valid whenever !is_ood
};

struct GdaModel {
  Matrix class_means;       // classes x rep_dim
  Matrix shared_covariance; // rep_dim x rep_dim, ridge included
  Matrix precision;
  std::optional<double> threshold;
};

/// Class means and tied covariance (within-class scatter / N + ridge * I).
/// Without an explicit ridge, 1e-3 * trace(scatter / N) / rep_dim is used.
GdaModel fit_gda(const Matrix& reps, std::span<const int> labels, std::size_t num_classes,
                 std::optional<double> ridge = std::nullopt);

/// Minimum Mahalanobis distance to a class mean, and that class (lowest
/// index on ties).
std::pair<double, int> gda_score(const GdaModel& model, std::span<const double> rep);
Verdict gda_detect(const GdaModel& model, std::span<const double> rep);

struct LofModel {
  Matrix reference;
  std::size_t k = 20;
  Vec k_distance;  // per reference point
  Vec lrd;         // local reachability density per reference point
  std::optional<double> threshold;
};

inline constexpr double kLofDistanceFloor = 1e-12;

LofModel fit_lof(Matrix reference, std::size_t k);
double lof_score(const LofModel& model, std::span<const double> query);
/// `predicted_class` comes from the classifier; LOF only decides OOD-ness.
Verdict lof_detect(const LofModel& model, std::span<const double> query, int predicted_class);

struct MspModel {
  double threshold = 0.5;
};

Verdict msp_detect(const MspModel& model, std::span<const double> softmax_probs);

/// Binary F1 of the OOD class when flagging by `threshold`.
double ood_f1_at(std::span<const double> scores, const std::vector<bool>& is_ood, double threshold,
                 bool higher_is_ood);

/// Scans midpoints between consecutive distinct sorted scores and returns the
/// one with the best OOD F1 (smallest on ties).
double select_threshold(std::span<const double> scores, const std::vector<bool>& is_ood, bool higher_is_ood);

using DetectorModel = std::variant<MspModel, LofModel, GdaModel>;

DetectorKind kind_of(const DetectorModel& model);

}  // namespace sclood
