#include "sclood/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sclood/errors.hpp"
#include "sclood/linalg.hpp"

namespace sclood {

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::msp: return "msp";
    case DetectorKind::lof: return "lof";
    case DetectorKind::gda: return "gda";
  }
  return "?";
}

DetectorKind parse_detector_kind(std::string_view name) {
  if (name == "msp") return DetectorKind::msp;
  if (name == "lof") return DetectorKind::lof;
  if (name == "gda") return DetectorKind::gda;
  throw ConfigError("unknown detector \"" + std::string(name) + "\" (expected msp, lof or gda)");
}

DetectorKind kind_of(const DetectorModel& model) {
  return static_cast<DetectorKind>(model.index());
}

// ---------------------------------------------------------------- GDA

GdaModel fit_gda(const Matrix& reps, std::span<const int> labels, std::size_t num_classes, std::optional<double> ridge) {
  if (labels.size() != reps.rows) throw NumericError("fit_gda: label count does not match rows");
  if (ridge && !(*ridge >= 0.0)) throw NumericError("fit_gda: ridge must be >= 0");
  const std::size_t d = reps.cols;
  GdaModel m;
  m.class_means = Matrix(num_classes, d);
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < reps.rows; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
      throw NumericError("fit_gda: label out of range at row " + std::to_string(i));
    const auto c = static_cast<std::size_t>(labels[i]);
    ++counts[c];
    axpy(1.0, reps.row(i), m.class_means.row(c));
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] < 2)
      throw DataError("fit_gda: class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                      " samples (need >= 2)");
    for (double& x : m.class_means.row(c)) x /= static_cast<double>(counts[c]);
  }

  Matrix cov(d, d);
  Vec diff(d);
  for (std::size_t i = 0; i < reps.rows; ++i) {
    const auto mu = m.class_means.row(static_cast<std::size_t>(labels[i]));
    for (std::size_t a = 0; a < d; ++a) diff[a] = reps(i, a) - mu[a];
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a; b < d; ++b) cov(a, b) += diff[a] * diff[b];
  }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) /= static_cast<double>(reps.rows);
      cov(b, a) = cov(a, b);
    }
  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) trace += cov(a, a);
  const double lambda = ridge ? *ridge : 1e-3 * trace / static_cast<double>(d);
  for (std::size_t a = 0; a < d; ++a) cov(a, a) += lambda;

  try {
    m.precision = spd_inverse(cov);
  } catch (const NumericError&) {
    throw NumericError("fit_gda: covariance is singular; use a larger ridge");
  }
  const Matrix check = matmul(m.precision, cov);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      if (std::abs(check(a, b) - (a == b ? 1.0 : 0.0)) >= 1e-6)
        throw NumericError("fit_gda: covariance is ill-conditioned; use a larger ridge");
  m.shared_covariance = std::move(cov);
  return m;
}

std::pair<double, int> gda_score(const GdaModel& model, std::span<const double> rep) {
  const std::size_t d = rep.size();
  Vec diff(d);
  double best = std::numeric_limits<double>::infinity();
  int best_class = -1;
  for (std::size_t c = 0; c < model.class_means.rows; ++c) {
    const auto mu = model.class_means.row(c);
    for (std::size_t a = 0; a < d; ++a) diff[a] = rep[a] - mu[a];
    const double dist = std::sqrt(std::max(0.0, quadratic_form(model.precision, diff, diff)));
    if (dist < best) {
      best = dist;
      best_class = static_cast<int>(c);
    }
  }
  return {best, best_class};
}

Verdict gda_detect(const GdaModel& model, std::span<const double> rep) {
  if (!model.threshold) throw NumericError("gda_detect: threshold not set");
  const auto [score, cls] = gda_score(model, rep);
  Verdict v;
  v.score = score;
  v.is_ood = score > *model.threshold;
  v.predicted_class = cls;
  return v;
}

// ---------------------------------------------------------------- LOF

namespace {

Vec distances_to(const Matrix& ref, std::span<const double> q) {
  Vec d(ref.rows);
  for (std::size_t i = 0; i < ref.rows; ++i) d[i] = std::sqrt(squared_distance(ref.row(i), q));
  return d;
}

// k-th smallest value of `d`, skipping index `skip` (pass npos for none).
double kth_distance(Vec d, std::size_t k, std::size_t skip) {
  if (skip < d.size()) d.erase(d.begin() + static_cast<std::ptrdiff_t>(skip));
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
  return d[k - 1];
}

// Local reachability density of a point given its distances to the reference
// set and its own k-distance.
double reach_density(const Vec& d, double own_kdist, const Vec& ref_kdist, std::size_t skip,
                     std::vector<std::size_t>* neighbours) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t o = 0; o < d.size(); ++o) {
    if (o == skip || d[o] > own_kdist) continue;
    sum += std::max(ref_kdist[o], d[o]);
    ++count;
    if (neighbours) neighbours->push_back(o);
  }
  return 1.0 / std::max(kLofDistanceFloor, sum / static_cast<double>(count));
}

constexpr std::size_t kNoSkip = static_cast<std::size_t>(-1);

}  // namespace

LofModel fit_lof(Matrix reference, std::size_t k) {
  if (k < 1 || k >= reference.rows)
    throw ConfigError("fit_lof: k must satisfy 1 <= k < " + std::to_string(reference.rows));
  LofModel m;
  m.k = k;
  m.reference = std::move(reference);
  const std::size_t n = m.reference.rows;
  // Two passes recomputing distances; an n x n table would not fit for
  // full-size reference sets.
  m.k_distance.resize(n);
  for (std::size_t p = 0; p < n; ++p) m.k_distance[p] = kth_distance(distances_to(m.reference, m.reference.row(p)), k, p);
  m.lrd.resize(n);
  for (std::size_t p = 0; p < n; ++p)
    m.lrd[p] = reach_density(distances_to(m.reference, m.reference.row(p)), m.k_distance[p], m.k_distance, p, nullptr);
  return m;
}

double lof_score(const LofModel& model, std::span<const double> query) {
  if (model.lrd.size() != model.reference.rows || model.reference.rows == 0)
    throw NumericError("lof_score: model is not fitted");
  const Vec d = distances_to(model.reference, query);
  const double kdist = kth_distance(d, model.k, kNoSkip);
  std::vector<std::size_t> nbrs;
  const double lrd_q = reach_density(d, kdist, model.k_distance, kNoSkip, &nbrs);
  double ratio = 0.0;
  for (std::size_t o : nbrs) ratio += model.lrd[o];
  return ratio / static_cast<double>(nbrs.size()) / lrd_q;
}

Verdict lof_detect(const LofModel& model, std::span<const double> query, int predicted_class) {
  if (!model.threshold) throw NumericError("lof_detect: threshold not set");
  Verdict v;
  v.score = lof_score(model, query);
  v.is_ood = v.score > *model.threshold;
  v.predicted_class = predicted_class;
  return v;
}

// ---------------------------------------------------------------- MSP

Verdict msp_detect(const MspModel& model, std::span<const double> probs) {
  if (probs.empty()) throw NumericError("msp_detect: empty distribution");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw NumericError("msp_detect: probabilities must be finite and >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw NumericError("msp_detect: probabilities do not sum to 1");
  const auto it = std::max_element(probs.begin(), probs.end());  // first max wins
  Verdict v;
  v.score = *it;
  v.predicted_class = static_cast<int>(it - probs.begin());
  v.is_ood = v.score < model.threshold;
  return v;
}

// ---------------------------------------------------------------- thresholds

namespace {

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

double ood_f1_at(std::span<const double> scores, const std::vector<bool>& is_ood, double threshold,
                 bool higher_is_ood) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool flagged = higher_is_ood ? scores[i] > threshold : scores[i] < threshold;
    if (flagged && is_ood[i]) ++tp;
    else if (flagged) ++fp;
    else if (is_ood[i]) ++fn;
  }
  return f1_from_counts(tp, fp, fn);
}

double select_threshold(std::span<const double> scores, const std::vector<bool>& is_ood, bool higher_is_ood) {
  if (scores.size() != is_ood.size()) throw NumericError("select_threshold: scores and labels differ in length");
  const std::size_t n_ood = static_cast<std::size_t>(std::count(is_ood.begin(), is_ood.end(), true));
  if (n_ood == 0 || n_ood == is_ood.size())
    throw DataError("select_threshold: dev labels must contain both IND and OOD samples");
  for (double s : scores)
    if (!std::isfinite(s)) throw NumericError("select_threshold: non-finite score");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Group equal scores: vals[g] with (ood, ind) counts per group.
  Vec vals;
  std::vector<std::size_t> ood_cnt, ind_cnt;
  for (std::size_t idx : order) {
    if (vals.empty() || scores[idx] != vals.back()) {
      vals.push_back(scores[idx]);
      ood_cnt.push_back(0);
      ind_cnt.push_back(0);
    }
    (is_ood[idx] ? ood_cnt : ind_cnt).back() += 1;
  }
  // Prefix counts over groups 0..g.
  const std::size_t groups = vals.size();
  std::size_t pre_ood = 0, pre_ind = 0;
  const std::size_t n_ind = is_ood.size() - n_ood;
  double best_f1 = -1.0, best_t = vals.front();
  for (std::size_t g = 0; g + 1 < groups; ++g) {
    pre_ood += ood_cnt[g];
    pre_ind += ind_cnt[g];
    const double t = 0.5 * (vals[g] + vals[g + 1]);
    // higher_is_ood flags groups g+1.. ; otherwise groups ..g.
    const std::size_t tp = higher_is_ood ? n_ood - pre_ood : pre_ood;
    const std::size_t fp = higher_is_ood ? n_ind - pre_ind : pre_ind;
    const double f1 = f1_from_counts(tp, fp, n_ood - tp);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  // Flagging everything can win when every score group is mixed.
  const double all_f1 = f1_from_counts(n_ood, n_ind, 0);
  if (all_f1 > best_f1)
    best_t = higher_is_ood ? std::nextafter(vals.front(), -INFINITY) : std::nextafter(vals.back(), INFINITY);
  return best_t;
}

}  // namespace sclood
