#include "sclood/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sclood/errors.hpp"
#include "sclood/linalg.hpp"

namespace sclood {

namespace {

void require_unit_rows(const Matrix& m, const char* what) {
  for (std::size_t i = 0; i < m.rows; ++i)
    if (std::abs(norm(m.row(i)) - 1.0) > 1e-6)
      throw NumericError(std::string(what) + ": row " + std::to_string(i) + " is not unit-norm");
}

}  // namespace

Matrix normalize_rows(const Matrix& reps) {
  Matrix out = reps;
  for (std::size_t i = 0; i < reps.rows; ++i) {
    const Vec u = l2_normalize(reps.row(i));
    std::copy(u.begin(), u.end(), out.row(i).begin());
  }
  return out;
}

VarianceStats intra_class_stats(const Matrix& unit_reps, std::span<const int> labels) {
  if (labels.size() != unit_reps.rows) throw NumericError("intra_class_stats: label count mismatch");
  require_unit_rows(unit_reps, "intra_class_stats");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

  VarianceStats st;
  Vec variances;
  for (const auto& [label, idx] : members) {
    if (idx.size() < 2) {
      st.excluded_singletons.push_back(label);
      continue;
    }
    Vec center(unit_reps.cols, 0.0);
    for (std::size_t i : idx) axpy(1.0, unit_reps.row(i), center);
    for (double& c : center) c /= static_cast<double>(idx.size());
    double v = 0.0;
    for (std::size_t i : idx) v += squared_distance(unit_reps.row(i), center);
    variances.push_back(v / static_cast<double>(idx.size()));
  }
  if (variances.empty()) throw DataError("intra_class_stats: no class has at least 2 samples");
  std::sort(variances.begin(), variances.end());
  const std::size_t n = variances.size();
  st.classes = n;
  st.min = variances.front();
  st.max = variances.back();
  double sum = 0.0;
  for (double v : variances) sum += v;
  st.mean = sum / static_cast<double>(n);
  st.median = n % 2 == 1 ? variances[n / 2] : 0.5 * (variances[n / 2 - 1] + variances[n / 2]);
  return st;
}

Matrix class_centers(const Matrix& reps, std::span<const int> labels, std::size_t num_classes) {
  Matrix centers(num_classes, reps.cols);
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < reps.rows; ++i) {
    if (labels[i] < 0) continue;
    const auto c = static_cast<std::size_t>(labels[i]);
    ++counts[c];
    axpy(1.0, reps.row(i), centers.row(c));
  }
  for (std::size_t c = 0; c < num_classes; ++c)
    if (counts[c] > 0)
      for (double& x : centers.row(c)) x /= static_cast<double>(counts[c]);
  return centers;
}

double inter_class_distance(const Matrix& unit_centers, std::size_t k) {
  const std::size_t n = unit_centers.rows;
  if (k < 1 || k >= n)
    throw ConfigError("inter_class_distance: k must satisfy 1 <= k < " + std::to_string(n));
  require_unit_rows(unit_centers, "inter_class_distance");
  double total = 0.0;
  Vec dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dist.push_back(1.0 - dot(unit_centers.row(i), unit_centers.row(j)));
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += dist[j];
    total += s / static_cast<double>(k);
  }
  return total / static_cast<double>(n);
}

PcaResult pca_project(const Matrix& reps, std::span<const int> labels, std::span<const int> class_subset) {
  if (labels.size() != reps.rows) throw NumericError("pca_project: label count mismatch");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < reps.rows; ++i)
    if (class_subset.empty() || std::find(class_subset.begin(), class_subset.end(), labels[i]) != class_subset.end())
      keep.push_back(i);
  if (keep.size() < 2) throw DataError("pca_project: need at least 2 samples");

  Matrix x(keep.size(), reps.cols);
  for (std::size_t r = 0; r < keep.size(); ++r) std::copy(reps.row(keep[r]).begin(), reps.row(keep[r]).end(), x.row(r).begin());
  const Vec mean = column_means(x);
  for (std::size_t r = 0; r < x.rows; ++r) axpy(-1.0, mean, x.row(r));

  const Matrix cov = covariance(x);
  const auto pairs = top_eigenpairs(cov, 2);
  PcaResult res;
  res.components = Matrix(2, reps.cols);
  res.eigenvalues.assign(2, 0.0);
  double scale = 0.0;
  for (std::size_t i = 0; i < cov.rows; ++i) scale += cov(i, i);
  if (pairs.empty() || !(pairs[0].value > 1e-12 * std::max(scale, 1e-300)))
    throw DataError("pca_project: data has no spread");
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    res.eigenvalues[p] = pairs[p].value;
    std::copy(pairs[p].vector.begin(), pairs[p].vector.end(), res.components.row(p).begin());
  }
  res.rank_deficient = pairs.size() < 2 || !(pairs[1].value > 1e-10 * pairs[0].value);
  if (res.rank_deficient) {
    std::fill(res.components.row(1).begin(), res.components.row(1).end(), 0.0);
    res.eigenvalues[1] = 0.0;
  }
  for (std::size_t r = 0; r < keep.size(); ++r) {
    PcaRow row;
    row.id = keep[r];
    row.label = labels[keep[r]];
    row.pc1 = dot(x.row(r), res.components.row(0));
    row.pc2 = res.rank_deficient ? 0.0 : dot(x.row(r), res.components.row(1));
    res.rows.push_back(row);
  }
  return res;
}

}  // namespace sclood
