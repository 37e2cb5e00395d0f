#pragma once

#include <span>
#include <string>
#include <vector>

#include "sclood/numerics.hpp"

namespace sclood {

struct VarianceStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
  std::size_t classes = 0;
  std::vector<int> excluded_singletons;
};

/// Per class, mean squared distance of unit-norm representations to their
/// class mean; summarized over classes. Singleton classes are excluded and
/// listed in `excluded_singletons`.
VarianceStats intra_class_stats(const Matrix& unit_reps, std::span<const int> labels);

/// Class means of the rows of `reps` (classes with no rows stay zero).
Matrix class_centers(const Matrix& reps, std::span<const int> labels, std::size_t num_classes);

/// Mean over classes of the average (1 - cos) to each class's k nearest
/// peers. Centers must be unit rows.
double inter_class_distance(const Matrix& unit_centers, std::size_t k);

struct PcaRow {
  std::size_t id = 0;
  int label = -1;
  double pc1 = 0.0;
  double pc2 = 0.0;
};

struct PcaResult {
  std::vector<PcaRow> rows;
  Vec eigenvalues;      // top two covariance eigenvalues
  Matrix components;    // 2 x dim
  bool rank_deficient = false;
};

/// Centers the selected rows and projects them on the top two principal
/// components. An empty `class_subset` keeps every row. When the second
/// eigenvalue is numerically zero the second coordinate is zeroed and
/// `rank_deficient` set.
PcaResult pca_project(const Matrix& reps, std::span<const int> labels, std::span<const int> class_subset = {});

/// Rows of `reps` L2-normalized.
Matrix normalize_rows(const Matrix& reps);

}  // namespace sclood
