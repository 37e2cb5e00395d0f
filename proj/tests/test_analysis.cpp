#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sclood/analysis.hpp"
#include "sclood/errors.hpp"

using namespace sclood;

namespace {

Matrix random_rotation(std::mt19937_64& g, std::size_t n) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::normal_distribution<double> d;
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = d(g);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

}  // namespace

TEST(IntraClass, IdenticalMembersGiveZero) {
  const Matrix reps = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}, {0, 1}, {0, 1}});
  const auto s = intra_class_stats(reps, std::vector<int>{0, 0, 1, 1, 1});
  EXPECT_EQ(s.min, 0.0);
  EXPECT_EQ(s.max, 0.0);
  EXPECT_EQ(s.mean, 0.0);
  EXPECT_EQ(s.median, 0.0);
  EXPECT_EQ(s.classes, 2u);
}

TEST(IntraClass, AntipodalPairHasUnitVariance) {
  const Matrix reps = Matrix::from_rows({{1, 0}, {-1, 0}});
  EXPECT_NEAR(intra_class_stats(reps, std::vector<int>{0, 0}).mean, 1.0, 1e-15);
}

TEST(IntraClass, SummaryOrderingAndSingletons) {
  std::mt19937_64 g(21);
  const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 40, 5));
  std::vector<int> y(40);
  for (std::size_t i = 0; i < 39; ++i) y[i] = static_cast<int>(i % 6);
  y[39] = 6;  // singleton
  const auto s = intra_class_stats(reps, y);
  EXPECT_LE(s.min, s.median);
  EXPECT_LE(s.median, s.max);
  EXPECT_EQ(s.classes, 6u);
  EXPECT_EQ(s.excluded_singletons, (std::vector<int>{6}));
}

TEST(IntraClass, InvariantUnderDuplication) {
  std::mt19937_64 g(22);
  const Matrix reps = oracle::unit_rows(oracle::random_matrix(g, 30, 4));
  std::vector<int> y(30);
  for (std::size_t i = 0; i < 30; ++i) y[i] = static_cast<int>(i % 3);
  std::vector<Vec> twice;
  std::vector<int> y2;
  for (std::size_t i = 0; i < 30; ++i) {
    twice.push_back(oracle::row_of(reps, i));
    twice.push_back(oracle::row_of(reps, i));
    y2.push_back(y[i]);
    y2.push_back(y[i]);
  }
  const auto a = intra_class_stats(reps, y), b = intra_class_stats(Matrix::from_rows(twice), y2);
  EXPECT_NEAR(a.mean, b.mean, 1e-12);
  EXPECT_NEAR(a.min, b.min, 1e-12);
  EXPECT_NEAR(a.max, b.max, 1e-12);
  EXPECT_NEAR(a.median, b.median, 1e-12);
}

TEST(IntraClass, RejectsNonUnitRows) {
  EXPECT_THROW(intra_class_stats(Matrix::from_rows({{2, 0}, {0, 1}}), std::vector<int>{0, 0}), NumericError);
}

TEST(InterClass, HandExamples) {
  EXPECT_NEAR(inter_class_distance(Matrix::from_rows({{1, 0}, {1, 0}}), 1), 0.0, 1e-15);
  EXPECT_NEAR(inter_class_distance(Matrix::from_rows({{1, 0}, {0, 1}}), 1), 1.0, 1e-15);
  EXPECT_NEAR(inter_class_distance(Matrix::from_rows({{1, 0}, {0, 1}, {-1, 0}}), 1), 1.0, 1e-15);
  // k=2 on the same centers: (1+2)/2 for the ends, (1+1)/2 for the middle.
  EXPECT_NEAR(inter_class_distance(Matrix::from_rows({{1, 0}, {0, 1}, {-1, 0}}), 2), (1.5 + 1.0 + 1.5) / 3, 1e-15);
}

TEST(InterClass, KOutOfRange) {
  const Matrix c = Matrix::from_rows({{1, 0}, {0, 1}});
  EXPECT_THROW(inter_class_distance(c, 0), ConfigError);
  EXPECT_THROW(inter_class_distance(c, 2), ConfigError);
}

TEST(InterClass, InvariantUnderRotation) {
  std::mt19937_64 g(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix centers = oracle::unit_rows(oracle::random_matrix(g, 8, 5));
    const Matrix rotated = matmul(centers, random_rotation(g, 5));
    for (std::size_t k = 1; k < 8; ++k)
      EXPECT_NEAR(inter_class_distance(centers, k), inter_class_distance(normalize_rows(rotated), k), 1e-9);
  }
}

TEST(ClassCenters, Means) {
  const Matrix reps = Matrix::from_rows({{1, 2}, {3, 4}, {10, 0}});
  const Matrix c = class_centers(reps, std::vector<int>{0, 0, 2}, 3);
  EXPECT_EQ(c, Matrix::from_rows({{2, 3}, {0, 0}, {10, 0}}));
}

TEST(Pca, TwoDimensionalDataIsRotated) {
  std::mt19937_64 g(24);
  Matrix x = oracle::random_matrix(g, 30, 2);
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0.0;
    for (std::size_t i = 0; i < 30; ++i) m += x(i, c) / 30.0;
    for (std::size_t i = 0; i < 30; ++i) x(i, c) -= m;
  }
  const auto p = pca_project(x, std::vector<int>(30, 0));
  ASSERT_EQ(p.rows.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = i + 1; j < 30; ++j) {
      const double d_in = std::hypot(x(i, 0) - x(j, 0), x(i, 1) - x(j, 1));
      const double d_out = std::hypot(p.rows[i].pc1 - p.rows[j].pc1, p.rows[i].pc2 - p.rows[j].pc2);
      EXPECT_NEAR(d_in, d_out, 1e-8);
    }
  EXPECT_FALSE(p.rank_deficient);
}

TEST(Pca, CollinearPointsHaveZeroSecondCoordinate) {
  std::vector<Vec> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({1.0 * i, 2.0 * i, -0.5 * i});
  const auto p = pca_project(Matrix::from_rows(rows), std::vector<int>(10, 1));
  EXPECT_TRUE(p.rank_deficient);
  for (const auto& r : p.rows) {
    EXPECT_EQ(r.pc2, 0.0);
    EXPECT_TRUE(std::isfinite(r.pc1));
  }
}

TEST(Pca, RankTwoReconstructionMatchesEigensolver) {
  std::mt19937_64 g(25);
  const std::size_t n = 60, d = 5;
  Matrix x = oracle::random_matrix(g, n, d);
  for (std::size_t i = 0; i < n; ++i) x(i, 0) *= 3.0, x(i, 3) *= 2.0;
  const auto p = pca_project(x, std::vector<int>(n, 0));

  Eigen::MatrixXd e(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(i, j);
  const Eigen::MatrixXd centered = e.rowwise() - e.colwise().mean();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(centered.transpose() * centered);
  const Eigen::VectorXd ev = solver.eigenvalues();  // ascending
  const double oracle_err = ev(0) + ev(1) + ev(2);

  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double rec = p.rows[i].pc1 * p.components(0, j) + p.rows[i].pc2 * p.components(1, j);
      const double r = centered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - rec;
      err += r * r;
    }
  EXPECT_NEAR(err, oracle_err, 1e-6);
}

TEST(Pca, ClassSubsetKeepsOnlyThoseRows) {
  std::mt19937_64 g(26);
  const Matrix x = oracle::random_matrix(g, 12, 3);
  std::vector<int> y(12);
  for (std::size_t i = 0; i < 12; ++i) y[i] = static_cast<int>(i % 4);
  const std::vector<int> keep{1, 3};
  const auto p = pca_project(x, y, keep);
  ASSERT_EQ(p.rows.size(), 6u);
  for (const auto& r : p.rows) {
    EXPECT_TRUE(r.label == 1 || r.label == 3);
    EXPECT_EQ(r.id % 2, 1u);
  }
}

TEST(NormalizeRows, UnitNorms) {
  std::mt19937_64 g(27);
  const Matrix n = normalize_rows(oracle::random_matrix(g, 10, 4));
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(norm(oracle::row_of(n, i)), 1.0, 1e-12);
}
