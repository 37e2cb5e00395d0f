#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sclood/numerics.hpp"

namespace sclood {

/// Lower-triangular L with A = L L^T, or nullopt if A is not positive definite.
std::optional<Matrix> cholesky(const Matrix& a);

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
/// Throws NumericError when the factorization fails.
Matrix spd_inverse(const Matrix& a);

/// Quadratic form x^T A y.
double quadratic_form(const Matrix& a, std::span<const double> x, std::span<const double> y);

struct EigenPair {
  double value = 0.0;
  Vec vector;
};

/// Leading eigenpairs of a symmetric PSD matrix by power iteration with
/// Hotelling deflation. Returned in descending eigenvalue order.
std::vector<EigenPair> top_eigenpairs(const Matrix& sym, std::size_t count, std::uint64_t seed = 7,
                                      std::size_t max_iters = 5000, double tol = 1e-13);

/// Column means of the rows of `x`.
Vec column_means(const Matrix& x);

/// (1/n) sum (x_i - mean)(x_i - mean)^T.
Matrix covariance(const Matrix& x);

}  // namespace sclood
