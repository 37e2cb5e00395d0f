#include "sclood/linalg.hpp"

#include <cmath>

#include "sclood/errors.hpp"

namespace sclood {

std::optional<Matrix> cholesky(const Matrix& a) {
  const std::size_t n = a.rows;
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) return std::nullopt;
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Matrix spd_inverse(const Matrix& a) {
  if (a.rows != a.cols) throw NumericError("spd_inverse: matrix is not square");
  auto l = cholesky(a);
  if (!l) throw NumericError("spd_inverse: matrix is not positive definite");
  const std::size_t n = a.rows;
  // Solve L L^T X = I column by column.
  Matrix inv(n, n);
  Vec y(n);
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = (i == col) ? 1.0 : 0.0;
      for (std::size_t k = 0; k < i; ++k) s -= (*l)(i, k) * y[k];
      y[i] = s / (*l)(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = y[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= (*l)(k, ii) * inv(k, col);
      inv(ii, col) = s / (*l)(ii, ii);
    }
  }
  // Symmetrize away round-off.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = m;
      inv(j, i) = m;
    }
  return inv;
}

double quadratic_form(const Matrix& a, std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i) s += x[i] * dot(a.row(i), y);
  return s;
}

std::vector<EigenPair> top_eigenpairs(const Matrix& sym, std::size_t count, std::uint64_t seed,
                                      std::size_t max_iters, double tol) {
  const std::size_t n = sym.rows;
  Matrix work = sym;
  Rng rng(seed);
  std::vector<EigenPair> out;
  for (std::size_t p = 0; p < count && p < n; ++p) {
    Vec v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    // Start orthogonal to already-found vectors so deflation round-off can't
    // pull the iterate back.
    for (const auto& prev : out) axpy(-dot(v, prev.vector), prev.vector, v);
    double vn = norm(v);
    if (vn == 0.0) break;
    for (double& x : v) x /= vn;

    double lambda = 0.0;
    Vec w(n);
    for (std::size_t it = 0; it < max_iters; ++it) {
      for (std::size_t i = 0; i < n; ++i) w[i] = dot(work.row(i), v);
      for (const auto& prev : out) axpy(-dot(w, prev.vector), prev.vector, w);
      const double wn = norm(w);
      if (wn == 0.0) {
        lambda = 0.0;
        break;
      }
      double change = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double nv = w[i] / wn;
        change = std::max(change, std::abs(nv - v[i]));
        v[i] = nv;
      }
      lambda = wn;
      if (change < tol) break;
    }
    // Rayleigh quotient for the final value.
    for (std::size_t i = 0; i < n; ++i) w[i] = dot(work.row(i), v);
    lambda = dot(v, w);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) work(i, j) -= lambda * v[i] * v[j];
    out.push_back({lambda, v});
  }
  return out;
}

Vec column_means(const Matrix& x) {
  Vec mean(x.cols, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) axpy(1.0, x.row(r), mean);
  if (x.rows > 0)
    for (double& m : mean) m /= static_cast<double>(x.rows);
  return mean;
}

Matrix covariance(const Matrix& x) {
  const Vec mean = column_means(x);
  Matrix cov(x.cols, x.cols);
  Vec d(x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) d[c] = x(r, c) - mean[c];
    for (std::size_t i = 0; i < x.cols; ++i)
      for (std::size_t j = 0; j < x.cols; ++j) cov(i, j) += d[i] * d[j];
  }
  for (double& v : cov.data) v /= static_cast<double>(x.rows);
  return cov;
}

}  // namespace sclood
