#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace sclood {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<Vec>& rows);

  Matrix transposed() const;
  bool all_finite() const;
  void set_zero() { std::fill(data.begin(), data.end(), 0.0); }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

Matrix matmul(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
double squared_distance(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Returns v / ||v||. Throws NumericError on a zero (or non-finite) vector.
Vec l2_normalize(std::span<const double> v);

/// log(sum(exp(x))) with the max subtracted first.
double log_sum_exp(std::span<const double> x);
Vec softmax(std::span<const double> logits);

/// Seeded random source. `derive` splits off an independent child stream so
/// every stochastic choice in a run traces back to one root seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }
  Rng derive(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream + 0x632be59bd9b4e019ULL))); }

  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  std::size_t index(std::size_t n);
  std::mt19937_64& engine() { return engine_; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates over our own index draws; std::shuffle's call pattern is
    // implementation-defined.
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

  static std::uint64_t mix(std::uint64_t x);  // splitmix64 finalizer

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

struct AdamState {
  Vec first_moment;
  Vec second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-3;

  static AdamState for_size(std::size_t n, double learning_rate = 1e-3);
};

/// One bias-corrected Adam update in place. Throws on shape mismatch or a
/// non-finite gradient entry (the message names the index).
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h for each coordinate.
Vec finite_diff_grad(const ScalarFn& f, std::span<const double> x, double h = 1e-5);

/// ||a - b|| / max(||a||, ||b||); 0 when both vectors vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace sclood
