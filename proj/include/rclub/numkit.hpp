#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rclub {

// Raised when a numeric routine detects an internal inconsistency it cannot
// recover from (failed refresh drift check, non-positive-definite pivot, ...).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

using Vector = std::vector<double>;

// Dense row-major matrix. Dimensions in this project are small (d <= 64),
// so flat storage and plain loops are all we need.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  bool operator==(const Matrix&) const = default;

  static Matrix identity(int n, double scale = 1.0);
};

double dot(const Vector& x, const Vector& y);
double norm2(const Vector& x);
Vector matvec(const Matrix& m, const Vector& x);
void add_outer(Matrix& m, const Vector& x, double w);  // m += w * x * x^T
void add_scaled(Vector& x, const Vector& y, double s); // x += s * y
double max_abs_diff(const Matrix& a, const Matrix& b);

// Cholesky machinery for the direct-factorization path (refresh, aggregate).
// cholesky() returns the lower factor L with A = L L^T and throws NumericError
// on a non-positive pivot.
Matrix cholesky(const Matrix& spd);
Vector cholesky_solve(const Matrix& chol_lower, const Vector& b);
Matrix cholesky_inverse(const Matrix& spd);

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // column j pairs with values[j]
};

// Cyclic Jacobi sweeps on a symmetric matrix. Input asymmetric beyond 1e-8
// is rejected as invalid-argument.
EigenDecomposition jacobi_eigen(const Matrix& sym);
double min_eigenvalue(const Matrix& sym);

// Regularized Gram matrix reg*I + sum_k w_k x_k x_k^T with a maintained
// inverse. Updates are O(d^2) rank-one corrections to both matrices; the
// inverse is recomputed from gram by Cholesky every refresh_period updates
// (and whenever a solve fails its residual check) to stop error accumulation.
class SpdState {
 public:
  static constexpr int kDefaultRefreshPeriod = 4096;

  SpdState(int dim, double reg, int refresh_period = kDefaultRefreshPeriod);

  // Builds a state around an externally assembled Gram (already including
  // reg*I), inverted by direct factorization.
  static SpdState from_gram(Matrix gram, double reg,
                            int refresh_period = kDefaultRefreshPeriod);

  int dim() const { return dim_; }
  double reg() const { return reg_; }
  const Matrix& gram() const { return gram_; }
  const Matrix& inv() const { return inv_; }
  long updates_since_refresh() const { return updates_since_refresh_; }
  long total_updates() const { return total_updates_; }

  // Pre: ||x|| <= 1 + 1e-9 and 0 <= w <= 1. w == 0 is a no-op.
  void rank1_update(const Vector& x, double w);

  // sqrt(x^T inv x); the quadratic form is symmetrized so tiny drift in inv
  // cannot produce a negative radicand.
  double mahalanobis(const Vector& x) const;

  // inv * b with a residual check ||gram*r - b|| <= 1e-8 * (1 + ||b||);
  // a failed check triggers one refresh-and-retry before giving up.
  Vector solve(const Vector& b);

  void refresh();

 private:
  int dim_;
  double reg_;
  int refresh_period_;
  long updates_since_refresh_ = 0;
  long total_updates_ = 0;
  Matrix gram_;
  Matrix inv_;
};

// Combines per-user Gram contributions (each *without* its reg*I part) into
// one freshly factorized state for reg*I + sum parts.
SpdState aggregate(const std::vector<const Matrix*>& parts, double reg,
                   int dim);

}  // namespace rclub
