#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rclub/numkit.hpp"

namespace rclub {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Entry-wise rating > threshold becomes 1, everything else 0. Idempotent
// for any threshold in [0, 1).
Matrix binarize(const Matrix& ratings, double threshold = 3.0);

struct SvdResult {
  Matrix u;      // rows x rank, orthonormal columns
  Vector sigma;  // non-increasing, >= 0
  Matrix v;      // cols x rank, orthonormal columns
  int iterations = 0;
  double residual = 0.0;  // subspace change at the final iteration
};

// Rank-d factorization by block subspace iteration on R^T R with
// re-orthonormalization, seeded random start, Rayleigh-Ritz rotation at the
// end. Throws ConvergenceError (with the achieved residual) if the subspace
// has not settled after max_iters sweeps.
SvdResult truncated_svd(const Matrix& r, int rank, uint64_t seed,
                        int max_iters = 1000, double tol = 1e-12);

// Simulator-facing factors: rows of u*diag(sigma) resp. v, rescaled by the
// largest row norm so every row fits in the unit ball.
Matrix user_features(const SvdResult& s);
Matrix item_features(const SvdResult& s);

// CSV of one feature row per line, optional "dim0,dim1,..." header. Rows
// with norm above 1 + 1e-9 are normalized to unit length with a warning on
// stderr. Ragged or non-numeric input raises ParseError with the line.
Matrix load_features(const std::string& path);

// Dense numeric CSV, or sparse triplets under a "user_id,item_id,rating"
// header (ids 0-based, duplicates keep the last value).
Matrix load_ratings(const std::string& path);

void write_features_csv(const Matrix& m, const std::string& path);

}  // namespace rclub
