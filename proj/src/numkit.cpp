#include "rclub/numkit.hpp"

#include <cmath>
#include <cstdlib>

namespace rclub {

Matrix Matrix::identity(int n, double scale) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = scale;
  return m;
}

double dot(const Vector& x, const Vector& y) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(const Vector& x) { return std::sqrt(dot(x, x)); }

Vector matvec(const Matrix& m, const Vector& x) {
  Vector r(m.rows, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
    r[i] = s;
  }
  return r;
}

void add_outer(Matrix& m, const Vector& x, double w) {
  for (int i = 0; i < m.rows; ++i) {
    double wi = w * x[i];
    for (int j = 0; j < m.cols; ++j) m(i, j) += wi * x[j];
  }
}

void add_scaled(Vector& x, const Vector& y, double s) {
  for (size_t i = 0; i < x.size(); ++i) x[i] += s * y[i];
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.a.size(); ++i)
    m = std::max(m, std::abs(a.a[i] - b.a[i]));
  return m;
}

Matrix cholesky(const Matrix& spd) {
  int n = spd.rows;
  Matrix l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = spd(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0)
          throw NumericError("cholesky: matrix not positive definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

Vector cholesky_solve(const Matrix& l, const Vector& b) {
  int n = l.rows;
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  Vector x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

Matrix cholesky_inverse(const Matrix& spd) {
  int n = spd.rows;
  Matrix l = cholesky(spd);
  // Invert L in place, then form L^-T L^-1; fill the lower triangle and
  // mirror so the result is exactly symmetric.
  Matrix li(n, n);
  for (int i = 0; i < n; ++i) {
    li(i, i) = 1.0 / l(i, i);
    for (int j = 0; j < i; ++j) {
      double s = 0.0;
      for (int k = j; k < i; ++k) s -= l(i, k) * li(k, j);
      li(i, j) = s / l(i, i);
    }
  }
  Matrix inv(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = i; k < n; ++k) s += li(k, i) * li(k, j);
      inv(i, j) = s;
      inv(j, i) = s;
    }
  }
  return inv;
}

static void check_symmetric(const Matrix& m) {
  if (m.rows != m.cols)
    throw std::invalid_argument("eigen: matrix must be square");
  for (int i = 0; i < m.rows; ++i)
    for (int j = i + 1; j < m.cols; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-8)
        throw std::invalid_argument("eigen: matrix asymmetric beyond 1e-8");
}

EigenDecomposition jacobi_eigen(const Matrix& sym) {
  check_symmetric(sym);
  int n = sym.rows;
  Matrix a = sym;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }
  Matrix v = Matrix::identity(n);

  double scale = 0.0;
  for (double x : a.a) scale = std::max(scale, std::abs(x));
  double stop = 1e-14 * std::max(1.0, scale);

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= stop) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (std::abs(apq) <= stop * 1e-2) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigenDecomposition out;
  out.values.resize(n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (a(order[j], order[j]) < a(order[i], order[i]))
        std::swap(order[i], order[j]);
  out.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (int i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

double min_eigenvalue(const Matrix& sym) {
  return jacobi_eigen(sym).values.front();
}

SpdState::SpdState(int dim, double reg, int refresh_period)
    : dim_(dim), reg_(reg), refresh_period_(refresh_period) {
  if (dim < 1) throw std::invalid_argument("SpdState: dim must be >= 1");
  if (!(reg > 0.0)) throw std::invalid_argument("SpdState: reg must be > 0");
  if (refresh_period < 1)
    throw std::invalid_argument("SpdState: refresh period must be >= 1");
  gram_ = Matrix::identity(dim, reg);
  inv_ = Matrix::identity(dim, 1.0 / reg);
}

void SpdState::rank1_update(const Vector& x, double w) {
  if (static_cast<int>(x.size()) != dim_)
    throw std::invalid_argument("rank1_update: dimension mismatch");
  if (w < 0.0) throw std::invalid_argument("rank1_update: negative weight");
  if (w > 1.0 + 1e-9)
    throw std::invalid_argument("rank1_update: weight above 1");
  if (norm2(x) > 1.0 + 1e-9)
    throw std::invalid_argument("rank1_update: feature norm above 1");
  if (w == 0.0) return;

  add_outer(gram_, x, w);
  // Sherman-Morrison step; 1 + w x^T inv x >= 1, so no conditioning hazard.
  Vector u = matvec(inv_, x);
  double c = w / (1.0 + w * dot(x, u));
  add_outer(inv_, u, -c);

  ++total_updates_;
  if (++updates_since_refresh_ >= refresh_period_) refresh();
}

double SpdState::mahalanobis(const Vector& x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw std::invalid_argument("mahalanobis: dimension mismatch");
  double q = 0.0;
  for (int i = 0; i < dim_; ++i) {
    q += inv_(i, i) * x[i] * x[i];
    for (int j = i + 1; j < dim_; ++j)
      q += (inv_(i, j) + inv_(j, i)) * x[i] * x[j];
  }
  return std::sqrt(std::max(q, 0.0));
}

Vector SpdState::solve(const Vector& b) {
  if (static_cast<int>(b.size()) != dim_)
    throw std::invalid_argument("solve: dimension mismatch");
  double tol = 1e-8 * (1.0 + norm2(b));
  Vector r = matvec(inv_, b);
  auto residual = [&](const Vector& sol) {
    Vector gr = matvec(gram_, sol);
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
      double e = gr[i] - b[i];
      s += e * e;
    }
    return std::sqrt(s);
  };
  if (residual(r) <= tol) return r;
  refresh();
  r = matvec(inv_, b);
  if (residual(r) <= tol) return r;
  throw NumericError("solve: residual check failed after refresh");
}

void SpdState::refresh() {
  inv_ = cholesky_inverse(gram_);
  updates_since_refresh_ = 0;
  // gram * inv should be the identity to about machine precision here.
  double drift = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) {
      double s = 0.0;
      for (int k = 0; k < dim_; ++k) s += gram_(i, k) * inv_(k, j);
      drift = std::max(drift, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  if (drift > 1e-6)
    throw NumericError("refresh: inverse drift above 1e-6");
}

SpdState SpdState::from_gram(Matrix gram, double reg, int refresh_period) {
  if (gram.rows != gram.cols)
    throw std::invalid_argument("from_gram: matrix must be square");
  SpdState s(gram.rows, reg, refresh_period);
  s.gram_ = std::move(gram);
  s.inv_ = cholesky_inverse(s.gram_);
  return s;
}

SpdState aggregate(const std::vector<const Matrix*>& parts, double reg,
                   int dim) {
  Matrix gram = Matrix::identity(dim, reg);
  for (const Matrix* p : parts) {
    if (p->rows != dim || p->cols != dim)
      throw std::invalid_argument("aggregate: part dimension mismatch");
    for (size_t i = 0; i < gram.a.size(); ++i) gram.a[i] += p->a[i];
  }
  return SpdState::from_gram(std::move(gram), reg);
}

}  // namespace rclub
