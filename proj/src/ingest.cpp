#include "rclub/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

#include "rclub/rng.hpp"

namespace rclub {

Matrix binarize(const Matrix& ratings, double threshold) {
  Matrix out(ratings.rows, ratings.cols);
  for (size_t i = 0; i < ratings.a.size(); ++i)
    out.a[i] = ratings.a[i] > threshold ? 1.0 : 0.0;
  return out;
}

namespace {

// Modified Gram-Schmidt, run twice for orthogonality to working precision.
// Columns that vanish are replaced with fresh random directions.
void orthonormalize(Matrix& v, Rng& rng) {
  for (int pass = 0; pass < 2; ++pass) {
    for (int j = 0; j < v.cols; ++j) {
      for (int k = 0; k < j; ++k) {
        double s = 0.0;
        for (int i = 0; i < v.rows; ++i) s += v(i, j) * v(i, k);
        for (int i = 0; i < v.rows; ++i) v(i, j) -= s * v(i, k);
      }
      double n = 0.0;
      for (int i = 0; i < v.rows; ++i) n += v(i, j) * v(i, j);
      n = std::sqrt(n);
      if (n < 1e-300) {
        for (int i = 0; i < v.rows; ++i) v(i, j) = rng.next_normal();
        --j;  // redo this column
        continue;
      }
      for (int i = 0; i < v.rows; ++i) v(i, j) /= n;
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

}  // namespace

SvdResult truncated_svd(const Matrix& r, int rank, uint64_t seed,
                        int max_iters, double tol) {
  if (r.rows < 1 || r.cols < 1)
    throw std::invalid_argument("truncated_svd: empty matrix");
  if (rank < 1 || rank > std::min(r.rows, r.cols))
    throw std::invalid_argument("truncated_svd: rank out of range");

  // Gram matrix R^T R once; iteration works on the item side.
  Matrix g(r.cols, r.cols);
  for (int i = 0; i < r.rows; ++i)
    for (int j = 0; j < r.cols; ++j) {
      double rij = r(i, j);
      if (rij == 0.0) continue;
      for (int k = 0; k < r.cols; ++k) g(j, k) += rij * r(i, k);
    }

  Rng rng(Rng::derive(seed, "svd/init"));
  Matrix v(r.cols, rank);
  for (auto& x : v.a) x = rng.next_normal();
  orthonormalize(v, rng);

  SvdResult out;
  double change = 0.0;
  bool settled = false;
  Matrix prev = v;
  for (int it = 0; it < max_iters; ++it) {
    Matrix w = matmul(g, v);
    orthonormalize(w, rng);
    // Subspace movement, measured against sign flips per column.
    change = 0.0;
    for (int j = 0; j < rank; ++j) {
      double s = 0.0;
      for (int i = 0; i < w.rows; ++i) s += w(i, j) * prev(i, j);
      double flip = s >= 0.0 ? 1.0 : -1.0;
      for (int i = 0; i < w.rows; ++i)
        change = std::max(change, std::abs(w(i, j) - flip * prev(i, j)));
    }
    v = w;
    prev = w;
    out.iterations = it + 1;
    if (change < tol) {
      settled = true;
      break;
    }
  }
  out.residual = change;
  if (!settled)
    throw ConvergenceError("truncated_svd: subspace iteration did not settle",
                           change);

  // Rayleigh-Ritz: diagonalize V^T G V to rotate within the subspace and
  // read off the singular values.
  Matrix small(rank, rank);
  Matrix gv = matmul(g, v);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j) {
      double s = 0.0;
      for (int k = 0; k < v.rows; ++k) s += v(k, i) * gv(k, j);
      small(i, j) = s;
    }
  for (int i = 0; i < rank; ++i)
    for (int j = i + 1; j < rank; ++j) {
      double m = 0.5 * (small(i, j) + small(j, i));
      small(i, j) = m;
      small(j, i) = m;
    }
  EigenDecomposition eig = jacobi_eigen(small);

  // Largest first.
  out.v = Matrix(r.cols, rank);
  out.sigma.assign(rank, 0.0);
  for (int j = 0; j < rank; ++j) {
    int src = rank - 1 - j;
    out.sigma[j] = std::sqrt(std::max(eig.values[src], 0.0));
    for (int i = 0; i < r.cols; ++i) {
      double s = 0.0;
      for (int k = 0; k < rank; ++k) s += v(i, k) * eig.vectors(k, src);
      out.v(i, j) = s;
    }
  }

  out.u = Matrix(r.rows, rank);
  for (int j = 0; j < rank; ++j) {
    if (out.sigma[j] <= 1e-12) continue;  // rank-deficient column stays zero
    for (int i = 0; i < r.rows; ++i) {
      double s = 0.0;
      for (int k = 0; k < r.cols; ++k) s += r(i, k) * out.v(k, j);
      out.u(i, j) = s / out.sigma[j];
    }
  }
  return out;
}

namespace {

Matrix scaled_rows(Matrix m) {
  double max_norm = 0.0;
  for (int i = 0; i < m.rows; ++i) {
    double n = 0.0;
    for (int j = 0; j < m.cols; ++j) n += m(i, j) * m(i, j);
    max_norm = std::max(max_norm, std::sqrt(n));
  }
  if (max_norm > 1.0)
    for (auto& x : m.a) x /= max_norm;
  return m;
}

}  // namespace

Matrix user_features(const SvdResult& s) {
  Matrix m = s.u;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) m(i, j) *= s.sigma[j];
  return scaled_rows(std::move(m));
}

Matrix item_features(const SvdResult& s) { return scaled_rows(s.v); }

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  for (auto& f : out) {
    size_t a = f.find_first_not_of(" \t");
    size_t b = f.find_last_not_of(" \t");
    f = a == std::string::npos ? std::string() : f.substr(a, b - a + 1);
  }
  return out;
}

double parse_number(const std::string& s, long line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError("not a number: '" + s + "'", line);
  return v;
}

bool is_dim_header(const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i)
    if (fields[i] != "dim" + std::to_string(i)) return false;
  return true;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  while (!lines.empty() && split_csv_line(lines.back()).size() == 1 &&
         split_csv_line(lines.back())[0].empty())
    lines.pop_back();
  return lines;
}

}  // namespace

Matrix load_features(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.empty()) throw ParseError("empty features file", 1);

  size_t start = 0;
  auto first = split_csv_line(lines[0]);
  if (is_dim_header(first)) start = 1;
  if (start == lines.size()) throw ParseError("no feature rows", 1);

  size_t dim = split_csv_line(lines[start]).size();
  Matrix m(static_cast<int>(lines.size() - start), static_cast<int>(dim));
  for (size_t li = start; li < lines.size(); ++li) {
    auto fields = split_csv_line(lines[li]);
    if (fields.size() != dim)
      throw ParseError("expected " + std::to_string(dim) + " fields, got " +
                           std::to_string(fields.size()),
                       static_cast<long>(li + 1));
    int row = static_cast<int>(li - start);
    double n2 = 0.0;
    for (size_t j = 0; j < dim; ++j) {
      double val = parse_number(fields[j], static_cast<long>(li + 1));
      m(row, static_cast<int>(j)) = val;
      n2 += val * val;
    }
    double n = std::sqrt(n2);
    if (n > 1.0 + 1e-9) {
      std::cerr << "warning: feature row " << row << " has norm " << n
                << " > 1, normalizing\n";
      for (size_t j = 0; j < dim; ++j) m(row, static_cast<int>(j)) /= n;
    }
  }
  return m;
}

Matrix load_ratings(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.empty()) throw ParseError("empty ratings file", 1);

  auto first = split_csv_line(lines[0]);
  bool triplets = first.size() == 3 && first[0] == "user_id" &&
                  first[1] == "item_id" && first[2] == "rating";
  if (triplets) {
    std::map<std::pair<int, int>, double> entries;
    int max_user = -1, max_item = -1;
    for (size_t li = 1; li < lines.size(); ++li) {
      auto fields = split_csv_line(lines[li]);
      if (fields.size() != 3)
        throw ParseError("expected 3 fields, got " +
                             std::to_string(fields.size()),
                         static_cast<long>(li + 1));
      long ln = static_cast<long>(li + 1);
      double ud = parse_number(fields[0], ln);
      double id = parse_number(fields[1], ln);
      double rating = parse_number(fields[2], ln);
      int user = static_cast<int>(ud), item = static_cast<int>(id);
      if (user < 0 || item < 0 || ud != user || id != item)
        throw ParseError("ids must be non-negative integers", ln);
      entries[{user, item}] = rating;
      max_user = std::max(max_user, user);
      max_item = std::max(max_item, item);
    }
    if (max_user < 0) throw ParseError("no rating rows", 2);
    Matrix m(max_user + 1, max_item + 1);
    for (const auto& [key, val] : entries) m(key.first, key.second) = val;
    return m;
  }

  size_t cols = first.size();
  Matrix m(static_cast<int>(lines.size()), static_cast<int>(cols));
  for (size_t li = 0; li < lines.size(); ++li) {
    auto fields = split_csv_line(lines[li]);
    if (fields.size() != cols)
      throw ParseError("expected " + std::to_string(cols) + " fields, got " +
                           std::to_string(fields.size()),
                       static_cast<long>(li + 1));
    for (size_t j = 0; j < cols; ++j)
      m(static_cast<int>(li), static_cast<int>(j)) =
          parse_number(fields[j], static_cast<long>(li + 1));
  }
  return m;
}

void write_features_csv(const Matrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (int j = 0; j < m.cols; ++j)
    out << (j ? "," : "") << "dim" << j;
  out << "\n";
  char buf[64];
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      auto res = std::to_chars(buf, buf + sizeof buf, m(i, j));
      out << (j ? "," : "") << std::string_view(buf, res.ptr - buf);
    }
    out << "\n";
  }
}

}  // namespace rclub
