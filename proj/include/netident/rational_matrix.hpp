#pragma once

#include "netident/rational.hpp"
#include "netident/rng.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace netident {

class SingularMatrix : public std::runtime_error {
 public:
  SingularMatrix() : std::runtime_error("rational matrix is singular (zero determinant)") {}
};

class PoleSamplingExhausted : public std::runtime_error {
 public:
  PoleSamplingExhausted()
      : std::runtime_error("all sampled evaluation points hit poles; resample budget exhausted") {}
};

/// Dense matrix of rational functions, row-major.
class RMat {
 public:
  RMat() : rows_(0), cols_(0) {}
  RMat(int rows, int cols) : rows_(rows), cols_(cols), e_(size_t(rows) * size_t(cols)) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("negative matrix dimension");
  }

  static RMat identity(int n) {
    RMat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = Rat::one();
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Rat& at(int i, int j) { return e_[idx(i, j)]; }
  const Rat& at(int i, int j) const { return e_[idx(i, j)]; }

  friend bool operator==(const RMat& a, const RMat& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.e_ == b.e_;
  }

  friend RMat operator*(const RMat& a, const RMat& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product dimension mismatch");
    RMat r(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i)
      for (int j = 0; j < b.cols_; ++j) {
        Rat acc;
        for (int k = 0; k < a.cols_; ++k) acc += a.at(i, k) * b.at(k, j);
        r.at(i, j) = acc;
      }
    return r;
  }
  friend RMat operator+(const RMat& a, const RMat& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
      throw std::invalid_argument("matrix sum dimension mismatch");
    RMat r(a.rows_, a.cols_);
    for (size_t k = 0; k < a.e_.size(); ++k) r.e_[k] = a.e_[k] + b.e_[k];
    return r;
  }
  friend RMat operator-(const RMat& a, const RMat& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
      throw std::invalid_argument("matrix difference dimension mismatch");
    RMat r(a.rows_, a.cols_);
    for (size_t k = 0; k < a.e_.size(); ++k) r.e_[k] = a.e_[k] - b.e_[k];
    return r;
  }

  static RMat hstack(const RMat& a, const RMat& b) {
    if (a.rows_ != b.rows_) throw std::invalid_argument("hstack row mismatch");
    RMat r(a.rows_, a.cols_ + b.cols_);
    for (int i = 0; i < a.rows_; ++i) {
      for (int j = 0; j < a.cols_; ++j) r.at(i, j) = a.at(i, j);
      for (int j = 0; j < b.cols_; ++j) r.at(i, a.cols_ + j) = b.at(i, j);
    }
    return r;
  }

  RMat select(const std::vector<int>& row_ids, const std::vector<int>& col_ids) const {
    RMat r(static_cast<int>(row_ids.size()), static_cast<int>(col_ids.size()));
    for (size_t i = 0; i < row_ids.size(); ++i)
      for (size_t j = 0; j < col_ids.size(); ++j) r.at(int(i), int(j)) = at(row_ids[i], col_ids[j]);
    return r;
  }

  bool all_proper() const {
    for (const auto& e : e_)
      if (!e.is_proper()) return false;
    return true;
  }

  Eigen::MatrixXcd evaluate(const std::complex<double>& z) const {
    Eigen::MatrixXcd m(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) m(i, j) = at(i, j).evaluate(z);
    return m;
  }

  bool near_pole(const std::complex<double>& z) const {
    for (const auto& e : e_)
      if (e.near_pole(z)) return true;
    return false;
  }

  /// Entrywise feedthrough; throws ImproperError on any improper entry.
  Eigen::MatrixXd feedthrough() const {
    Eigen::MatrixXd m(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j)
        m(i, j) = at(i, j).feedthrough().convert_to<double>();
    return m;
  }

  /// Exact determinant via fraction-free (Bareiss) elimination on the
  /// denominator-cleared polynomial matrix.
  Rat det() const {
    require_square();
    if (rows_ == 0) return Rat::one();
    auto [N, rowden] = cleared();
    Poly detN = bareiss_det(N, rows_);
    Rat result(detN, Poly::one());
    for (const Poly& d : rowden) result = result / Rat(d, Poly::one());
    return result;
  }

  /// Exact inverse via fraction-free Gauss-Jordan (Montante) elimination.
  /// Throws SingularMatrix when the determinant vanishes identically.
  RMat invert() const {
    require_square();
    const int n = rows_;
    if (n == 0) return *this;
    auto [N, rowden] = cleared();
    // Augment with the polynomial identity.
    std::vector<Poly> A(size_t(n) * size_t(2 * n));
    auto a = [&](int i, int j) -> Poly& { return A[size_t(i) * size_t(2 * n) + size_t(j)]; };
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = N[size_t(i) * size_t(n) + size_t(j)];
      a(i, n + i) = Poly::one();
    }
    Poly prev = Poly::one();
    for (int k = 0; k < n; ++k) {
      if (a(k, k).is_zero()) {
        int r = k + 1;
        while (r < n && a(r, k).is_zero()) ++r;
        if (r == n) throw SingularMatrix();
        for (int j = 0; j < 2 * n; ++j) std::swap(a(k, j), a(r, j));
      }
      const Poly pivot = a(k, k);
      for (int i = 0; i < n; ++i) {
        if (i == k) continue;
        const Poly lead = a(i, k);
        for (int j = 0; j < 2 * n; ++j) {
          if (j == k) continue;
          a(i, j) = Poly::divide_exact(pivot * a(i, j) - lead * a(k, j), prev);
        }
        a(i, k) = Poly();
      }
      prev = pivot;
    }
    const Poly det = a(n - 1, n - 1);  // all left-block diagonal entries equal det
    if (det.is_zero()) throw SingularMatrix();
    RMat inv(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        inv.at(i, j) = Rat(a(i, n + j) * rowden[size_t(j)], det);
    return inv;
  }

 private:
  int rows_, cols_;
  std::vector<Rat> e_;

  size_t idx(int i, int j) const {
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_) throw std::out_of_range("RMat index");
    return size_t(i) * size_t(cols_) + size_t(j);
  }

  void require_square() const {
    if (rows_ != cols_) throw std::invalid_argument("operation requires a square matrix");
  }

  // Clears denominators row by row: M = diag(1/d_i) * N with N polynomial.
  std::pair<std::vector<Poly>, std::vector<Poly>> cleared() const {
    std::vector<Poly> N(e_.size());
    std::vector<Poly> rowden(static_cast<size_t>(rows_));
    for (int i = 0; i < rows_; ++i) {
      Poly d = Poly::one();
      for (int j = 0; j < cols_; ++j) d = lcm(d, at(i, j).den());
      rowden[size_t(i)] = d;
      for (int j = 0; j < cols_; ++j)
        N[size_t(i) * size_t(cols_) + size_t(j)] =
            at(i, j).num() * Poly::divide_exact(d, at(i, j).den());
    }
    return {N, rowden};
  }

  static Poly bareiss_det(std::vector<Poly>& A, int n) {
    auto a = [&](int i, int j) -> Poly& { return A[size_t(i) * size_t(n) + size_t(j)]; };
    Poly prev = Poly::one();
    int sign = 1;
    for (int k = 0; k + 1 < n; ++k) {
      if (a(k, k).is_zero()) {
        int r = k + 1;
        while (r < n && a(r, k).is_zero()) ++r;
        if (r == n) return Poly();
        for (int j = 0; j < n; ++j) std::swap(a(k, j), a(r, j));
        sign = -sign;
      }
      for (int i = k + 1; i < n; ++i) {
        for (int j = k + 1; j < n; ++j)
          a(i, j) = Poly::divide_exact(a(k, k) * a(i, j) - a(i, k) * a(k, j), prev);
        a(i, k) = Poly();
      }
      prev = a(k, k);
    }
    return sign > 0 ? a(n - 1, n - 1) : -a(n - 1, n - 1);
  }
};

struct RankInfo {
  int rank = 0;
  // Singular values from the trial that attained the maximum rank.
  std::vector<double> singular_values;
};

inline constexpr double kRankTol = 1e-9;
inline constexpr double kEvalRadius = 1.0 + 1e-3;

/// Numerical rank of a rational matrix: max over `trials` evaluations at
/// random points on a circle of radius slightly above 1, SVD with relative
/// threshold tol * sigma_max. Points landing on poles are resampled.
inline RankInfo normal_rank_info(const RMat& m, int trials = 8, uint64_t seed = 1,
                                 double tol = kRankTol) {
  if (trials < 1) throw std::invalid_argument("normal_rank requires trials >= 1");
  RankInfo best;
  if (m.rows() == 0 || m.cols() == 0) return best;
  Rng rng(seed);
  int budget = trials * 32;
  for (int t = 0; t < trials; ++t) {
    std::complex<double> z;
    do {
      if (budget-- <= 0) throw PoleSamplingExhausted();
      double theta = 2.0 * M_PI * rng.uniform01();
      z = std::polar(kEvalRadius, theta);
    } while (m.near_pole(z));
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m.evaluate(z));
    const auto& sv = svd.singularValues();
    int rank = 0;
    if (sv.size() > 0 && sv(0) > 0.0) {
      for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol * sv(0)) ++rank;
    }
    if (rank > best.rank || best.singular_values.empty()) {
      best.rank = rank;
      best.singular_values.assign(sv.data(), sv.data() + sv.size());
    }
  }
  return best;
}

inline int normal_rank(const RMat& m, int trials = 8, uint64_t seed = 1, double tol = kRankTol) {
  return normal_rank_info(m, trials, seed, tol).rank;
}

}  // namespace netident
