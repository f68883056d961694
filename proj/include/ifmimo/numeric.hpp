#pragma once
// Matrix foundations: complex-to-real channel decomposition, SVD-backed
// pseudoinverse, and exact integer determinant/rank.
//
// All floating-point factorizations in the library route through svd() so
// that the different rate formulas share one numerical backbone. Integer
// full-rank decisions are always exact (fraction-free elimination over
// arbitrary-precision integers), never thresholded floating determinants.

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ifmimo/errors.hpp"

namespace ifmimo {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using IMat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IVec = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
using BigInt = boost::multiprecision::cpp_int;

// Relative cutoff below which a singular value counts as zero.
inline constexpr double kSingularRelTol = 1e-12;

// [[Re(G), -Im(G)], [Im(G), Re(G)]] of an N x M complex matrix.
inline Mat real_decompose(const CMat& g) {
  const Eigen::Index n = g.rows(), m = g.cols();
  Mat h(2 * n, 2 * m);
  h.topLeftCorner(n, m) = g.real();
  h.topRightCorner(n, m) = -g.imag();
  h.bottomLeftCorner(n, m) = g.imag();
  h.bottomRightCorner(n, m) = g.real();
  return h;
}

// True when h carries the exact block structure of a real decomposition.
inline bool has_decomposition_structure(const Mat& h) {
  if (h.rows() % 2 != 0 || h.cols() % 2 != 0) return false;
  const Eigen::Index n = h.rows() / 2, m = h.cols() / 2;
  return h.topLeftCorner(n, m) == h.bottomRightCorner(n, m) &&
         h.topRightCorner(n, m) == -h.bottomLeftCorner(n, m);
}

struct SvdResult {
  Mat u;      // rows x rows, orthonormal
  Vec sigma;  // min(rows, cols) singular values, descending
  Mat v;      // cols x cols, orthonormal

  double max_singular() const { return sigma.size() ? sigma(0) : 0.0; }
  double min_singular() const {
    return sigma.size() ? sigma(sigma.size() - 1) : 0.0;
  }
  int rank() const {
    const double cut = kSingularRelTol * max_singular();
    int r = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
      if (sigma(i) > cut) ++r;
    return r;
  }
};

inline SvdResult svd(const Mat& h) {
  Eigen::JacobiSVD<Mat> s(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return SvdResult{s.matrixU(), s.singularValues(), s.matrixV()};
}

// Moore-Penrose pseudoinverse with singular values below
// kSingularRelTol * sigma_max treated as zero. Sets *condition_warning when
// sigma_min / sigma_max < kSingularRelTol.
inline Mat pseudoinverse(const SvdResult& s, Eigen::Index rows,
                         Eigen::Index cols, bool* condition_warning = nullptr) {
  const double smax = s.max_singular();
  if (condition_warning)
    *condition_warning = smax == 0.0 || s.min_singular() < kSingularRelTol * smax;
  const double cut = kSingularRelTol * smax;
  Mat pinv = Mat::Zero(cols, rows);
  for (Eigen::Index i = 0; i < s.sigma.size(); ++i) {
    if (s.sigma(i) > cut)
      pinv += (1.0 / s.sigma(i)) * s.v.col(i) * s.u.col(i).transpose();
  }
  return pinv;
}

inline Mat pseudoinverse(const Mat& h, bool* condition_warning = nullptr) {
  return pseudoinverse(svd(h), h.rows(), h.cols(), condition_warning);
}

namespace detail {

// Fraction-free (Bareiss) row elimination. Exact over cpp_int; zero pivot
// columns are skipped so the row count of surviving pivots is the rank over
// the rationals.
inline int fraction_free_eliminate(std::vector<std::vector<BigInt>>& a,
                                   int& sign) {
  const int rows = static_cast<int>(a.size());
  const int cols = rows ? static_cast<int>(a[0].size()) : 0;
  sign = 1;
  BigInt prev = 1;
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int piv = -1;
    for (int i = r; i < rows; ++i)
      if (a[i][c] != 0) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    if (piv != r) {
      std::swap(a[piv], a[r]);
      sign = -sign;
    }
    for (int i = r + 1; i < rows; ++i) {
      for (int j = c + 1; j < cols; ++j)
        a[i][j] = (a[r][c] * a[i][j] - a[i][c] * a[r][j]) / prev;
      a[i][c] = 0;
    }
    prev = a[r][c];
    ++r;
  }
  return r;
}

inline std::vector<std::vector<BigInt>> to_bigint(const IMat& m) {
  std::vector<std::vector<BigInt>> a(m.rows(), std::vector<BigInt>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a[i][j] = BigInt(m(i, j));
  return a;
}

}  // namespace detail

struct IntegerDetRank {
  BigInt det;
  int rank = 0;
  bool full_rank = false;
};

// Exact determinant and rank (over the rationals) of a square integer matrix.
inline IntegerDetRank integer_det_rank(const IMat& m) {
  if (m.rows() != m.cols())
    throw Error("integer_det_rank: matrix must be square");
  const int n = static_cast<int>(m.rows());
  auto a = detail::to_bigint(m);
  int sign = 1;
  const int rank = detail::fraction_free_eliminate(a, sign);
  IntegerDetRank out;
  out.rank = rank;
  out.full_rank = rank == n;
  out.det = out.full_rank && n > 0 ? BigInt(sign) * a[n - 1][n - 1] : BigInt(0);
  if (n == 0) out.det = 1;
  return out;
}

// Exact rank of an arbitrary integer matrix.
inline int integer_rank(const IMat& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  auto a = detail::to_bigint(m);
  int sign = 1;
  return detail::fraction_free_eliminate(a, sign);
}

inline bool is_full_rank(const IMat& m) {
  return m.rows() == m.cols() && integer_rank(m) == m.rows();
}

}  // namespace ifmimo
