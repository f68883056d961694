#pragma once
// Achievable-rate formulas for MIMO receiver front-ends: joint ML,
// decorrelator, linear MMSE, MMSE-SIC (V-BLAST orderings), and the
// integer-forcing family, with and without an external interference
// subspace.
//
// Conventions: the channel is the 2N x 2M real-valued decomposition, one
// data stream per real dimension. Per-stream rates are (1/2)log2 terms in
// bits per real channel use; equal-rate totals are 2M * min_m R_m, i.e.
// bits per complex channel use. SNR/INR are linear power ratios. High-SNR
// inverses of the form (1/SNR I + X X^T)^-1 are always evaluated through a
// spectral factorization of X rather than by forming the near-singular sum.

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ifmimo/errors.hpp"
#include "ifmimo/numeric.hpp"

namespace ifmimo {

struct SnrPoint {
  double snr = 1.0;                   // > 0
  double inr = 0.0;                   // >= 0; 0 means no interference
  std::optional<double> alpha;        // when set, inr == snr^alpha

  static SnrPoint from_db(double snr_db, double inr_db = -std::numeric_limits<double>::infinity()) {
    SnrPoint p;
    p.snr = std::pow(10.0, snr_db / 10.0);
    p.inr = std::isinf(inr_db) ? 0.0 : std::pow(10.0, inr_db / 10.0);
    return p;
  }
  static SnrPoint with_alpha(double snr_db, double a) {
    SnrPoint p;
    p.snr = std::pow(10.0, snr_db / 10.0);
    p.inr = std::pow(p.snr, a);
    p.alpha = a;
    return p;
  }
};

enum class Projection {
  identity,
  decorrelator,
  mmse,
  exact_if,
  opt_if,
  intf_mmse,
  intf_opt_if,
};

struct ProjectionMatrix {
  Mat b;  // 2M x 2N
  Projection kind = Projection::identity;
};

struct RateReport {
  std::string receiver;
  std::vector<double> per_stream;  // bits per real channel use
  double total = 0.0;              // bits per channel use
  std::vector<double> noise;       // per-stream effective noise variance
  std::optional<IMat> coeffs;      // equation matrix A when applicable

  double min_stream() const {
    return *std::min_element(per_stream.begin(), per_stream.end());
  }
  double max_noise() const {
    return *std::max_element(noise.begin(), noise.end());
  }
};

struct DecodingOrder {
  std::vector<int> perm;  // permutation of 0..2M-1, decode position -> stream

  static DecodingOrder identity(int n) {
    DecodingOrder d;
    d.perm.resize(n);
    for (int i = 0; i < n; ++i) d.perm[i] = i;
    return d;
  }
  bool valid() const {
    std::vector<bool> seen(perm.size(), false);
    for (int v : perm) {
      if (v < 0 || v >= static_cast<int>(perm.size()) || seen[v]) return false;
      seen[v] = true;
    }
    return true;
  }
};

inline double log2_clamped(double x) {
  // log2^+ : never reports a negative rate.
  return x > 1.0 ? std::log2(x) : 0.0;
}

namespace detail {

inline void check_snr(const SnrPoint& p) {
  if (!(p.snr > 0)) throw Error("SNR must be positive");
  if (p.inr < 0) throw Error("INR must be nonnegative");
}

inline void check_full_rank_coeffs(const IMat& a) {
  if (!is_full_rank(a)) throw SingularA("coefficient matrix is singular");
}

// log det(I_{|S|} + snr * Hs^T Hs) via Cholesky, in bits.
inline double log2_det_capacity(const Mat& hs, double snr) {
  Mat g = Mat::Identity(hs.cols(), hs.cols()) + snr * (hs.transpose() * hs);
  Eigen::LLT<Mat> llt(g);
  double sum = 0.0;
  const Mat l = llt.matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i) sum += std::log2(l(i, i));
  return 2.0 * sum;
}

}  // namespace detail

// Equal-rate joint ML benchmark:
//   min over nonempty S of (M / |S|) * log2 det(I + SNR Hs Hs^T),
// with subsets of the 2M real streams enumerated exhaustively.
inline RateReport joint_ml_rate(const Mat& h, SnrPoint p) {
  detail::check_snr(p);
  if (p.inr != 0) throw Error("joint_ml_rate: interference not supported");
  const int cols = static_cast<int>(h.cols());
  if (cols > 12) throw DimensionTooLarge("joint_ml_rate supports 2M <= 12");
  const double m_half = cols / 2.0;
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << cols); ++mask) {
    const int k = std::popcount(mask);
    Mat hs(h.rows(), k);
    int c = 0;
    for (int j = 0; j < cols; ++j)
      if (mask & (1u << j)) hs.col(c++) = h.col(j);
    const double val = (m_half / k) * detail::log2_det_capacity(hs, p.snr);
    best = std::min(best, val);
  }
  RateReport r;
  r.receiver = "joint";
  r.per_stream.assign(cols, best / cols);
  r.total = best;
  return r;
}

// Decorrelator (pseudoinverse) or linear MMSE front-end.
inline ProjectionMatrix traditional_projection(const Mat& h, Projection kind,
                                               SnrPoint p) {
  detail::check_snr(p);
  const SvdResult s = svd(h);
  if (kind == Projection::decorrelator) {
    if (h.rows() < h.cols() || s.rank() < h.cols())
      throw RankDeficient("decorrelator requires full column rank, N >= M");
    return {pseudoinverse(s, h.rows(), h.cols()), Projection::decorrelator};
  }
  if (kind != Projection::mmse)
    throw Error("traditional_projection: kind must be decorrelator or mmse");
  // H^T (H H^T + I/SNR)^-1 = V diag(s / (s^2 + 1/SNR)) U^T
  Mat b = Mat::Zero(h.cols(), h.rows());
  for (Eigen::Index i = 0; i < s.sigma.size(); ++i) {
    const double si = s.sigma(i);
    b += (si / (si * si + 1.0 / p.snr)) * s.v.col(i) * s.u.col(i).transpose();
  }
  return {b, Projection::mmse};
}

// Per-stream SINR rate of a linear front-end B, worst stream setting the
// equal-rate total. Pass the interference directions j (2N x 2K, possibly
// zero-width) to include the INR ||J^T b||^2 noise term.
inline RateReport linear_rate_intf(const Mat& h, const Mat& j,
                                   const ProjectionMatrix& b, SnrPoint p) {
  detail::check_snr(p);
  if (b.b.cols() != h.rows() || b.b.rows() != h.cols())
    throw Error("linear_rate: projection dimensions do not match channel");
  const int streams = static_cast<int>(h.cols());
  RateReport r;
  r.receiver = "linear";
  r.per_stream.resize(streams);
  r.noise.resize(streams);
  for (int m = 0; m < streams; ++m) {
    const Vec bm = b.b.row(m).transpose();
    const double sig = p.snr * std::pow(bm.dot(h.col(m)), 2);
    double noise = bm.squaredNorm();
    if (j.cols() > 0) noise += p.inr * (j.transpose() * bm).squaredNorm();
    double cross = 0.0;
    for (int i = 0; i < streams; ++i)
      if (i != m) cross += std::pow(bm.dot(h.col(i)), 2);
    r.per_stream[m] = 0.5 * std::log2(1.0 + sig / (noise + p.snr * cross));
    r.noise[m] = noise;
  }
  r.total = streams * r.min_stream();
  return r;
}

inline RateReport linear_rate(const Mat& h, const ProjectionMatrix& b,
                              SnrPoint p) {
  return linear_rate_intf(h, Mat(h.rows(), 0), b, p);
}

// MMSE-SIC per-stream rates for a fixed decoding order; interference from
// already-decoded streams is cancelled. V-BLAST I is the identity order.
// With a nonempty j, the INR term enters both the projection and the SINR.
inline RateReport sic_rate_intf(const Mat& h, const Mat& j,
                                const DecodingOrder& order, SnrPoint p) {
  detail::check_snr(p);
  const int streams = static_cast<int>(h.cols());
  if (!order.valid() || static_cast<int>(order.perm.size()) != streams)
    throw Error("sic_rate: invalid decoding order");
  RateReport r;
  r.receiver = "sic";
  r.per_stream.assign(streams, 0.0);
  r.noise.assign(streams, 0.0);
  Mat base = Mat::Identity(h.rows(), h.rows()) / p.snr;
  if (j.cols() > 0) base += (p.inr / p.snr) * (j * j.transpose());
  for (int m = 0; m < streams; ++m) {
    Mat hs(h.rows(), streams - m);
    for (int i = m; i < streams; ++i) hs.col(i - m) = h.col(order.perm[i]);
    const Mat k = base + hs * hs.transpose();
    const Vec bm = Eigen::LDLT<Mat>(k).solve(h.col(order.perm[m]));
    const double sig = p.snr * std::pow(bm.dot(h.col(order.perm[m])), 2);
    double noise = bm.squaredNorm();
    if (j.cols() > 0) noise += p.inr * (j.transpose() * bm).squaredNorm();
    double cross = 0.0;
    for (int i = m + 1; i < streams; ++i)
      cross += std::pow(bm.dot(h.col(order.perm[i])), 2);
    r.per_stream[order.perm[m]] =
        0.5 * std::log2(1.0 + sig / (noise + p.snr * cross));
    r.noise[order.perm[m]] = noise;
  }
  r.total = streams * r.min_stream();
  return r;
}

inline RateReport sic_rate(const Mat& h, const DecodingOrder& order,
                           SnrPoint p) {
  return sic_rate_intf(h, Mat(h.rows(), 0), order, p);
}

// V-BLAST II: the decoding order maximizing the worst stream, by exhaustive
// search over all (2M)! orders.
inline std::pair<RateReport, DecodingOrder> vblast2_rate(const Mat& h,
                                                         SnrPoint p) {
  const int streams = static_cast<int>(h.cols());
  if (streams > 8) throw DimensionTooLarge("vblast2_rate supports 2M <= 8");
  DecodingOrder order = DecodingOrder::identity(streams);
  DecodingOrder best_order = order;
  RateReport best;
  best.total = -1.0;
  std::vector<int> perm = order.perm;
  do {
    order.perm = perm;
    RateReport r = sic_rate(h, order, p);
    if (r.total > best.total) {
      best = r;
      best_order = order;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  best.receiver = "vblast2";
  return {best, best_order};
}

// Rate at which one integer equation with coefficients a can be decoded from
// an effective channel h_eff with effective noise variance noise_var.
inline double equation_rate(const Vec& h_eff, double noise_var, const IVec& a,
                            SnrPoint p) {
  detail::check_snr(p);
  if (!(noise_var > 0)) throw Error("equation_rate: noise_var must be > 0");
  const double mismatch = (h_eff - a.cast<double>()).squaredNorm();
  return 0.5 * log2_clamped(p.snr / (noise_var + p.snr * mismatch));
}

// Integer-forcing rate for explicit (A, B), with optional interference
// directions: per-stream denominator
//   ||b_m||^2 + INR ||J^T b_m||^2 + SNR ||H^T b_m - a_m||^2.
inline RateReport if_rate_intf(const Mat& h, const Mat& j, const IMat& a,
                               const ProjectionMatrix& b, SnrPoint p) {
  detail::check_snr(p);
  detail::check_full_rank_coeffs(a);
  const int streams = static_cast<int>(h.cols());
  RateReport r;
  r.receiver = "if";
  r.coeffs = a;
  r.per_stream.resize(streams);
  r.noise.resize(streams);
  for (int m = 0; m < streams; ++m) {
    const Vec bm = b.b.row(m).transpose();
    const Vec am = a.row(m).transpose().cast<double>();
    double noise = bm.squaredNorm() + p.snr * (h.transpose() * bm - am).squaredNorm();
    if (j.cols() > 0) noise += p.inr * (j.transpose() * bm).squaredNorm();
    r.per_stream[m] = 0.5 * log2_clamped(p.snr / noise);
    r.noise[m] = noise;
  }
  r.total = streams * r.min_stream();
  return r;
}

inline RateReport if_rate(const Mat& h, const IMat& a,
                          const ProjectionMatrix& b, SnrPoint p) {
  return if_rate_intf(h, Mat(h.rows(), 0), a, b, p);
}

// Exact integer-forcing, B = H^dag A: the effective channel is A itself and
// the per-stream effective noise is ||(H^T)^dag a_m||^2.
inline RateReport exact_if_rate(const Mat& h, const IMat& a, SnrPoint p) {
  detail::check_snr(p);
  detail::check_full_rank_coeffs(a);
  const SvdResult s = svd(h);
  if (h.rows() < h.cols() || s.rank() < h.cols())
    throw RankDeficient("exact integer-forcing requires full column rank");
  const int streams = static_cast<int>(h.cols());
  RateReport r;
  r.receiver = "if-exact";
  r.coeffs = a;
  r.per_stream.resize(streams);
  r.noise.resize(streams);
  for (int m = 0; m < streams; ++m) {
    const Vec am = a.row(m).transpose().cast<double>();
    double noise = 0.0;
    for (Eigen::Index i = 0; i < s.sigma.size(); ++i) {
      const double proj = s.v.col(i).dot(am);
      noise += proj * proj / (s.sigma(i) * s.sigma(i));
    }
    r.per_stream[m] = 0.5 * log2_clamped(p.snr / noise);
    r.noise[m] = noise;
  }
  r.total = streams * r.min_stream();
  return r;
}

// Rate-optimal projection for fixed coefficients, with optional interference:
//   B = A H^T (H H^T + INR/SNR J J^T + I/SNR)^-1,
// evaluated through the spectral factorization of H H^T + INR/SNR J J^T.
inline ProjectionMatrix opt_projection_intf(const Mat& h, const Mat& j,
                                            const IMat& a, SnrPoint p) {
  detail::check_snr(p);
  detail::check_full_rank_coeffs(a);
  Mat s = h * h.transpose();
  if (j.cols() > 0) s += (p.inr / p.snr) * (j * j.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(s);
  const Vec mu = eig.eigenvalues().cwiseMax(0.0);
  Mat inv_k = Mat::Zero(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    inv_k += (1.0 / (mu(i) + 1.0 / p.snr)) * eig.eigenvectors().col(i) *
             eig.eigenvectors().col(i).transpose();
  Mat b = a.cast<double>() * h.transpose() * inv_k;
  return {b, j.cols() > 0 ? Projection::intf_opt_if : Projection::opt_if};
}

inline ProjectionMatrix opt_projection(const Mat& h, const IMat& a,
                                       SnrPoint p) {
  return opt_projection_intf(h, Mat(h.rows(), 0), a, p);
}

// Per-equation rate under the optimal projection, from the SVD quadratic
// form: R = -1/2 log2( a^T V D V^T a ) clamped at zero, with
// D_ii = 1/(SNR s_i^2 + 1) on the column space and 1 elsewhere.
inline double quadratic_form_rate(const SvdResult& s, const IVec& a,
                                  SnrPoint p) {
  detail::check_snr(p);
  const Vec av = a.cast<double>();
  const int dim = static_cast<int>(s.v.rows());
  const double cut = kSingularRelTol * s.max_singular();
  double q = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double proj = s.v.col(i).dot(av);
    const double sig =
        i < static_cast<int>(s.sigma.size()) ? s.sigma(i) : 0.0;
    const double d = sig > cut ? 1.0 / (p.snr * sig * sig + 1.0) : 1.0;
    q += d * proj * proj;
  }
  return 0.5 * log2_clamped(1.0 / q);
}

inline double quadratic_form_rate(const Mat& h, const IVec& a, SnrPoint p) {
  return quadratic_form_rate(svd(h), a, p);
}

// Exact integer-forcing with interference, B = A H^-1: per-stream noise
//  ||(H^-1)^T a_m||^2 + INR ||J^T (H^-1)^T a_m||^2.
inline RateReport exact_if_rate_intf(const Mat& h, const Mat& j, const IMat& a,
                                     SnrPoint p) {
  detail::check_snr(p);
  detail::check_full_rank_coeffs(a);
  if (h.rows() != h.cols()) throw SingularH("requires a square channel");
  Eigen::ColPivHouseholderQR<Mat> qr(h.transpose());
  if (!qr.isInvertible()) throw SingularH("channel matrix is singular");
  const int streams = static_cast<int>(h.cols());
  RateReport r;
  r.receiver = "if-exact";
  r.coeffs = a;
  r.per_stream.resize(streams);
  r.noise.resize(streams);
  for (int m = 0; m < streams; ++m) {
    const Vec am = a.row(m).transpose().cast<double>();
    const Vec w = qr.solve(am);  // (H^T)^-1 a_m
    double noise = w.squaredNorm();
    if (j.cols() > 0) noise += p.inr * (j.transpose() * w).squaredNorm();
    r.per_stream[m] = 0.5 * log2_clamped(p.snr / noise);
    r.noise[m] = noise;
  }
  r.total = streams * r.min_stream();
  return r;
}

// Positive-definite quadratic form whose value at integer a equals the
// optimal-projection effective noise scaled by 1/SNR:
//   G = (I + SNR H^T (I + INR J J^T)^-1 H)^-1,
// so that -1/2 log2(a^T G a) is the per-equation rate under the optimal
// projection, with or without interference. Computed by a spectral
// factorization so small eigenvalues keep full relative precision at high
// SNR. Pass j = nullptr (or a zero-width matrix) for no interference.
inline Mat effective_gram(const Mat& h, const Mat* j, SnrPoint p) {
  detail::check_snr(p);
  const int dim = static_cast<int>(h.cols());
  Mat ph;
  if (j && j->cols() > 0 && p.inr > 0) {
    const Mat& jm = *j;
    Mat cinv_h;
    if (p.inr <= 1e8) {
      Mat c = Mat::Identity(h.rows(), h.rows()) + p.inr * (jm * jm.transpose());
      cinv_h = Eigen::LLT<Mat>(c).solve(h);
    } else {
      // Woodbury form keeps the solve well-conditioned at extreme INR.
      Mat small = jm.transpose() * jm +
                  Mat::Identity(jm.cols(), jm.cols()) / p.inr;
      cinv_h = h - jm * Eigen::LLT<Mat>(small).solve(jm.transpose() * h);
    }
    ph = p.snr * (h.transpose() * cinv_h);
  } else {
    ph = p.snr * (h.transpose() * h);
  }
  ph = 0.5 * (ph + ph.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(ph);
  Mat g = Mat::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const double lam = std::max(eig.eigenvalues()(i), 0.0);
    g += (1.0 / (1.0 + lam)) * eig.eigenvectors().col(i) *
         eig.eigenvectors().col(i).transpose();
  }
  return 0.5 * (g + g.transpose());
}

inline Mat effective_gram(const Mat& h, SnrPoint p) {
  return effective_gram(h, nullptr, p);
}

// a^T G a evaluated the same way everywhere so that equal vectors always
// produce bit-identical values.
inline double gram_value(const Mat& g, const IVec& a) {
  double q = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index k = 0; k < g.cols(); ++k)
      row += g(i, k) * static_cast<double>(a(k));
    q += static_cast<double>(a(i)) * row;
  }
  return q;
}

}  // namespace ifmimo
