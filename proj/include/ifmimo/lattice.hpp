#pragma once
// Integer coefficient search: find the full-rank integer matrix whose worst
// row minimizes the effective-noise quadratic form. Sphere enumeration
// (Fincke-Pohst) under a certified radius, greedy independent selection
// attaining the successive minima, a brute-force box-scan oracle, and a
// unimodular (LLL) restricted variant.
//
// Greedy optimality: sort all nonzero lattice vectors by quadratic-form
// value and keep each one that is linearly independent of those kept so
// far. Linear independence is a matroid, so if any full-rank set had a
// smaller max value than the greedy set, exchanging its vectors into the
// greedy run one by one would have displaced the greedy set's worst pick
// earlier — contradiction. The kept values are exactly the successive
// minima, and the worst kept value is the min-max optimum.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ifmimo/errors.hpp"
#include "ifmimo/numeric.hpp"
#include "ifmimo/rates.hpp"

namespace ifmimo {

// Sufficient search ball (squared Euclidean norm) for coefficient vectors:
// anything longer has zero rate.
inline double lemma1_radius(const Mat& h, SnrPoint p) {
  const SvdResult s = svd(h);
  return 1.0 + s.max_singular() * s.max_singular() * p.snr;
}

struct SearchProblem {
  Mat gram;             // symmetric positive definite, 2M x 2M
  double radius2;       // quadratic-form enumeration bound
  double node_budget;   // enumeration size guard

  SearchProblem(Mat g, double r2, double budget = 1e7)
      : gram(std::move(g)), radius2(r2), node_budget(budget) {
    if (gram.rows() != gram.cols()) throw Error("gram must be square");
    Eigen::LLT<Mat> llt(gram);
    if (llt.info() != Eigen::Success)
      throw Error("gram must be positive definite");
    if (!(radius2 >= gram.diagonal().minCoeff()))
      throw Error("radius2 must reach at least one unit vector");
  }

  int dim() const { return static_cast<int>(gram.rows()); }
};

enum class SearchMethod { sphere, brute, unimodular };

struct SearchResult {
  IMat coeffs;                 // rows sorted by ascending quadratic value
  std::vector<double> values;  // a_m^T G a_m, ascending
  double minmax = 0.0;         // values.back()
  SearchMethod method = SearchMethod::sphere;
};

struct SuccessiveMinima {
  std::vector<double> eps;  // nondecreasing square roots of selected values
};

namespace detail {

// Cholesky-style Gram-Schmidt data computed from a Gram matrix alone.
struct GramGS {
  Mat mu;  // unit lower triangular
  Vec b;   // squared Gram-Schmidt norms

  static GramGS from(const Mat& g) {
    const int n = static_cast<int>(g.rows());
    GramGS gs{Mat::Identity(n, n), Vec::Zero(n)};
    for (int i = 0; i < n; ++i) {
      double bi = g(i, i);
      for (int k = 0; k < i; ++k) bi -= gs.mu(i, k) * gs.mu(i, k) * gs.b(k);
      gs.b(i) = bi;
      for (int jj = i + 1; jj < n; ++jj) {
        double x = g(jj, i);
        for (int k = 0; k < i; ++k) x -= gs.mu(jj, k) * gs.mu(i, k) * gs.b(k);
        gs.mu(jj, i) = x / bi;
      }
    }
    return gs;
  }
};

// LLL reduction driven purely by the Gram matrix. Returns unimodular U such
// that U G U^T is the Gram of the reduced basis; row i of U holds the
// integer coefficients of the i-th reduced vector.
inline IMat lll_reduce_gram(Mat& g, double delta = 0.75) {
  const int n = static_cast<int>(g.rows());
  IMat u = IMat::Identity(n, n);
  auto row_op = [&](int dst, int src, std::int64_t q) {
    // vector_dst -= q * vector_src
    u.row(dst) -= q * u.row(src);
    const double qd = static_cast<double>(q);
    const Vec old_src = g.row(src).transpose();
    const double old_dd = g(dst, dst);
    const double old_ds = g(dst, src);
    g.row(dst) -= qd * old_src.transpose();
    g.col(dst) -= qd * old_src;
    g(dst, dst) = old_dd - 2.0 * qd * old_ds + qd * qd * old_src(src);
  };
  auto swap_rows = [&](int i, int j) {
    u.row(i).swap(u.row(j));
    g.row(i).swap(g.row(j));
    g.col(i).swap(g.col(j));
  };

  if (n <= 1) return u;
  GramGS gs = GramGS::from(g);
  int k = 1;
  long iters = 0;
  while (k < n) {
    if (++iters > 10'000'000) throw Error("LLL failed to converge");
    // Size-reduce row k against rows k-1..0, keeping mu(k,.) current.
    for (int jj = k - 1; jj >= 0; --jj) {
      const auto q = static_cast<std::int64_t>(std::llround(gs.mu(k, jj)));
      if (q != 0) {
        row_op(k, jj, q);
        for (int t = 0; t < jj; ++t)
          gs.mu(k, t) -= static_cast<double>(q) * gs.mu(jj, t);
        gs.mu(k, jj) -= static_cast<double>(q);
      }
    }
    const double lhs = gs.b(k);
    const double rhs = (delta - gs.mu(k, k - 1) * gs.mu(k, k - 1)) * gs.b(k - 1);
    if (lhs < rhs) {
      swap_rows(k, k - 1);
      gs = GramGS::from(g);
      k = std::max(1, k - 1);
    } else {
      ++k;
    }
  }
  return u;
}

// Flip sign so the first nonzero coordinate is positive.
inline void canonicalize_sign(IVec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) > 0) return;
    if (v(i) < 0) {
      v = -v;
      return;
    }
  }
}

inline bool lex_less(const IVec& a, const IVec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) != b(i)) return a(i) < b(i);
  }
  return false;
}

struct Candidate {
  IVec vec;
  double value;
};

// Deterministic order: ascending value, lexicographic canonical vector on
// ties.
inline bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.value != b.value) return a.value < b.value;
  return lex_less(a.vec, b.vec);
}

// Depth-first Fincke-Pohst over x^T R^T R x <= c with R upper triangular.
// Emits one representative per +/- pair (the last nonzero coordinate is kept
// positive). Throws RadiusTooLarge when the node count exceeds the budget.
inline void fp_enumerate(const Mat& r, double c, double budget,
                         std::vector<IVec>& out) {
  const int n = static_cast<int>(r.rows());
  IVec x = IVec::Zero(n);
  std::vector<double> partial(n + 1, 0.0);  // cost accumulated above level i
  std::vector<double> center(n, 0.0);
  std::vector<std::int64_t> hi(n);
  double nodes = 0;

  // Iterative DFS over levels n-1 .. 0; level i fixes x(i).
  int level = n - 1;
  bool descending = true;
  while (level < n) {
    if (descending) {
      double s = 0.0;
      for (int jj = level + 1; jj < n; ++jj) s += r(level, jj) * x(jj);
      center[level] = s;
      const double rem = c - partial[level + 1];
      const double root = rem > 0 ? std::sqrt(rem) : 0.0;
      const double d = r(level, level);
      auto l = static_cast<std::int64_t>(std::ceil((-root - s) / d - 1e-12));
      hi[level] = static_cast<std::int64_t>(std::floor((root - s) / d + 1e-12));
      // Keep only the canonical half-space while everything above is zero.
      bool all_zero_above = true;
      for (int jj = level + 1; jj < n; ++jj)
        if (x(jj) != 0) {
          all_zero_above = false;
          break;
        }
      if (all_zero_above) l = std::max<std::int64_t>(l, 0);
      x(level) = l - 1;
      descending = false;
    }
    ++x(level);
    if (x(level) > hi[level]) {  // backtrack
      ++level;
      continue;
    }
    if (++nodes > budget)
      throw RadiusTooLarge("sphere enumeration exceeded node budget");
    const double t = r(level, level) * x(level) + center[level];
    const double cost = partial[level + 1] + t * t;
    if (cost > c) continue;
    partial[level] = cost;
    if (level == 0) {
      if ((x.array() != 0).any()) out.push_back(x);
      continue;
    }
    --level;
    descending = true;
  }
}

inline double ball_volume(int n) {
  return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
}

}  // namespace detail

// All nonzero integer vectors with a^T G a <= radius2, exactly once up to
// global sign (canonical representative: first nonzero coordinate positive),
// ascending by value with lexicographic tie-breaking. The Gram matrix is
// LLL-preconditioned before enumeration.
inline std::vector<detail::Candidate> enumerate_short_vectors(
    const SearchProblem& prob) {
  const int n = prob.dim();
  Mat g = prob.gram;
  const IMat u = detail::lll_reduce_gram(g);  // g is now u * gram * u^T

  // Volume-heuristic size estimate; the hard node cap below is the real guard.
  Eigen::LLT<Mat> llt(g);
  const Mat l = llt.matrixL();
  double log_det_sqrt = 0.0;
  for (int i = 0; i < n; ++i) log_det_sqrt += std::log(l(i, i));
  const double est = detail::ball_volume(n) *
                     std::exp(0.5 * n * std::log(prob.radius2) - log_det_sqrt);
  if (est > prob.node_budget)
    throw RadiusTooLarge("predicted enumeration count exceeds budget");

  const Mat r = l.transpose();
  std::vector<IVec> raw;
  detail::fp_enumerate(r, prob.radius2 * (1.0 + 1e-9), prob.node_budget, raw);

  std::vector<detail::Candidate> out;
  out.reserve(raw.size());
  for (const IVec& y : raw) {
    IVec a = u.transpose() * y;  // back to original coordinates
    detail::canonicalize_sign(a);
    const double val = gram_value(prob.gram, a);
    if (val <= prob.radius2 * (1.0 + 1e-9)) out.push_back({std::move(a), val});
  }
  std::sort(out.begin(), out.end(), detail::candidate_less);
  return out;
}

namespace detail {

// Greedy independent selection from a value-sorted candidate list.
inline SearchResult greedy_select(const std::vector<Candidate>& sorted,
                                  int dim, SearchMethod method) {
  std::vector<const Candidate*> kept;
  IMat stack(dim, dim);
  for (const Candidate& c : sorted) {
    stack.row(static_cast<int>(kept.size())) = c.vec.transpose();
    const int r = integer_rank(
        stack.topRows(static_cast<Eigen::Index>(kept.size()) + 1));
    if (r == static_cast<int>(kept.size()) + 1) {
      kept.push_back(&c);
      if (static_cast<int>(kept.size()) == dim) break;
    }
  }
  if (static_cast<int>(kept.size()) < dim) return SearchResult{};  // not found
  SearchResult res;
  res.coeffs = IMat(dim, dim);
  res.values.resize(dim);
  for (int i = 0; i < dim; ++i) {
    res.coeffs.row(i) = kept[i]->vec.transpose();
    res.values[i] = kept[i]->value;
  }
  res.minmax = res.values.back();
  res.method = method;
  return res;
}

}  // namespace detail

// Construct the search problem for a channel at an operating point: Gram from
// effective_gram, radius from the tighter of the unit-vector bound and the
// LLL basis bound (both certify that 2M independent vectors lie inside).
inline SearchProblem make_search_problem(const Mat& h, const Mat* j,
                                         SnrPoint p, double budget = 1e7) {
  Mat gram = effective_gram(h, j, p);
  Mat reduced = gram;
  const IMat u = detail::lll_reduce_gram(reduced);
  double lll_bound = reduced.diagonal().maxCoeff();
  double diag_bound = gram.diagonal().maxCoeff();
  const double r2 = std::min(lll_bound, diag_bound) * (1.0 + 1e-9);
  return SearchProblem(std::move(gram), r2, budget);
}

// Min-max optimal full-rank integer coefficients: greedy consumption of the
// ascending enumeration keeping exactly-independent vectors realizes the
// successive minima of the quadratic form. Retries once with a doubled node
// budget, and grows the radius if the ball held fewer than 2M independent
// vectors.
inline SearchResult select_min_max(const SearchProblem& prob) {
  SearchProblem cur = prob;
  bool budget_doubled = false;
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<detail::Candidate> cands;
    try {
      cands = enumerate_short_vectors(cur);
    } catch (const RadiusTooLarge&) {
      if (budget_doubled) throw;
      budget_doubled = true;
      cur.node_budget *= 2;
      continue;
    }
    SearchResult res = detail::greedy_select(cands, cur.dim(), SearchMethod::sphere);
    if (!res.values.empty()) return res;
    cur.radius2 *= 2;  // ball too small to contain a full-rank set
  }
  throw RadiusTooLarge("select_min_max could not collect a full-rank set");
}

// Reference oracle: exhaustive box scan, no pruning, same greedy selection.
inline SearchResult brute_force_oracle(const SearchProblem& prob, long box) {
  const int n = prob.dim();
  const double count = std::pow(2.0 * box + 1.0, n);
  if (count > 1e8) throw BoxTooLarge("brute-force box exceeds 1e8 points");
  std::vector<detail::Candidate> cands;
  IVec x = IVec::Constant(n, -box);
  x(n - 1) -= 1;
  while (true) {
    int i = n - 1;
    while (i >= 0 && x(i) == box) {
      x(i) = -box;
      --i;
    }
    if (i < 0) break;
    ++x(i);
    if (!(x.array() != 0).any()) continue;
    // Canonical representative only: first nonzero coordinate positive.
    bool canonical = false;
    for (int k2 = 0; k2 < n; ++k2) {
      if (x(k2) != 0) {
        canonical = x(k2) > 0;
        break;
      }
    }
    if (!canonical) continue;
    cands.push_back({x, gram_value(prob.gram, x)});
  }
  std::sort(cands.begin(), cands.end(), detail::candidate_less);
  SearchResult res = detail::greedy_select(cands, n, SearchMethod::brute);
  if (res.values.empty())
    throw BoxTooLarge("brute-force box contains no full-rank set");
  return res;
}

// Smallest box certain to cover every vector with a^T G a <= radius2.
inline long box_for_radius(const SearchProblem& prob) {
  const Mat inv = prob.gram.llt().solve(Mat::Identity(prob.dim(), prob.dim()));
  double worst = 0.0;
  for (int i = 0; i < prob.dim(); ++i)
    worst = std::max(worst, std::sqrt(prob.radius2 * inv(i, i)));
  return static_cast<long>(std::floor(worst)) + 1;
}

// Coefficient search restricted to unimodular matrices: LLL (delta = 0.75)
// on the effective Gram; the returned rows form a basis change with
// determinant +/-1.
inline SearchResult lll_unimodular(const Mat& h, SnrPoint p) {
  if (h.rows() != h.cols()) throw SingularH("requires a square channel");
  const SvdResult s = svd(h);
  if (s.rank() < h.cols()) throw SingularH("channel matrix is singular");
  Mat gram = effective_gram(h, nullptr, p);
  Mat reduced = gram;
  IMat u = detail::lll_reduce_gram(reduced);
  const int n = static_cast<int>(h.cols());
  std::vector<detail::Candidate> rows(n);
  for (int i = 0; i < n; ++i) {
    IVec a = u.row(i).transpose();
    detail::canonicalize_sign(a);
    rows[i] = {std::move(a), gram_value(gram, u.row(i).transpose())};
  }
  std::sort(rows.begin(), rows.end(), detail::candidate_less);
  SearchResult res;
  res.coeffs = IMat(n, n);
  res.values.resize(n);
  for (int i = 0; i < n; ++i) {
    res.coeffs.row(i) = rows[i].vec.transpose();
    res.values[i] = rows[i].value;
  }
  res.minmax = res.values.back();
  res.method = SearchMethod::unimodular;
  return res;
}

// Square roots of the min-max selected values: the successive minima of the
// quadratic form's lattice.
inline SuccessiveMinima successive_minima(const SearchProblem& prob) {
  const SearchResult res = select_min_max(prob);
  SuccessiveMinima sm;
  sm.eps.reserve(res.values.size());
  for (double v : res.values) sm.eps.push_back(std::sqrt(v));
  return sm;
}

}  // namespace ifmimo
