#pragma once
// Seeded, parallel Monte Carlo estimation: outage probability and rate,
// SIC rate allocation (identity and optimized order), diversity slope, and
// generalized-degrees-of-freedom slope.
//
// Every trial is an independent work item keyed by (master seed, trial
// index); results land in per-trial slots and are reduced sequentially, so
// output is byte-identical for any worker count (IFMIMO_THREADS caps the
// pool). All receivers under comparison see the same sampled channels.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "ifmimo/channel.hpp"
#include "ifmimo/errors.hpp"
#include "ifmimo/lattice.hpp"
#include "ifmimo/rates.hpp"

namespace ifmimo {

enum class Receiver {
  decorr,
  mmse,
  mmse_reduced,
  vblast1,
  vblast2,
  vblast3,
  vblast4,
  if_opt,
  if_exact,
  if_unimodular,
  joint,
};

inline const char* receiver_name(Receiver r) {
  switch (r) {
    case Receiver::decorr: return "decorr";
    case Receiver::mmse: return "mmse";
    case Receiver::mmse_reduced: return "mmse-reduced";
    case Receiver::vblast1: return "vblast1";
    case Receiver::vblast2: return "vblast2";
    case Receiver::vblast3: return "vblast3";
    case Receiver::vblast4: return "vblast4";
    case Receiver::if_opt: return "if";
    case Receiver::if_exact: return "if-exact";
    case Receiver::if_unimodular: return "if-unimodular";
    case Receiver::joint: return "joint";
  }
  return "?";
}

inline Receiver parse_receiver(const std::string& s) {
  for (Receiver r : {Receiver::decorr, Receiver::mmse, Receiver::mmse_reduced,
                     Receiver::vblast1, Receiver::vblast2, Receiver::vblast3,
                     Receiver::vblast4, Receiver::if_opt, Receiver::if_exact,
                     Receiver::if_unimodular, Receiver::joint})
    if (s == receiver_name(r)) return r;
  throw UsageError("unknown receiver: " + s);
}

struct OutageConfig {
  ChannelSpec channel;
  std::vector<Receiver> receivers;
  std::vector<double> snr_db;
  long trials = 10000;
  std::optional<double> target_rate;  // bits per channel use
  std::optional<double> percentile;   // in (0, 1]
  std::uint64_t seed = 1;
};

struct Allocation {
  std::vector<double> rates;  // nonnegative, summing to the target

  double sum() const {
    double s = 0.0;
    for (double r : rates) s += r;
    return s;
  }
};

// Least-squares line fit through (x, y) with the slope's standard error.
struct SlopeEstimate {
  std::vector<double> x;
  std::vector<double> y;
  double slope = 0.0;
  double stderr_ = 0.0;
};

namespace detail {

inline int worker_count(long jobs) {
  int w = static_cast<int>(std::thread::hardware_concurrency());
  if (w < 1) w = 1;
  if (const char* env = std::getenv("IFMIMO_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) w = std::min(w, cap);
  }
  return static_cast<int>(std::min<long>(w, std::max<long>(jobs, 1)));
}

inline void parallel_for(long n, const std::function<void(long)>& fn) {
  const int workers = worker_count(n);
  if (workers <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      long i;
      while ((i = next.fetch_add(1)) < n) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline SlopeEstimate fit_line(const std::vector<double>& x,
                              const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  if (n < 3) throw DegenerateFit("slope fit needs at least 3 grid points");
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  double ss_res = 0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - my - slope * (x[i] - mx);
    ss_res += r * r;
  }
  SlopeEstimate out{x, y, slope, std::sqrt(ss_res / (n - 2) / sxx)};
  if (!std::isfinite(out.slope)) throw DegenerateFit("slope fit is not finite");
  return out;
}

}  // namespace detail

// Total achievable rate of one receiver on one channel realization. The
// decorrelator, MMSE, and integer-forcing entries are all evaluated through
// the same effective-noise quadratic form, so their rates are exactly
// ordered trial by trial.
inline double receiver_total_rate(Receiver r, const Mat& h, SnrPoint p) {
  const int streams = static_cast<int>(h.cols());
  switch (r) {
    case Receiver::decorr: {
      const SvdResult s = svd(h);
      if (s.rank() < streams) return 0.0;
      double worst = 0.0;
      for (int m = 0; m < streams; ++m) {
        double noise = 0.0;
        for (Eigen::Index i = 0; i < s.sigma.size(); ++i) {
          const double proj = s.v(m, i);
          noise += proj * proj / (s.sigma(i) * s.sigma(i));
        }
        worst = std::max(worst, noise);
      }
      return streams * 0.5 * log2_clamped(p.snr / worst);
    }
    case Receiver::mmse: {
      const Mat g = effective_gram(h, p);
      return streams * 0.5 * log2_clamped(1.0 / g.diagonal().maxCoeff());
    }
    case Receiver::vblast1:
      return sic_rate(h, DecodingOrder::identity(streams), p).total;
    case Receiver::vblast2:
      return vblast2_rate(h, p).first.total;
    case Receiver::if_opt: {
      const SearchResult res = select_min_max(make_search_problem(h, nullptr, p));
      return streams * 0.5 * log2_clamped(1.0 / res.minmax);
    }
    case Receiver::if_exact: {
      const SearchResult res = select_min_max(make_search_problem(h, nullptr, p));
      return exact_if_rate(h, res.coeffs, p).total;
    }
    case Receiver::if_unimodular: {
      const SearchResult res = lll_unimodular(h, p);
      return streams * 0.5 * log2_clamped(1.0 / res.minmax);
    }
    case Receiver::joint:
      return joint_ml_rate(h, p).total;
    case Receiver::vblast3:
    case Receiver::vblast4:
    case Receiver::mmse_reduced:
      throw Error("receiver needs a dedicated evaluation path");
  }
  return 0.0;
}

// Per-trial totals for one receiver at one SNR point; trial t sees the
// channel drawn from (seed, t).
inline std::vector<double> trial_totals(const OutageConfig& cfg, Receiver r,
                                        double snr_db) {
  const SnrPoint p = SnrPoint::from_db(snr_db);
  std::vector<double> totals(cfg.trials);
  detail::parallel_for(cfg.trials, [&](long t) {
    const Mat h = trial_channel(cfg.channel, TrialSeed{cfg.seed, static_cast<std::uint64_t>(t)});
    totals[t] = receiver_total_rate(r, h, p);
  });
  return totals;
}

// Per-trial per-stream SIC rates; identity decoding order, or the
// worst-stream-maximizing order resolved per trial (rates indexed by decode
// position in that case).
inline std::vector<std::vector<double>> trial_stream_rates(
    const OutageConfig& cfg, double snr_db, bool optimize_order) {
  const SnrPoint p = SnrPoint::from_db(snr_db);
  std::vector<std::vector<double>> rates(cfg.trials);
  detail::parallel_for(cfg.trials, [&](long t) {
    const Mat h = trial_channel(cfg.channel, TrialSeed{cfg.seed, static_cast<std::uint64_t>(t)});
    const int streams = static_cast<int>(h.cols());
    if (!optimize_order) {
      rates[t] = sic_rate(h, DecodingOrder::identity(streams), p).per_stream;
    } else {
      auto [report, order] = vblast2_rate(h, p);
      std::vector<double> by_position(streams);
      for (int m = 0; m < streams; ++m)
        by_position[m] = report.per_stream[order.perm[m]];
      rates[t] = std::move(by_position);
    }
  });
  return rates;
}

// Fraction of trials whose total achievable rate falls below the target.
inline std::vector<double> outage_probability(const OutageConfig& cfg,
                                              Receiver r, double target_rate) {
  if (cfg.trials < 1) throw Error("outage requires trials >= 1");
  std::vector<double> out;
  out.reserve(cfg.snr_db.size());
  for (double snr_db : cfg.snr_db) {
    const auto totals = trial_totals(cfg, r, snr_db);
    long bad = 0;
    for (double v : totals)
      if (v < target_rate) ++bad;
    out.push_back(static_cast<double>(bad) / cfg.trials);
  }
  return out;
}

namespace detail {

// Lower order statistic at index ceil(p * trials), 1-indexed.
inline double lower_quantile(std::vector<double> samples, double p) {
  std::sort(samples.begin(), samples.end());
  const long k = static_cast<long>(std::ceil(p * samples.size()));
  return samples[std::max<long>(k, 1) - 1];
}

// Union outage for a fixed per-stream allocation.
inline double union_outage(const std::vector<std::vector<double>>& stream_rates,
                           const std::vector<double>& alloc) {
  long bad = 0;
  for (const auto& row : stream_rates) {
    for (std::size_t m = 0; m < alloc.size(); ++m) {
      if (row[m] < alloc[m]) {
        ++bad;
        break;
      }
    }
  }
  return static_cast<double>(bad) / stream_rates.size();
}

// Allocation search: per-stream quantile initialization (level chosen so the
// quantiles sum to the target), then coordinate descent with grid step
// R/200. The equal split is also evaluated, so the reported outage never
// exceeds the equal-allocation outage. The result is an achieved upper
// bound, not a certified optimum.
inline std::pair<double, Allocation> optimize_allocation(
    const std::vector<std::vector<double>>& stream_rates, double target) {
  const int streams = static_cast<int>(stream_rates.front().size());
  std::vector<std::vector<double>> sorted(streams);
  for (int m = 0; m < streams; ++m) {
    sorted[m].reserve(stream_rates.size());
    for (const auto& row : stream_rates) sorted[m].push_back(row[m]);
    std::sort(sorted[m].begin(), sorted[m].end());
  }
  const long trials = static_cast<long>(stream_rates.size());
  auto quantile_alloc = [&](double q) {
    std::vector<double> a(streams);
    const long k = std::max<long>(static_cast<long>(std::ceil(q * trials)), 1);
    for (int m = 0; m < streams; ++m) a[m] = sorted[m][k - 1];
    return a;
  };
  double lo = 1e-9, hi = 1.0;
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    for (double v : quantile_alloc(mid)) s += v;
    (s < target ? lo : hi) = mid;
  }
  std::vector<double> alloc = quantile_alloc(hi);
  double asum = 0.0;
  for (double v : alloc) asum += v;
  if (asum > 0)
    for (double& v : alloc) v *= target / asum;
  else
    alloc.assign(streams, target / streams);

  std::vector<double> equal(streams, target / streams);
  double best = union_outage(stream_rates, alloc);
  const double equal_out = union_outage(stream_rates, equal);
  if (equal_out < best) {
    best = equal_out;
    alloc = equal;
  }

  const double step = target / 200.0;
  for (int pass = 0; pass < 400; ++pass) {
    bool improved = false;
    for (int i = 0; i < streams; ++i) {
      if (alloc[i] < step - 1e-12) continue;
      for (int j = 0; j < streams; ++j) {
        if (i == j) continue;
        std::vector<double> cand = alloc;
        cand[i] -= step;
        cand[j] += step;
        const double out = union_outage(stream_rates, cand);
        if (out < best) {
          best = out;
          alloc = std::move(cand);
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  return {best, Allocation{std::move(alloc)}};
}

}  // namespace detail

// Largest rate whose empirical outage stays within p: the lower order
// statistic at index ceil(p * trials) of the per-trial rate sample.
inline std::vector<double> outage_rate(const OutageConfig& cfg, Receiver r,
                                       double percentile) {
  if (!(percentile > 0.0 && percentile <= 1.0))
    throw Error("percentile must lie in (0, 1]");
  if (percentile * cfg.trials < 20)
    throw InsufficientTrials("need p * trials >= 20 for a stable quantile");
  std::vector<double> out;
  out.reserve(cfg.snr_db.size());
  for (double snr_db : cfg.snr_db) {
    if (r == Receiver::vblast3 || r == Receiver::vblast4) {
      // Bisection over the target rate against the allocation-optimized
      // union outage.
      const auto stream_rates =
          trial_stream_rates(cfg, snr_db, r == Receiver::vblast4);
      double lo = 0.0, hi = 1.0;
      while (detail::optimize_allocation(stream_rates, hi).first <= percentile &&
             hi < 1e6)
        hi *= 2;
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (detail::optimize_allocation(stream_rates, mid).first <= percentile
             ? lo
             : hi) = mid;
      }
      out.push_back(lo);
    } else {
      out.push_back(detail::lower_quantile(trial_totals(cfg, r, snr_db),
                                           percentile));
    }
  }
  return out;
}

// SIC with a fixed (identity) decoding order and optimized per-stream rate
// allocation: minimizes the empirical union outage over allocations summing
// to the target.
inline std::vector<std::pair<double, Allocation>> vblast3_outage(
    const OutageConfig& cfg, double target_rate) {
  std::vector<std::pair<double, Allocation>> out;
  out.reserve(cfg.snr_db.size());
  for (double snr_db : cfg.snr_db) {
    const auto stream_rates = trial_stream_rates(cfg, snr_db, false);
    out.push_back(detail::optimize_allocation(stream_rates, target_rate));
  }
  return out;
}

struct Vblast4Point {
  double probability = 0.0;
  Allocation allocation;
  DecodingOrder order;  // most frequent per-trial optimal order
};

// SIC with both the decoding order resolved per realization (worst-stream
// maximizing) and optimized rate allocation over decode positions.
inline std::vector<Vblast4Point> vblast4_outage(const OutageConfig& cfg,
                                                double target_rate) {
  const int streams = 2 * cfg.channel.m;
  if (streams > 8) throw DimensionTooLarge("vblast4 supports 2M <= 8");
  std::vector<Vblast4Point> out;
  out.reserve(cfg.snr_db.size());
  for (double snr_db : cfg.snr_db) {
    const SnrPoint p = SnrPoint::from_db(snr_db);
    std::vector<std::vector<double>> by_position(cfg.trials);
    std::vector<std::vector<int>> orders(cfg.trials);
    detail::parallel_for(cfg.trials, [&](long t) {
      const Mat h = trial_channel(cfg.channel,
                                  TrialSeed{cfg.seed, static_cast<std::uint64_t>(t)});
      auto [report, order] = vblast2_rate(h, p);
      std::vector<double> pos(streams);
      for (int m = 0; m < streams; ++m)
        pos[m] = report.per_stream[order.perm[m]];
      by_position[t] = std::move(pos);
      orders[t] = order.perm;
    });
    auto [prob, alloc] = detail::optimize_allocation(by_position, target_rate);
    std::map<std::vector<int>, long> counts;
    for (const auto& o : orders) ++counts[o];
    const auto modal = std::max_element(
        counts.begin(), counts.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    Vblast4Point pt;
    pt.probability = prob;
    pt.allocation = std::move(alloc);
    pt.order.perm = modal->first;
    out.push_back(std::move(pt));
  }
  return out;
}

// Diversity estimate: slope of log10 outage probability against log10 SNR
// (negated), at target rate r_mult * log2(SNR) + base (the configured target
// rate supplies the base so the r = 0 point remains measurable).
inline SlopeEstimate dmt_slope(const OutageConfig& cfg, Receiver r,
                               double multiplexing_gain) {
  if (cfg.snr_db.size() < 3)
    throw DegenerateFit("dmt_slope needs at least 3 SNR points");
  if (cfg.snr_db.back() - cfg.snr_db.front() < 15.0)
    throw Error("dmt_slope needs an SNR grid spanning >= 15 dB");
  const double base = cfg.target_rate.value_or(6.0);
  std::vector<double> xs, ys;
  for (double snr_db : cfg.snr_db) {
    const double snr = std::pow(10.0, snr_db / 10.0);
    const double target = base + multiplexing_gain * std::log2(snr);
    OutageConfig point = cfg;
    point.snr_db = {snr_db};
    const double p = outage_probability(point, r, target)[0];
    if (p <= 0.0)
      throw DegenerateFit("outage estimate is zero; increase trials");
    xs.push_back(std::log10(snr));
    ys.push_back(std::log10(p));
  }
  SlopeEstimate est = detail::fit_line(xs, ys);
  est.slope = -est.slope;  // report diversity as a positive exponent
  return est;
}

// Rate slope against log2 SNR with INR = SNR^alpha on a fixed channel and
// fixed interference directions.
inline SlopeEstimate gdof_slope(const Mat& h, const Mat& j_dirs, double alpha,
                                Receiver r,
                                const std::vector<double>& snr_db_grid) {
  if (snr_db_grid.size() < 3)
    throw DegenerateFit("gdof_slope needs at least 3 SNR points");
  const int streams = static_cast<int>(h.cols());
  const int k2 = static_cast<int>(j_dirs.cols());
  std::vector<double> xs, ys;
  for (double snr_db : snr_db_grid) {
    const SnrPoint p = SnrPoint::with_alpha(snr_db, alpha);
    double rate = 0.0;
    switch (r) {
      case Receiver::if_opt: {
        const SearchResult res = select_min_max(make_search_problem(h, &j_dirs, p));
        rate = streams * 0.5 * log2_clamped(1.0 / res.minmax);
        break;
      }
      case Receiver::mmse: {
        const Mat g = effective_gram(h, &j_dirs, p);
        rate = streams * 0.5 * log2_clamped(1.0 / g.diagonal().maxCoeff());
        break;
      }
      case Receiver::mmse_reduced: {
        // Transmit on the first M - K complex antennas only.
        const int m = streams / 2;
        const int keep = m - k2 / 2;
        if (keep < 1) throw Error("mmse-reduced requires K < M");
        Mat hr(h.rows(), 2 * keep);
        for (int c = 0; c < keep; ++c) {
          hr.col(c) = h.col(c);
          hr.col(keep + c) = h.col(m + c);
        }
        const IMat eye = IMat::Identity(2 * keep, 2 * keep);
        const ProjectionMatrix b = opt_projection_intf(hr, j_dirs, eye, p);
        rate = linear_rate_intf(hr, j_dirs, b, p).total;
        break;
      }
      default:
        throw Error("gdof_slope supports if, mmse, and mmse-reduced");
    }
    xs.push_back(std::log2(p.snr));
    ys.push_back(rate);
  }
  return detail::fit_line(xs, ys);
}

}  // namespace ifmimo
