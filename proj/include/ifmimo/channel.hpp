#pragma once
// Channel construction: fixed benchmark matrices, Rayleigh-fading ensembles,
// and interference subspaces. Sampling is a pure function of
// (spec, master seed, trial index).

#include <json.hpp>
#include <optional>
#include <string>

#include "ifmimo/errors.hpp"
#include "ifmimo/numeric.hpp"
#include "ifmimo/rng.hpp"

namespace ifmimo {

// Interference directions: a 2M x 2K matrix of full column rank. The linear
// interference power is carried by SnrPoint::inr at rate-evaluation time;
// `inr` here only records a configured default.
struct InterferenceSpec {
  Mat j;
  double inr = 0.0;
};

enum class ChannelKind { fixed, rayleigh };

struct ChannelSpec {
  ChannelKind kind = ChannelKind::rayleigh;
  int n = 1;  // complex receive antennas
  int m = 1;  // complex transmit antennas
  int k = 0;  // complex interference dimensions (k < m when present)
  std::optional<CMat> complex_entries;  // fixed channels only
  std::optional<Mat> real_entries;      // fixed channels, already real-valued

  static ChannelSpec rayleigh(int n, int m, int k = 0) {
    ChannelSpec s;
    s.kind = ChannelKind::rayleigh;
    s.n = n;
    s.m = m;
    s.k = k;
    return s;
  }
  static ChannelSpec fixed_real(Mat h) {
    ChannelSpec s;
    s.kind = ChannelKind::fixed;
    s.n = static_cast<int>(h.rows()) / 2;
    s.m = static_cast<int>(h.cols()) / 2;
    s.real_entries = std::move(h);
    return s;
  }
};

// N x M complex matrix with i.i.d. CN(0,1) entries (real/imag parts each
// N(0, 1/2)), returned as its real decomposition.
inline Mat sample_rayleigh(int n, int m, TrialSeed seed) {
  TrialRng rng(seed);
  CMat g(n, m);
  const double s = std::sqrt(0.5);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const double re = s * rng.next_gaussian();
      const double im = s * rng.next_gaussian();
      g(i, j) = std::complex<double>(re, im);
    }
  return real_decompose(g);
}

// K-dimensional complex interference directions for an M-antenna channel,
// drawn i.i.d. CN(0,1); rationally independent with probability one.
inline InterferenceSpec sample_interference_dirs(int m, int k, TrialSeed seed) {
  if (k >= m) throw Error("sample_interference_dirs: requires K < M");
  TrialRng rng(seed);
  // Distinct stream from sample_rayleigh at the same (seed, index).
  rng.next_u64();
  CMat g(m, k);
  const double s = std::sqrt(0.5);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) {
      const double re = s * rng.next_gaussian();
      const double im = s * rng.next_gaussian();
      g(i, j) = std::complex<double>(re, im);
    }
  return InterferenceSpec{real_decompose(g), 0.0};
}

struct FixedChannel {
  Mat h;
  std::optional<InterferenceSpec> interference;
};

// Named benchmark channels. The 2x2 matrices are real-valued channels used
// as-is; `param` carries the scenario parameter (epsilon, M, or L).
//   intro      [[2,1],[1,1]]
//   ex1        [[0.7,1.3],[0.8,1.5]]
//   ex2(eps)   [[1, 1+sqrt(eps)],[0, eps]]
//   ex3(M)     M x M: identity rows, last row [-1,...,-1,2]
//   ex4(eps)   [[1,1],[0,eps]]
//   intf(L)    H = (1/3)[[2,1],[1,2]], J = (1/3)[L+2, 2L+1]^T
inline FixedChannel fixed_channel(const std::string& name,
                                  std::optional<double> param = std::nullopt) {
  if (name == "intro") {
    Mat h(2, 2);
    h << 2, 1, 1, 1;
    return {h, std::nullopt};
  }
  if (name == "ex1") {
    Mat h(2, 2);
    h << 0.7, 1.3, 0.8, 1.5;
    return {h, std::nullopt};
  }
  if (name == "ex2") {
    const double eps = param.value_or(0.01);
    if (!(eps > 0)) throw Error("ex2 requires epsilon > 0");
    Mat h(2, 2);
    h << 1, 1 + std::sqrt(eps), 0, eps;
    return {h, std::nullopt};
  }
  if (name == "ex3") {
    const int m = static_cast<int>(param.value_or(8));
    if (m < 2) throw Error("ex3 requires M >= 2");
    Mat h = Mat::Identity(m, m);
    h.row(m - 1) = -Vec::Ones(m).transpose();
    h(m - 1, m - 1) = 2;
    return {h, std::nullopt};
  }
  if (name == "ex4") {
    const double eps = param.value_or(0.5);
    if (!(eps > 0 && eps < 1)) throw Error("ex4 requires 0 < epsilon < 1");
    Mat h(2, 2);
    h << 1, 1, 0, eps;
    return {h, std::nullopt};
  }
  if (name == "intf") {
    const double l = param.value_or(4);
    Mat h(2, 2);
    h << 2.0 / 3, 1.0 / 3, 1.0 / 3, 2.0 / 3;
    Mat j(2, 1);
    j << (l + 2) / 3, (2 * l + 1) / 3;
    return {h, InterferenceSpec{j, 0.0}};
  }
  throw UnknownScenario("unknown fixed channel: " + name);
}

// Channel realization for one Monte Carlo trial.
inline Mat trial_channel(const ChannelSpec& spec, TrialSeed seed) {
  if (spec.kind == ChannelKind::fixed) {
    if (spec.real_entries) return *spec.real_entries;
    if (spec.complex_entries) return real_decompose(*spec.complex_entries);
    throw Error("fixed channel spec has no entries");
  }
  return sample_rayleigh(spec.n, spec.m, seed);
}

// JSON schema:
//   {"kind":"fixed"|"rayleigh", "n":int, "m":int, "k":int?,
//    "complex_entries":[[{"re":f,"im":f}]]?, "real_entries":[[f]]?}
// Fixed channels carry exactly one of complex_entries/real_entries.
inline ChannelSpec channel_spec_from_json(const nlohmann::json& j) {
  ChannelSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fixed")
    spec.kind = ChannelKind::fixed;
  else if (kind == "rayleigh")
    spec.kind = ChannelKind::rayleigh;
  else
    throw UsageError("channel kind must be \"fixed\" or \"rayleigh\"");
  spec.n = j.at("n").get<int>();
  spec.m = j.at("m").get<int>();
  spec.k = j.value("k", 0);
  if (spec.n < 1 || spec.m < 1) throw UsageError("channel dims must be >= 1");
  if (spec.k < 0 || (spec.k > 0 && spec.k >= spec.m))
    throw UsageError("interference dims require 0 <= k < m");

  const bool has_cx = j.contains("complex_entries");
  const bool has_re = j.contains("real_entries");
  if (spec.kind == ChannelKind::fixed) {
    if (has_cx == has_re)
      throw UsageError(
          "fixed channel needs exactly one of complex_entries/real_entries");
    if (has_cx) {
      const auto& rows = j.at("complex_entries");
      CMat g(spec.n, spec.m);
      if (static_cast<int>(rows.size()) != spec.n)
        throw UsageError("complex_entries row count must equal n");
      for (int r = 0; r < spec.n; ++r) {
        if (static_cast<int>(rows[r].size()) != spec.m)
          throw UsageError("complex_entries column count must equal m");
        for (int c = 0; c < spec.m; ++c)
          g(r, c) = std::complex<double>(rows[r][c].at("re").get<double>(),
                                         rows[r][c].at("im").get<double>());
      }
      spec.complex_entries = g;
    } else {
      const auto& rows = j.at("real_entries");
      const int nr = static_cast<int>(rows.size());
      if (nr == 0) throw UsageError("real_entries must be nonempty");
      const int nc = static_cast<int>(rows[0].size());
      if (nr % 2 != 0 || nc % 2 != 0)
        throw UsageError("real_entries dimensions must be even");
      Mat h(nr, nc);
      for (int r = 0; r < nr; ++r) {
        if (static_cast<int>(rows[r].size()) != nc)
          throw UsageError("real_entries rows must have equal length");
        for (int c = 0; c < nc; ++c) h(r, c) = rows[r][c].get<double>();
      }
      spec.real_entries = h;
      spec.n = nr / 2;
      spec.m = nc / 2;
    }
  } else if (has_cx || has_re) {
    throw UsageError("rayleigh channel must not carry fixed entries");
  }
  return spec;
}

inline nlohmann::json channel_spec_to_json(const ChannelSpec& spec) {
  nlohmann::json j;
  j["kind"] = spec.kind == ChannelKind::fixed ? "fixed" : "rayleigh";
  j["n"] = spec.n;
  j["m"] = spec.m;
  if (spec.k > 0) j["k"] = spec.k;
  if (spec.complex_entries) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < spec.complex_entries->rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < spec.complex_entries->cols(); ++c)
        row.push_back({{"re", (*spec.complex_entries)(r, c).real()},
                       {"im", (*spec.complex_entries)(r, c).imag()}});
      rows.push_back(row);
    }
    j["complex_entries"] = rows;
  }
  if (spec.real_entries) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < spec.real_entries->rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < spec.real_entries->cols(); ++c)
        row.push_back((*spec.real_entries)(r, c));
      rows.push_back(row);
    }
    j["real_entries"] = rows;
  }
  return j;
}

}  // namespace ifmimo
