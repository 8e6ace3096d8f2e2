#pragma once
// Mesoscopic blocks and the key estimates, Skorokhod embedding and the
// Brownian coupling, kappa estimation, rate fits and the curve transfer check.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "slelab/loewner.hpp"
#include "slelab/percolation.hpp"
#include "slelab/regularity.hpp"
#include "slelab/stats.hpp"

namespace slelab {

// ---------------------------------------------------------------------------
// Percolation drivings

/// Lattice disk for chordal interfaces from -1 to 1. The lattice sits two
/// meshes inside the unit circle so the path never leaves the closed disk.
inline AdmissibleDomain percolation_disk(double mesh, const FlowerArrangement& arr = {}) {
  const double r = 1.0 - 2.0 * mesh;
  return build_admissible(JordanDomain::disk(r).with_marked({{-r, 0.0}, {r, 0.0}}), mesh, arr);
}

/// Half-plane driving of a disk interface up to capacity T on a grid dt.
/// Points beyond height 2 sqrt(T) cannot occur before capacity T and are cut
/// before the zipper runs.
inline DrivingFunction interface_driving(const ExplorationState& st, double T, double dt) {
  Curve h = to_halfplane(Curve::from_points(st.points, Ambient::Disk));
  const double ymax = 2.0 * std::sqrt(T) * 1.05;
  std::size_t k = 0;
  while (k < h.size() && h.points[k].imag() <= ymax) ++k;
  if (k < h.size()) ++k;
  h.points.resize(k);
  h.times.resize(k);
  ExtractOptions o;
  o.t_max = T;
  o.dt = dt;
  return extract_driving(h, o);
}

// ---------------------------------------------------------------------------
// Mesoscopic decomposition

struct MesoscopicStop {
  std::vector<std::size_t> indices;  // m_0 = 0 < m_1 < ...
  double time_threshold = 0.0;       // n^{-2s/3}
  double space_threshold = 0.0;      // n^{-s/3}
};

/// Greedy first passage: each block ends at the first grid index where the
/// capacity or the driving has moved by its threshold. A trailing partial
/// block is dropped.
inline MesoscopicStop mesoscopic_decompose(const DrivingFunction& W, double s, double n) {
  if (!(s > 0.0 && s < 1.0)) throw Error("mesoscopic_decompose: s must lie in (0, 1)");
  if (!(n >= 1.0)) throw Error("mesoscopic_decompose: n must be at least 1");
  MesoscopicStop m;
  m.time_threshold = std::pow(n, -2.0 * s / 3.0);
  m.space_threshold = std::pow(n, -s / 3.0);
  m.indices.push_back(0);
  const double tt = m.time_threshold * (1.0 - 1e-12);
  std::size_t k = 0;
  for (std::size_t j = 1; j <= W.steps(); ++j) {
    if (static_cast<double>(j - k) * W.dt >= tt || std::abs(W.values[j] - W.values[k]) >= m.space_threshold) {
      m.indices.push_back(j);
      k = j;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Key estimates

struct KeyBlockRow {
  std::size_t block = 0, count = 0;
  double mean_dw = 0.0, se_dw = 0.0;
  double mean_qv = 0.0, se_qv = 0.0;  // dW^2 - kappa dt
};

struct KeyEstimateReport {
  double n = 0.0, s = 0.0, kappa = 0.0;
  std::size_t samples = 0, blocks = 0;
  double mean_dw = 0.0, se_dw = 0.0;
  double mean_qv = 0.0, se_qv = 0.0;
  std::vector<KeyBlockRow> rows;

  [[nodiscard]] double abs_dw() const { return std::abs(mean_dw); }
  [[nodiscard]] double abs_qv() const { return std::abs(mean_qv); }
};

namespace detail {

// Ratio estimator sum S_i / sum N_i with a per-sample cluster standard error.
inline std::pair<double, double> clustered_mean(const std::vector<double>& sums, const std::vector<double>& counts) {
  double S = 0.0, N = 0.0;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    S += sums[i];
    N += counts[i];
  }
  if (!(N > 0.0)) return {0.0, 0.0};
  const double mu = S / N;
  double v = 0.0;
  for (std::size_t i = 0; i < sums.size(); ++i) v += (sums[i] - mu * counts[i]) * (sums[i] - mu * counts[i]);
  const double m = static_cast<double>(sums.size());
  return {mu, m > 1 ? std::sqrt(v * m / (m - 1)) / N : 0.0};
}

}  // namespace detail

/// Block increments pooled over the ensemble: E[dW] and E[dW^2 - kappa dt].
inline KeyEstimateReport key_estimate_stats(const std::vector<DrivingFunction>& ensemble, double s, double n,
                                            double kappa) {
  if (ensemble.empty()) throw Error("key_estimate_stats: empty ensemble");
  KeyEstimateReport rep;
  rep.n = n;
  rep.s = s;
  rep.kappa = kappa;
  rep.samples = ensemble.size();
  std::vector<double> s_dw, s_qv, cnt;
  std::map<std::size_t, std::vector<std::pair<double, double>>> by_block;
  for (const auto& W : ensemble) {
    const auto m = mesoscopic_decompose(W, s, n);
    double a = 0.0, b = 0.0;
    for (std::size_t k = 1; k < m.indices.size(); ++k) {
      const double dw = W.values[m.indices[k]] - W.values[m.indices[k - 1]];
      const double dt = W.dt * static_cast<double>(m.indices[k] - m.indices[k - 1]);
      const double qv = dw * dw - kappa * dt;
      a += dw;
      b += qv;
      by_block[k - 1].push_back({dw, qv});
    }
    s_dw.push_back(a);
    s_qv.push_back(b);
    cnt.push_back(static_cast<double>(m.indices.size() - 1));
    rep.blocks += m.indices.size() - 1;
  }
  std::tie(rep.mean_dw, rep.se_dw) = detail::clustered_mean(s_dw, cnt);
  std::tie(rep.mean_qv, rep.se_qv) = detail::clustered_mean(s_qv, cnt);
  for (const auto& [k, v] : by_block) {
    std::vector<double> x, y;
    for (const auto& [a, b] : v) {
      x.push_back(a);
      y.push_back(b);
    }
    KeyBlockRow r;
    r.block = k;
    r.count = v.size();
    const auto mx = mean_se(x), my = mean_se(y);
    r.mean_dw = mx.mean;
    r.se_dw = mx.se;
    r.mean_qv = my.mean;
    r.se_qv = my.se;
    rep.rows.push_back(r);
  }
  return rep;
}

/// Each refinement may not exceed its predecessor by more than the combined
/// 95% margin, for both statistics.
inline bool key_estimates_decrease(const std::vector<KeyEstimateReport>& reps, double z = 1.959963984540054) {
  for (std::size_t i = 0; i + 1 < reps.size(); ++i) {
    const auto& a = reps[i];
    const auto& b = reps[i + 1];
    if (b.abs_dw() > a.abs_dw() + z * std::hypot(a.se_dw, b.se_dw)) return false;
    if (b.abs_qv() > a.abs_qv() + z * std::hypot(a.se_qv, b.se_qv)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Skorokhod embedding

/// Finitely supported increment law.
struct DiscreteLaw {
  std::vector<double> x, p;

  DiscreteLaw() = default;
  DiscreteLaw(std::vector<double> xs, std::vector<double> ps) : x(std::move(xs)), p(std::move(ps)) {
    if (x.size() != p.size() || x.empty()) throw Error("DiscreteLaw: support and weights must match");
    double tot = 0.0;
    for (double w : p) {
      if (!(w >= 0.0)) throw Error("DiscreteLaw: negative weight");
      tot += w;
    }
    if (!(tot > 0.0)) throw Error("DiscreteLaw: zero total weight");
    for (double& w : p) w /= tot;
  }

  /// Equal weights on the given values.
  static DiscreteLaw empirical(std::vector<double> xs) {
    std::vector<double> ps(xs.size(), 1.0);
    return {std::move(xs), std::move(ps)};
  }

  [[nodiscard]] double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m += p[i] * x[i];
    return m;
  }
  [[nodiscard]] double second_moment() const {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m += p[i] * x[i] * x[i];
    return m;
  }
  [[nodiscard]] double bound() const {
    double b = 0.0;
    for (double v : x) b = std::max(b, std::abs(v));
    return b;
  }
};

/// Brownian path on a uniform grid of step h starting at time 0.
struct BrownianPath {
  double h = 0.0;
  std::vector<double> values{0.0};

  [[nodiscard]] double horizon() const { return h * static_cast<double>(values.size() - 1); }
  [[nodiscard]] double at(double t) const {
    const double u = std::clamp(t / h, 0.0, static_cast<double>(values.size() - 1));
    const auto k = std::min(static_cast<std::size_t>(u), values.size() - 1);
    const double f = u - static_cast<double>(k);
    return k + 1 < values.size() ? (1.0 - f) * values[k] + f * values[k + 1] : values[k];
  }
};

struct CouplingResult {
  std::vector<double> W;        // driving values at the block ends
  std::vector<double> M;        // embedded martingale, M_0 = 0
  std::vector<double> tau;      // stopping times, tau_0 = 0
  std::vector<std::size_t> tau_index;  // grid index of tau_k in B
  std::vector<double> Y;        // running sum of squared increments
  std::vector<double> capacity; // t_{m_k}
  BrownianPath B;
  double sup_distance = 0.0;    // sup_t |W(t) - B(kappa t)|
  double correction = 0.0;      // recentring removed from each block increment
};

namespace detail {

// One excursion of B from the current value until it leaves (base+u,
// base+v); returns +1 for the upper exit. Steps are Gaussian with a bridge
// test for crossings inside a step, and the exit value is set exactly.
inline int run_to_exit(BrownianPath& B, double u, double v, std::mt19937_64& g) {
  std::normal_distribution<double> nd;
  const double sd = std::sqrt(B.h), base = B.values.back();
  double y = 0.0;
  for (;;) {
    const double y1 = y + sd * nd(g);
    int side = 0;
    if (y1 >= v) {
      side = 1;
    } else if (y1 <= u) {
      side = -1;
    } else {
      const double pu = std::exp(-2.0 * (v - y) * (v - y1) / B.h), pl = std::exp(-2.0 * (y - u) * (y1 - u) / B.h);
      const double r = uniform01(g);
      if (r < pu) side = 1;
      else if (r < pu + pl) side = -1;
    }
    if (side != 0) {
      B.values.push_back(base + (side > 0 ? v : u));
      return side;
    }
    y = y1;
    B.values.push_back(base + y);
  }
}

// Partner for an increment x: the opposite side of the law, size-biased by |.|;
// this is the law of the two-point interval given its exit at x.
inline double partner(const DiscreteLaw& law, double x, std::mt19937_64& g) {
  double tot = 0.0;
  for (std::size_t i = 0; i < law.x.size(); ++i)
    if ((x > 0.0 && law.x[i] < 0.0) || (x < 0.0 && law.x[i] > 0.0)) tot += law.p[i] * std::abs(law.x[i]);
  if (!(tot > 0.0)) throw Error("skorokhod_embed: law has no mass opposite an increment");
  double r = uniform01(g) * tot;
  double last = 0.0;
  for (std::size_t i = 0; i < law.x.size(); ++i)
    if ((x > 0.0 && law.x[i] < 0.0) || (x < 0.0 && law.x[i] > 0.0)) {
      last = law.x[i];
      r -= law.p[i] * std::abs(law.x[i]);
      if (r < 0.0) return law.x[i];
    }
  return last;
}

}  // namespace detail

/// Embeds the given increments into one Brownian path: tau_k is the exit of
/// B from the interval {partner, x_k} around B(tau_{k-1}), conditioned to
/// leave at x_k by rejection, and B(tau_k) is assigned M_k exactly.
inline CouplingResult skorokhod_embed(const std::vector<double>& increments, const DiscreteLaw& law, double bound,
                                      std::mt19937_64& g, double h = 0.0) {
  if (!(bound > 0.0) || !std::isfinite(bound)) throw Error("skorokhod_embed: bound must be positive and finite");
  CouplingResult r;
  r.B.h = h > 0.0 ? h : bound * bound / 400.0;
  r.M.push_back(0.0);
  r.tau.push_back(0.0);
  r.tau_index.push_back(0);
  r.Y.push_back(0.0);
  for (double x : increments) {
    if (!(std::abs(x) <= bound)) throw Error("skorokhod_embed: increment exceeds the bound");
    const double Mk = r.M.back() + x;
    if (x != 0.0) {
      const double q = detail::partner(law, x, g);
      const double lo = std::min(x, q), hi = std::max(x, q);
      for (;;) {
        const std::size_t mark = r.B.values.size();
        const int side = detail::run_to_exit(r.B, lo, hi, g);
        if ((side > 0) == (x > 0.0)) break;
        r.B.values.resize(mark);  // wrong exit: discard the excursion
      }
      r.B.values.back() = Mk;
    }
    r.M.push_back(Mk);
    r.tau.push_back(r.B.horizon());
    r.tau_index.push_back(r.B.values.size() - 1);
    r.Y.push_back(r.Y.back() + x * x);
  }
  return r;
}

/// Martingale generated by the embedding itself: Hall's two-point
/// randomisation of the law, then a free exit. Returns the coupling with M
/// equal to the exit values.
inline CouplingResult skorokhod_generate(const DiscreteLaw& law, std::size_t K, std::mt19937_64& g, double h = 0.0) {
  if (std::abs(law.mean()) > 1e-12 * std::max(law.bound(), 1.0)) throw Error("skorokhod_generate: law must have mean zero");
  // pairs (u, v), u < 0 < v, with weight (v - u) p(u) p(v); the rest is the atom at 0
  std::vector<std::pair<double, double>> pairs;
  std::vector<double> w;
  for (std::size_t i = 0; i < law.x.size(); ++i)
    for (std::size_t j = 0; j < law.x.size(); ++j)
      if (law.x[i] < 0.0 && law.x[j] > 0.0) {
        pairs.push_back({law.x[i], law.x[j]});
        w.push_back((law.x[j] - law.x[i]) * law.p[i] * law.p[j]);
      }
  double half = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < law.x.size(); ++i) half += law.p[i] * std::max(law.x[i], 0.0);
  for (double x : w) tot += x;
  CouplingResult r;
  r.B.h = h > 0.0 ? h : std::pow(std::max(law.bound(), 1e-300), 2) / 400.0;
  r.M.push_back(0.0);
  r.tau.push_back(0.0);
  r.tau_index.push_back(0);
  r.Y.push_back(0.0);
  for (std::size_t k = 0; k < K; ++k) {
    double x = 0.0;
    // for a centred law tot = half (1 - p(0)), so this is the non-zero mass
    if (half > 0.0 && uniform01(g) < tot / half) {
      double pick = uniform01(g) * tot;
      std::size_t idx = 0;
      while (idx + 1 < w.size() && pick >= w[idx]) pick -= w[idx++];
      const auto [lo, hi] = pairs[idx];
      x = detail::run_to_exit(r.B, lo, hi, g) > 0 ? hi : lo;
      r.B.values.back() = r.M.back() + x;
    }
    r.M.push_back(r.M.back() + x);
    r.tau.push_back(r.B.horizon());
    r.tau_index.push_back(r.B.values.size() - 1);
    r.Y.push_back(r.Y.back() + x * x);
  }
  return r;
}

/// Mean stopping increment against E[(dM)^2], pooled over couplings.
struct EmbeddingCheck {
  double mean_dtau = 0.0, se_dtau = 0.0;
  double mean_dm2 = 0.0;
  std::size_t n = 0;
  [[nodiscard]] double z() const { return se_dtau > 0.0 ? (mean_dtau - mean_dm2) / se_dtau : 0.0; }
};

inline EmbeddingCheck embedding_check(const std::vector<CouplingResult>& cs, double expected_dm2) {
  std::vector<double> dt;
  for (const auto& c : cs)
    for (std::size_t k = 1; k < c.tau.size(); ++k) dt.push_back(c.tau[k] - c.tau[k - 1]);
  EmbeddingCheck e;
  const auto m = mean_se(dt);
  e.mean_dtau = m.mean;
  e.se_dtau = m.se;
  e.mean_dm2 = expected_dm2;
  e.n = dt.size();
  return e;
}

// ---------------------------------------------------------------------------
// Brownian modulus of continuity

/// sup over t in [0, T - h] and s in (0, h] of |B(t + s) - B(t)| on the grid.
inline double brownian_modulus(const BrownianPath& B, double T, double h) {
  const auto w = static_cast<std::size_t>(std::llround(h / B.h));
  const auto n = std::min(B.values.size() - 1, static_cast<std::size_t>(std::llround(T / B.h)));
  if (w == 0 || n < w) throw Error("brownian_modulus: path shorter than the window");
  // sliding max and min over the window ahead of each t
  std::vector<std::size_t> qmax, qmin;
  std::size_t head_max = 0, head_min = 0;
  double best = 0.0;
  std::size_t right = 0;
  for (std::size_t t = 0; t + w <= n; ++t) {
    while (right <= t + w) {
      while (qmax.size() > head_max && B.values[qmax.back()] <= B.values[right]) qmax.pop_back();
      qmax.push_back(right);
      while (qmin.size() > head_min && B.values[qmin.back()] >= B.values[right]) qmin.pop_back();
      qmin.push_back(right);
      ++right;
    }
    while (qmax[head_max] < t) ++head_max;
    while (qmin[head_min] < t) ++head_min;
    best = std::max({best, B.values[qmax[head_max]] - B.values[t], B.values[t] - B.values[qmin[head_min]]});
    if (head_max > 1024 && head_max * 2 > qmax.size()) {
      qmax.erase(qmax.begin(), qmax.begin() + static_cast<std::ptrdiff_t>(head_max));
      head_max = 0;
    }
    if (head_min > 1024 && head_min * 2 > qmin.size()) {
      qmin.erase(qmin.begin(), qmin.begin() + static_cast<std::ptrdiff_t>(head_min));
      head_min = 0;
    }
  }
  return best;
}

struct ModulusRow {
  double v = 0.0;
  double frequency = 0.0;  // of modulus <= v sqrt(h)
  double bound = 0.0;      // 1 - (C T / h) exp(-v^2 / (2 + eps))
  std::size_t n = 0;
  [[nodiscard]] bool holds() const { return frequency >= bound; }
};

inline std::vector<ModulusRow> modulus_check(const std::vector<BrownianPath>& paths, double T, double h,
                                             const std::vector<double>& vs, double C = 1.0, double eps = 1.0) {
  std::vector<double> mods;
  for (const auto& p : paths) mods.push_back(brownian_modulus(p, T, h));
  std::vector<ModulusRow> out;
  for (double v : vs) {
    ModulusRow r;
    r.v = v;
    r.n = mods.size();
    std::size_t ok = 0;
    for (double m : mods) ok += m <= v * std::sqrt(h);
    r.frequency = static_cast<double>(ok) / static_cast<double>(mods.size());
    r.bound = 1.0 - C * T / h * std::exp(-v * v / (2.0 + eps));
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kappa

struct KappaRow {
  double t = 0.0, var = 0.0, mean = 0.0, mean_se = 0.0;
};

struct KappaEstimate {
  double kappa = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  double mean_w = 0.0, mean_w_se = 0.0;  // time-averaged driving over the grid
  double excess_kurtosis = 0.0;          // of W at the last grid time
  std::size_t samples = 0;
  std::vector<KappaRow> rows;
  [[nodiscard]] double mean_z() const { return mean_w_se > 0.0 ? mean_w / mean_w_se : 0.0; }
};

namespace detail {

inline double kappa_ratio(const std::vector<std::vector<double>>& vals, const std::vector<double>& ts,
                          const std::vector<std::size_t>& pick) {
  double acc = 0.0;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    double m = 0.0;
    for (std::size_t i : pick) m += vals[i][j];
    m /= static_cast<double>(pick.size());
    double v = 0.0;
    for (std::size_t i : pick) v += (vals[i][j] - m) * (vals[i][j] - m);
    acc += v / static_cast<double>(pick.size() - 1) / ts[j];
  }
  return acc / static_cast<double>(ts.size());
}

}  // namespace detail

/// kappa-hat = mean over grid times of Var W(t) / t; percentile bootstrap
/// over samples. Grid times below 10 dt are dropped.
inline KappaEstimate estimate_kappa(const std::vector<DrivingFunction>& ens, const std::vector<double>& grid,
                                    std::size_t n_boot = 400, std::uint64_t seed = 0) {
  if (ens.size() < 100) throw Error("estimate_kappa: need at least 100 samples");
  std::vector<double> ts;
  for (double t : grid) {
    bool ok = t > 0.0;
    for (const auto& w : ens) ok = ok && t >= 10.0 * w.dt && t <= w.horizon() + 1e-12;
    if (ok) ts.push_back(t);
  }
  if (ts.empty()) throw Error("estimate_kappa: no usable grid time");
  std::vector<std::vector<double>> vals(ens.size(), std::vector<double>(ts.size()));
  std::vector<double> avg(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const auto h = to_halfplane(ens[i]);
    double a = 0.0;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      vals[i][j] = h.at(ts[j]) - h.values[0];
      a += vals[i][j];
    }
    avg[i] = a / static_cast<double>(ts.size());
  }
  KappaEstimate e;
  e.samples = ens.size();
  std::vector<std::size_t> all(ens.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  e.kappa = detail::kappa_ratio(vals, ts, all);
  for (std::size_t j = 0; j < ts.size(); ++j) {
    std::vector<double> col;
    for (const auto& v : vals) col.push_back(v[j]);
    const auto m = mean_se(col);
    e.rows.push_back({ts[j], sample_variance(col), m.mean, m.se});
  }
  const auto ma = mean_se(avg);
  e.mean_w = ma.mean;
  e.mean_w_se = ma.se;
  {
    std::vector<double> col;
    for (const auto& v : vals) col.push_back(v.back());
    const double var = sample_variance(col), mu = mean_se(col).mean;
    double m4 = 0.0;
    for (double x : col) m4 += std::pow(x - mu, 4);
    m4 /= static_cast<double>(col.size());
    e.excess_kurtosis = var > 0.0 ? m4 / (var * var) - 3.0 : 0.0;
  }
  std::vector<double> boot;
  auto g = make_stream(seed, 0, 0xb007);
  std::vector<std::size_t> pick(ens.size());
  for (std::size_t b = 0; b < n_boot; ++b) {
    for (auto& p : pick) p = static_cast<std::size_t>(uniform01(g) * static_cast<double>(ens.size()));
    boot.push_back(detail::kappa_ratio(vals, ts, pick));
  }
  e.ci_lo = n_boot ? quantile(boot, 0.025) : e.kappa;
  e.ci_hi = n_boot ? quantile(boot, 0.975) : e.kappa;
  return e;
}

// ---------------------------------------------------------------------------
// Rate fits

struct RateFit {
  double u = 0.0, se = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double prefactor = 0.0;
  [[nodiscard]] bool positive() const { return ci_lo > 0.0; }
};

/// e ~ A n^{-u} by least squares on logs. With standard errors the CI comes
/// from a parametric bootstrap of the discrepancies; without, from
/// resampled residuals.
inline RateFit rate_fit(const std::vector<double>& ns, const std::vector<double>& es,
                        const std::vector<double>& ses = {}, std::size_t n_boot = 2000, std::uint64_t seed = 0) {
  if (ns.size() != es.size() || ns.size() < 3) throw Error("rate_fit: need at least 3 paired meshes");
  if (!ses.empty() && ses.size() != es.size()) throw Error("rate_fit: standard errors must pair with discrepancies");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(es[i] > 0.0)) throw Error("rate_fit: discrepancies must be positive");
    if (!(ns[i] > 0.0)) throw Error("rate_fit: meshes must be positive");
    x.push_back(std::log(ns[i]));
    y.push_back(std::log(es[i]));
  }
  const auto f = least_squares(x, y);
  RateFit r;
  r.u = -f.slope;
  r.se = f.slope_se;
  r.prefactor = std::exp(f.intercept);
  auto g = make_stream(seed, 0, 0x7a7e);
  std::normal_distribution<double> nd;
  std::vector<double> boot, yb(y.size());
  for (std::size_t b = 0; b < n_boot; ++b) {
    bool ok = true;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!ses.empty()) {
        const double e = es[i] + ses[i] * nd(g);
        ok = ok && e > 0.0;
        yb[i] = ok ? std::log(e) : 0.0;
      } else {
        const std::size_t j = static_cast<std::size_t>(uniform01(g) * static_cast<double>(y.size()));
        yb[i] = f.intercept + f.slope * x[i] + (y[j] - (f.intercept + f.slope * x[j]));
      }
    }
    if (ok) boot.push_back(-least_squares(x, yb).slope);
  }
  if (boot.empty()) {
    r.ci_lo = r.ci_hi = r.u;
  } else {
    r.ci_lo = quantile(boot, 0.025);
    r.ci_hi = quantile(boot, 0.975);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Coupling of extracted drivings with Brownian motion

struct CouplingSummary {
  double n = 0.0, s = 0.0, kappa = 0.0;
  double mean_sup = 0.0, se_sup = 0.0;  // E sup |W_n(t) - B(kappa t)|
  double correction = 0.0;              // pooled mean block increment, removed before embedding
  double bound = 0.0;
  std::size_t blocks = 0;
  std::vector<CouplingResult> couplings;
};

/// Couples each driving with its own Brownian path: block increments are
/// recentred by the pooled ensemble mean, embedded exactly, and the sup
/// distance to B(kappa t) is taken over the blocked horizon.
inline CouplingSummary couple(const std::vector<DrivingFunction>& ens, double s, double n, double kappa,
                              std::uint64_t seed, bool keep = false) {
  if (ens.empty()) throw Error("couple: empty ensemble");
  if (!(kappa > 0.0)) throw Error("couple: kappa must be positive");
  CouplingSummary out;
  out.n = n;
  out.s = s;
  out.kappa = kappa;
  std::vector<MesoscopicStop> stops;
  double sum = 0.0;
  for (const auto& w : ens) {
    stops.push_back(mesoscopic_decompose(w, s, n));
    const auto& m = stops.back().indices;
    for (std::size_t k = 1; k < m.size(); ++k) sum += w.values[m[k]] - w.values[m[k - 1]];
    out.blocks += m.size() - 1;
  }
  out.correction = out.blocks ? sum / static_cast<double>(out.blocks) : 0.0;
  std::vector<std::vector<double>> incs(ens.size());
  std::vector<double> pooled;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const auto& m = stops[i].indices;
    for (std::size_t k = 1; k < m.size(); ++k) {
      incs[i].push_back(ens[i].values[m[k]] - ens[i].values[m[k - 1]] - out.correction);
      pooled.push_back(incs[i].back());
      out.bound = std::max(out.bound, std::abs(incs[i].back()));
    }
  }
  if (pooled.empty() || !(out.bound > 0.0)) throw Error("couple: no complete blocks");
  const auto law = DiscreteLaw::empirical(pooled);
  std::vector<double> sups;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    auto g = make_stream(seed, i, 0xc0b);
    auto c = skorokhod_embed(incs[i], law, out.bound, g);
    const auto& m = stops[i].indices;
    const auto& w = ens[i];
    for (std::size_t k : m) {
      c.W.push_back(w.values[k] - w.values[0]);
      c.capacity.push_back(w.time(k));
    }
    c.correction = out.correction;
    // free continuation so B(kappa t) covers the blocked horizon
    const double need = kappa * w.time(m.back());
    std::normal_distribution<double> nd;
    while (c.B.horizon() < need) c.B.values.push_back(c.B.values.back() + std::sqrt(c.B.h) * nd(g));
    double sup = 0.0;
    for (std::size_t k = 0; k <= m.back(); ++k)
      sup = std::max(sup, std::abs(w.values[k] - w.values[0] - c.B.at(kappa * w.time(k))));
    c.sup_distance = sup;
    sups.push_back(sup);
    if (keep) {
      out.couplings.push_back(std::move(c));
    }
  }
  const auto ms = mean_se(sups);
  out.mean_sup = ms.mean;
  out.se_sup = ms.se;
  return out;
}

// ---------------------------------------------------------------------------
// Curve transfer

struct TransferReport {
  double epsilon = 0.0;        // sup |W1 - W2|
  double d_star = 0.0;         // epsilon^p
  double derivative_c = 0.0;   // fitted c' in sup d|f2'| <= c' d^{1-beta}
  double eta_tip = 0.0;        // of gamma1 at d_star
  double tip_c = 0.0;          // eta_tip / d_star^r
  double curve_distance = 0.0; // sup_t |gamma1(t) - gamma2(t)|
  double rate = 0.0;           // max(eps^{p(1-beta)r}, eps^{(1-rho p)r})
  double implied_c = 0.0;      // curve_distance / rate
};

/// Measures the three hypotheses and the conclusion of the transfer bound on
/// a pair of half-plane Loewner pairs sharing a time grid.
inline TransferReport curve_transfer_check(const LoewnerPair& p1, const LoewnerPair& p2, double beta, double r,
                                           double p, double rho) {
  if (!(rho > 1.0) || !(beta < 1.0) || !(r > 0.0 && r < 1.0) || !(p > 0.0 && p < 1.0 / rho))
    throw Error("curve_transfer_check: need rho > 1, beta < 1, r in (0,1), p in (0, 1/rho)");
  const auto w1 = to_halfplane(p1.driving), w2 = to_halfplane(p2.driving);
  if (w1.steps() != w2.steps() || std::abs(w1.dt - w2.dt) > 1e-15 * w1.dt)
    throw Error("curve_transfer_check: pairs must share the time grid");
  TransferReport rep;
  for (std::size_t k = 0; k < w1.values.size(); ++k) rep.epsilon = std::max(rep.epsilon, std::abs(w1.values[k] - w2.values[k]));
  const std::size_t nc = std::min(p1.curve.size(), p2.curve.size());
  for (std::size_t k = 0; k < nc; ++k)
    rep.curve_distance = std::max(rep.curve_distance, std::abs(p1.curve.points[k] - p2.curve.points[k]));
  if (rep.epsilon == 0.0) return rep;
  rep.d_star = std::pow(rep.epsilon, p);
  if (rep.d_star < 1.0 && beta > 0.0) rep.derivative_c = measure_derivative_growth(w2, beta, rep.d_star, 4).constant;
  rep.eta_tip = tip_modulus(p1.curve, TipDomain::upper_half_plane(), rep.d_star).eta_tip;
  rep.tip_c = rep.eta_tip / std::pow(rep.d_star, r);
  rep.rate = std::max(std::pow(rep.epsilon, p * (1.0 - beta) * r), std::pow(rep.epsilon, (1.0 - rho * p) * r));
  rep.implied_c = rep.curve_distance / rep.rate;
  return rep;
}

}  // namespace slelab
