#pragma once
// Annulus crossings and the unforced-crossing condition, tortuosity, the tip
// structure modulus and nested bottlenecks.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "slelab/percolation.hpp"
#include "slelab/stats.hpp"

namespace slelab {

// ---------------------------------------------------------------------------
// Annulus crossings

struct CrossingInterval {
  double t0 = 0.0, t1 = 0.0;
  bool unforced = false;
};

struct CrossingReport {
  Annulus annulus;
  int total = 0;
  int unforced = 0;
  std::vector<CrossingInterval> intervals;
};

namespace detail {

// Pieces of segment a->b lying in the closed annulus, as parameter ranges
// with flags for reaching the inner and outer circle.
struct AnnulusPiece {
  double s0, s1;
  bool inner, outer;
};

inline void annulus_pieces(cplx a, cplx b, const Annulus& A, std::vector<AnnulusPiece>& out) {
  out.clear();
  const cplx u = a - A.center, d = b - a;
  const double c0 = std::norm(u), c1 = 2.0 * (u.real() * d.real() + u.imag() * d.imag()), c2 = std::norm(d);
  const double r2 = A.r_inner * A.r_inner, R2 = A.r_outer * A.r_outer;
  const double tol = 1e-12 * R2;
  auto f = [&](double s) { return c0 + s * (c1 + s * c2); };
  // sub-level set {f <= level} intersected with [0, 1]; empty if lo > hi
  auto sublevel = [&](double level, double& lo, double& hi) {
    if (c2 <= 0.0) {
      lo = 0.0;
      hi = c0 <= level ? 1.0 : -1.0;
      return;
    }
    const double disc = c1 * c1 - 4.0 * c2 * (c0 - level);
    if (disc < 0.0) {
      lo = 1.0;
      hi = 0.0;
      return;
    }
    const double sq = std::sqrt(disc);
    lo = std::max(0.0, (-c1 - sq) / (2.0 * c2));
    hi = std::min(1.0, (-c1 + sq) / (2.0 * c2));
  };
  double lo, hi;
  sublevel(R2, lo, hi);
  if (lo > hi) return;
  double ilo, ihi;
  sublevel(r2, ilo, ihi);
  auto push = [&](double s0, double s1) {
    if (s0 > s1) return;
    // extremes of a convex quadratic: max at an end, min at an end or the vertex
    double mn = std::min(f(s0), f(s1));
    if (c2 > 0.0) {
      const double sv = -c1 / (2.0 * c2);
      if (sv > s0 && sv < s1) mn = std::min(mn, f(sv));
    }
    const double mx = std::max(f(s0), f(s1));
    out.push_back({s0, s1, mn <= r2 + tol, mx >= R2 - tol});
  };
  if (ilo > ihi || ihi < lo || ilo > hi || ilo == ihi) {
    push(lo, hi);
  } else {
    push(lo, std::min(hi, ilo));
    push(std::max(lo, ihi), hi);
  }
}

}  // namespace detail

/// Maximal subarcs inside the closed annulus that touch both circles.
inline CrossingReport count_crossings(const Curve& gamma, const Annulus& A) {
  CrossingReport rep;
  rep.annulus = A;
  const std::size_t n = gamma.size();
  if (n == 0) return rep;
  struct Open {
    double t0, t1;
    bool inner, outer;
    std::size_t seg;
    double s1;
  };
  std::vector<detail::AnnulusPiece> pieces;
  bool have = false;
  Open cur{};
  auto close = [&]() {
    if (have && cur.inner && cur.outer) rep.intervals.push_back({cur.t0, cur.t1, false});
    have = false;
  };
  auto time_at = [&](std::size_t k, double s) {
    return k + 1 < n ? gamma.times[k] + s * (gamma.times[k + 1] - gamma.times[k]) : gamma.times[k];
  };
  if (n == 1) {
    detail::annulus_pieces(gamma.points[0], gamma.points[0], A, pieces);
    return rep;  // a single point cannot touch both circles
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    detail::annulus_pieces(gamma.points[k], gamma.points[k + 1], A, pieces);
    if (pieces.empty() || pieces.front().s0 > 0.0) close();
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const auto& p = pieces[i];
      const bool continues = have && i == 0 && p.s0 == 0.0 && cur.seg + 1 == k && cur.s1 == 1.0;
      if (!continues) {
        close();
        cur = {time_at(k, p.s0), time_at(k, p.s1), p.inner, p.outer, k, p.s1};
        have = true;
      } else {
        cur.t1 = time_at(k, p.s1);
        cur.inner = cur.inner || p.inner;
        cur.outer = cur.outer || p.outer;
        cur.seg = k;
        cur.s1 = p.s1;
      }
      if (p.s1 < 1.0) close();
    }
  }
  close();
  rep.total = static_cast<int>(rep.intervals.size());
  return rep;
}

// ---------------------------------------------------------------------------
// Forced and unforced crossings on the lattice

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

/// Interior cells of the domain with the first `tau` steps cut out: edges
/// of the path block adjacency and split irises it ran through are removed.
class SlitLattice {
 public:
  SlitLattice(const AdmissibleDomain& d, const ExplorationState& st, std::size_t tau) : d_(d) {
    removed_.assign(d.size(), 0);
    for (std::size_t k = 0; k < tau && k < st.lefts.size(); ++k) {
      const int l = st.lefts[k].cell, r = st.rights[k].cell;
      if (l == r) {
        removed_[static_cast<std::size_t>(l)] = 1;
      } else {
        blocked_.insert(edge_key(l, r));
      }
    }
  }

  [[nodiscard]] bool usable(int i) const {
    return i >= 0 && d_.cells[static_cast<std::size_t>(i)].kind == CellKind::Interior && !removed_[static_cast<std::size_t>(i)];
  }

  template <class F>
  void neighbours(int i, F&& fn) const {
    for (const auto& h : hex_neighbors(d_.coord(i))) {
      const int j = d_.index(h);
      if (usable(j) && !blocked_.count(edge_key(i, j))) fn(j);
    }
  }

  /// Usable cells that are or neighbour (without crossing the slit) one of `seeds`.
  [[nodiscard]] std::vector<int> attach(std::initializer_list<int> seeds) const {
    std::vector<int> out;
    for (int s : seeds) {
      if (s < 0) continue;
      if (usable(s)) out.push_back(s);
      for (const auto& h : hex_neighbors(d_.coord(s))) {
        const int j = d_.index(h);
        if (usable(j) && !blocked_.count(edge_key(s, j))) out.push_back(j);
      }
    }
    return out;
  }

  [[nodiscard]] const AdmissibleDomain& domain() const { return d_; }

 private:
  const AdmissibleDomain& d_;
  std::vector<std::uint8_t> removed_;
  std::unordered_set<std::uint64_t> blocked_;
};

inline bool in_closed_annulus(cplx p, const Annulus& A) {
  const double r = std::abs(p - A.center);
  return r >= A.r_inner && r <= A.r_outer;
}

/// Component labels (-1 outside) of the annulus cells of the slit lattice.
inline std::vector<int> annulus_components(const SlitLattice& L, const Annulus& A, int* count = nullptr) {
  const auto& d = L.domain();
  std::vector<int> label(d.size(), -1);
  int next = 0;
  std::vector<int> stack;
  for (int i : d.interior) {
    if (label[static_cast<std::size_t>(i)] >= 0 || !L.usable(i) || !in_closed_annulus(d.center(i), A)) continue;
    label[static_cast<std::size_t>(i)] = next;
    stack.push_back(i);
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      L.neighbours(c, [&](int j) {
        if (label[static_cast<std::size_t>(j)] < 0 && in_closed_annulus(d.center(j), A)) {
          label[static_cast<std::size_t>(j)] = next;
          stack.push_back(j);
        }
      });
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

/// Whether deleting the cells labelled `comp` separates `from` from `to`.
inline bool disconnects(const SlitLattice& L, const std::vector<int>& label, int comp, const std::vector<int>& from,
                        const std::vector<int>& to) {
  const auto& d = L.domain();
  std::vector<std::uint8_t> seen(d.size(), 0), goal(d.size(), 0);
  bool any_goal = false;
  for (int t : to)
    if (label[static_cast<std::size_t>(t)] != comp) goal[static_cast<std::size_t>(t)] = any_goal = true;
  if (!any_goal) return true;
  std::vector<int> stack;
  for (int f : from)
    if (label[static_cast<std::size_t>(f)] != comp && !seen[static_cast<std::size_t>(f)]) {
      seen[static_cast<std::size_t>(f)] = 1;
      stack.push_back(f);
    }
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    if (goal[static_cast<std::size_t>(c)]) return false;
    L.neighbours(c, [&](int j) {
      if (!seen[static_cast<std::size_t>(j)] && label[static_cast<std::size_t>(j)] != comp) {
        seen[static_cast<std::size_t>(j)] = 1;
        stack.push_back(j);
      }
    });
  }
  return true;
}

}  // namespace detail

/// Crossings of A by the exploration after step `tau`, each tagged unforced
/// when its component of A minus the explored slit does not separate the
/// tip from the target.
inline CrossingReport classify_unforced(const ExplorationState& st, const AdmissibleDomain& d, const Annulus& A,
                                        std::size_t tau) {
  if (tau > st.steps()) throw Error("classify_unforced: tau beyond the end of the path");
  const std::vector<cplx> tail(st.points.begin() + static_cast<std::ptrdiff_t>(tau), st.points.end());
  CrossingReport rep = count_crossings(Curve::from_points(tail), A);
  for (auto& iv : rep.intervals) {
    iv.t0 += static_cast<double>(tau);
    iv.t1 += static_cast<double>(tau);
  }
  if (rep.total == 0) return rep;

  const detail::SlitLattice L(d, st, tau);
  const auto label = detail::annulus_components(L, A);
  const CellRef tl = tau < st.lefts.size() ? st.lefts[tau] : st.left;
  const CellRef tr = tau < st.rights.size() ? st.rights[tau] : st.right;
  const auto from = L.attach({tl.cell, tr.cell});
  const auto to = L.attach({d.end_left.cell, d.end_right.cell});

  std::unordered_map<int, bool> verdict;
  for (auto& iv : rep.intervals) {
    // component holding most of the cells beside the subarc
    std::unordered_map<int, int> votes;
    const auto k0 = static_cast<std::size_t>(std::floor(iv.t0));
    const auto k1 = std::min(st.lefts.size(), static_cast<std::size_t>(std::ceil(iv.t1)));
    for (std::size_t k = k0; k < k1; ++k)
      for (int c : {st.lefts[k].cell, st.rights[k].cell})
        if (c >= 0 && label[static_cast<std::size_t>(c)] >= 0) ++votes[label[static_cast<std::size_t>(c)]];
    if (votes.empty()) {
      iv.unforced = true;  // nothing to pin it down; count against the bound
    } else {
      const int comp = std::max_element(votes.begin(), votes.end(), [](auto& x, auto& y) {
                         return x.second < y.second || (x.second == y.second && x.first > y.first);
                       })->first;
      auto it = verdict.find(comp);
      if (it == verdict.end()) it = verdict.emplace(comp, !detail::disconnects(L, label, comp, from, to)).first;
      iv.unforced = it->second;
    }
    rep.unforced += iv.unforced;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimate of the unforced-crossing probability

struct KsRow {
  double ratio = 0.0;
  double p_hat = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  std::size_t n = 0;
  std::size_t hits = 0;
};

struct KsDraw {
  std::size_t tau;
  cplx center;
  double r_inner;
};

namespace detail {

// Annulus and stopping time for one trial; independent of the ratio so a
// table over ratios shares its randomness.
inline KsDraw ks_draw(const AdmissibleDomain& d, const ExplorationState& st, double r_max, std::mt19937_64& g) {
  KsDraw k{};
  k.tau = static_cast<std::size_t>(uniform01(g) * static_cast<double>(st.steps()));
  k.center = d.center(d.interior[static_cast<std::size_t>(uniform01(g) * static_cast<double>(d.interior.size()))]);
  const double lo = std::log(2.0 * d.mesh), hi = std::log(r_max);
  k.r_inner = std::exp(lo + uniform01(g) * (hi - lo));
  return k;
}

}  // namespace detail

/// Unforced-crossing frequencies for each ratio R/r; one interface per sample
/// and `n_annuli` random annuli and stopping times on it.
/// Largest inner radius of the annulus draw.
inline double ks_radius(const AdmissibleDomain& d, double r_max_fraction = 0.1) {
  double diam = 0.0;
  for (int i : d.interior) diam = std::max(diam, std::abs(d.center(i) - d.center(d.interior.front())));
  return std::max(r_max_fraction * 2.0 * diam, 4.0 * d.mesh);
}

/// Unforced-crossing hits of sample i for each ratio, over n_annuli draws.
inline std::vector<std::size_t> ks_sample_hits(const AdmissibleDomain& d, ModelParams params,
                                               const std::vector<double>& ratios, std::size_t n_annuli,
                                               std::uint64_t seed, std::size_t i, double r_max) {
  const auto st = explore(d, params, seed, i);
  auto g = make_stream(seed, i, 0x5ca);
  std::vector<std::size_t> hits(ratios.size(), 0);
  for (std::size_t a = 0; a < n_annuli; ++a) {
    const auto k = detail::ks_draw(d, st, r_max, g);
    for (std::size_t j = 0; j < ratios.size(); ++j)
      hits[j] += classify_unforced(st, d, Annulus(k.center, k.r_inner, ratios[j] * k.r_inner), k.tau).unforced > 0;
  }
  return hits;
}

inline std::vector<KsRow> ks_rows(const std::vector<double>& ratios, const std::vector<std::size_t>& hits, std::size_t n) {
  std::vector<KsRow> rows(ratios.size());
  for (std::size_t j = 0; j < ratios.size(); ++j) {
    auto& r = rows[j];
    r.ratio = ratios[j];
    r.hits = hits[j];
    r.n = n;
    r.p_hat = static_cast<double>(r.hits) / static_cast<double>(r.n);
    std::tie(r.ci_lo, r.ci_hi) = wilson_interval(r.hits, r.n);
  }
  return rows;
}

inline std::vector<KsRow> estimate_ks(const AdmissibleDomain& d, ModelParams params, const std::vector<double>& ratios,
                                      std::size_t n_samples, std::size_t n_annuli, std::uint64_t seed,
                                      double r_max_fraction = 0.1) {
  for (double c : ratios)
    if (!(c > 1.0)) throw Error("estimate_ks: ratios must exceed 1");
  if (n_samples == 0 || n_annuli == 0) throw Error("estimate_ks: need samples and annuli");
  const double r_max = ks_radius(d, r_max_fraction);
  std::vector<std::size_t> hits(ratios.size(), 0);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto h = ks_sample_hits(d, params, ratios, n_annuli, seed, i, r_max);
    for (std::size_t j = 0; j < ratios.size(); ++j) hits[j] += h[j];
  }
  return ks_rows(ratios, hits, n_samples * n_annuli);
}

/// Whether the table decreases in the ratio up to overlapping intervals.
inline bool ks_monotone(const std::vector<KsRow>& rows) {
  for (std::size_t j = 0; j + 1 < rows.size(); ++j)
    if (rows[j + 1].ratio > rows[j].ratio && rows[j + 1].ci_lo > rows[j].ci_hi) return false;
  return true;
}

/// Frequency of at least n crossings of A(z0, rho^beta, rho), for each rho and n.
struct MultiCrossingRow {
  double rho = 0.0;
  int n = 0;
  double p_hat = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  std::size_t samples = 0;
};

inline std::vector<MultiCrossingRow> multi_crossing_table(const AdmissibleDomain& d, ModelParams params, cplx z0,
                                                          const std::vector<double>& rhos, double beta, int n_max,
                                                          std::size_t n_samples, std::uint64_t seed) {
  if (!(beta > 1.0)) throw Error("multi_crossing_table: beta must exceed 1");
  std::vector<std::vector<std::size_t>> hits(rhos.size(), std::vector<std::size_t>(static_cast<std::size_t>(n_max) + 1, 0));
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto curve = interface_curve(explore(d, params, seed, i));
    for (std::size_t j = 0; j < rhos.size(); ++j) {
      const int c = count_crossings(curve, Annulus(z0, std::pow(rhos[j], beta), rhos[j])).total;
      for (int m = 1; m <= std::min(c, n_max); ++m) ++hits[j][static_cast<std::size_t>(m)];
    }
  }
  std::vector<MultiCrossingRow> out;
  for (std::size_t j = 0; j < rhos.size(); ++j)
    for (int m = 1; m <= n_max; ++m) {
      MultiCrossingRow r{rhos[j], m, 0, 0, 0, n_samples};
      const auto h = hits[j][static_cast<std::size_t>(m)];
      r.p_hat = static_cast<double>(h) / static_cast<double>(n_samples);
      std::tie(r.ci_lo, r.ci_hi) = wilson_interval(h, n_samples);
      out.push_back(r);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Tortuosity

/// Fewest consecutive pieces of diameter at most l; breakpoints may fall
/// anywhere on the polyline, and greedy extension is optimal.
inline int tortuosity(const Curve& gamma, double l) {
  if (!(l > 0.0)) throw Error("tortuosity: l must be positive");
  const auto& P = gamma.points;
  if (P.empty()) return 0;
  int pieces = 1;
  std::vector<cplx> piece{P[0]};
  cplx q = P[0];
  for (std::size_t k = 1; k < P.size(); ++k) {
    const cplx v = P[k];
    for (;;) {
      double far = 0.0;
      for (const cplx& p : piece) far = std::max(far, std::abs(v - p));
      if (far <= l) {
        piece.push_back(v);
        q = v;
        break;
      }
      // first point along q->v at distance l from some point of the piece
      const cplx dir = v - q;
      const double a = std::norm(dir);
      double exit = 1.0;
      for (const cplx& p : piece) {
        const cplx w = q - p;
        const double b = 2.0 * (w.real() * dir.real() + w.imag() * dir.imag()), c = std::norm(w) - l * l;
        const double disc = std::max(0.0, b * b - 4.0 * a * c);
        const double s = (-b + std::sqrt(disc)) / (2.0 * a);
        if (s < exit) exit = std::max(0.0, s);
      }
      q = q + exit * dir;
      piece.assign(1, q);
      ++pieces;
    }
  }
  return pieces;
}

// ---------------------------------------------------------------------------
// Tip structure modulus

/// Half-plane with target infinity, or a polygon with a target point whose
/// closed rho-neighbourhood stands in for the target.
struct TipDomain {
  bool half_plane = true;
  JordanDomain poly;
  cplx target{};
  double rho = 0.0;

  static TipDomain upper_half_plane() { return {}; }
  static TipDomain jordan(JordanDomain d, cplx target, double rho = 0.1) {
    if (!(rho >= 0.0)) throw Error("TipDomain: rho must be non-negative");
    TipDomain t;
    t.half_plane = false;
    t.poly = std::move(d);
    t.target = target;
    t.rho = rho;
    return t;
  }
};

enum class CrosscutKind { CurveCurve, CurveBoundary, BoundaryBoundary };

struct Crosscut {
  CrosscutKind kind = CrosscutKind::CurveCurve;
  cplx p{}, q{};  // for a half-plane boundary arc, centre and radius in p, q = radius
};

struct TipModulusReport {
  double delta = 0.0;
  double eta_tip = 0.0;
  bool witnessed = false;  // false when eta_tip = delta with no larger arc
  double t_witness = 0.0;  // curve time at which the trapped arc is largest
  double s_witness = 0.0;  // start time of the trapped arc
  Crosscut crosscut;
  std::size_t stop_index = 0;
};

namespace detail {

// Whether segment [a,b] meets the chord [p,q] anywhere except at a chord
// endpoint it shares exactly.
inline bool chord_meets(cplx p, cplx q, cplx a, cplx b) {
  if (!segments_intersect(p, q, a, b)) return false;
  const bool ap = a == p || a == q, bp = b == p || b == q;
  if (ap && bp) return true;
  if (!ap && !bp) return true;
  const cplx s = ap ? a : b, o = ap ? b : a, w = (s == p) ? q : p;
  const cplx e = o - s, c = w - s;
  if (std::abs(cross(e, c)) > 1e-12 * std::abs(e) * std::abs(c)) return false;
  return e.real() * c.real() + e.imag() * c.imag() > 0.0;
}

// Uniform bucket grid over the segments of a polyline.
class SegmentGrid {
 public:
  SegmentGrid(const std::vector<cplx>& pts, std::size_t nseg, double h) : pts_(pts), h_(h) {
    for (std::size_t k = 0; k < nseg; ++k) {
      const cplx a = pts[k], b = pts[k + 1];
      for_cells(std::min(a.real(), b.real()), std::min(a.imag(), b.imag()), std::max(a.real(), b.real()),
                std::max(a.imag(), b.imag()), [&](std::int64_t key) { grid_[key].push_back(static_cast<int>(k)); });
    }
    stamp_.assign(nseg, 0);
  }

  /// Calls fn(k) once for every segment whose bucket overlaps the chord's box.
  template <class F>
  void query(cplx p, cplx q, F&& fn) {
    ++epoch_;
    for_cells(std::min(p.real(), q.real()), std::min(p.imag(), q.imag()), std::max(p.real(), q.real()),
              std::max(p.imag(), q.imag()), [&](std::int64_t key) {
                auto it = grid_.find(key);
                if (it == grid_.end()) return;
                for (int k : it->second)
                  if (stamp_[static_cast<std::size_t>(k)] != epoch_) {
                    stamp_[static_cast<std::size_t>(k)] = epoch_;
                    fn(static_cast<std::size_t>(k));
                  }
              });
  }

 private:
  template <class F>
  void for_cells(double x0, double y0, double x1, double y1, F&& fn) const {
    const auto i0 = static_cast<std::int64_t>(std::floor(x0 / h_)), i1 = static_cast<std::int64_t>(std::floor(x1 / h_));
    const auto j0 = static_cast<std::int64_t>(std::floor(y0 / h_)), j1 = static_cast<std::int64_t>(std::floor(y1 / h_));
    for (auto i = i0; i <= i1; ++i)
      for (auto j = j0; j <= j1; ++j) fn(i * 4000037 + j);
  }

  const std::vector<cplx>& pts_;
  double h_;
  std::unordered_map<std::int64_t, std::vector<int>> grid_;
  std::vector<unsigned> stamp_;
  unsigned epoch_ = 0;
};

struct TipCandidate {
  Crosscut cut;
  std::size_t v;    // trapped arc starts at this index
  std::size_t end;  // last grid index at which the tip is still cut off
};

// Enumerates straight crosscuts of length <= delta, calling fn for each one
// that cuts the tip off from the target for a positive stretch of time.
// want(v, end) may veto a candidate before its separation test.
template <class F, class W>
void tip_candidates(const std::vector<cplx>& P, const TipDomain& dom, double delta, F&& fn, W&& want) {
  const std::size_t n = P.size();
  if (n < 2) return;
  const std::size_t nseg = n - 1;
  const double h = std::max({0.25 * delta, 2.0 * polyline_length(P) / static_cast<double>(nseg), 1e-9});
  SegmentGrid grid(P, nseg, h);

  // first segment index >= from meeting the chord (nseg if none); blocked
  // when a segment before `valid_before` meets it
  auto scan = [&](cplx p, cplx q, std::size_t valid_before, std::size_t from, bool& blocked) {
    std::size_t first = nseg;
    blocked = false;
    grid.query(p, q, [&](std::size_t k) {
      if (blocked || k >= first) return;
      if (!chord_meets(p, q, P[k], P[k + 1])) return;
      if (k < valid_before) blocked = true;
      if (k >= from) first = std::min(first, k);
    });
    return first;
  };

  std::vector<cplx> B = dom.poly.boundary();
  const std::size_t nb = B.size();
  B.push_back(B.empty() ? cplx{} : B.front());
  std::optional<SegmentGrid> bgrid;
  if (!dom.half_plane) bgrid.emplace(B, nb, h);
  auto outside_domain = [&](cplx p, cplx q) {
    if (dom.half_plane) return p.imag() < 0.0 || q.imag() < 0.0;
    if (dom.rho > 0.0 && point_segment_distance(dom.target, p, q) <= dom.rho) return true;
    bool out = false;
    bgrid->query(p, q, [&](std::size_t k) { out = out || segments_cross(p, q, B[k], B[k + 1]); });
    return out;
  };
  // boundary vertices within delta of p
  auto near_boundary = [&](cplx p, auto&& fn2) {
    const cplx r(delta, delta);
    bgrid->query(p - r, p + r, [&](std::size_t k) {
      if (std::abs(B[k] - p) <= delta) fn2(k);
    });
  };
  double s_start = 0.0, s_target = 0.0;
  if (!dom.half_plane) {
    s_start = dom.poly.project(P[0]);
    s_target = dom.poly.project(dom.target);
  }
  // boundary arc from parameter s back to the start avoiding the target
  auto arc_home = [&](double s) {
    const double ccw = dom.poly.ccw_offset(s, s_start), tgt = dom.poly.ccw_offset(s, s_target);
    if (tgt > 0.0 && tgt < ccw) {
      auto a = dom.poly.arc(s_start, s);
      std::reverse(a.begin(), a.end());
      return a;
    }
    return dom.poly.arc(s, s_start);
  };
  auto target_outside = [&](const std::vector<cplx>& loop) {
    return dom.half_plane || !point_in_polygon(dom.target, loop);
  };

  std::vector<cplx> loop;
  // curve-to-curve chords
  for (std::size_t v = 2; v < nseg; ++v) {
    const cplx r(delta, delta);
    std::vector<std::size_t> us;
    grid.query(P[v] - r, P[v] + r, [&](std::size_t k) {
      if (k + 1 < v && std::abs(P[k] - P[v]) <= delta && P[k] != P[v]) us.push_back(k);
    });
    std::sort(us.begin(), us.end());
    for (std::size_t u : us) {
      if (outside_domain(P[v], P[u])) continue;
      bool blocked;
      const std::size_t first = scan(P[v], P[u], v, v, blocked);
      if (blocked || first <= v || !want(v, first)) continue;
      loop.assign(P.begin() + static_cast<std::ptrdiff_t>(u), P.begin() + static_cast<std::ptrdiff_t>(v) + 1);
      if (!point_in_polygon(0.5 * (P[v] + P[v + 1]), loop) || !target_outside(loop)) continue;
      fn(TipCandidate{{CrosscutKind::CurveCurve, P[v], P[u]}, v, first});
    }
  }
  // curve-to-boundary chords
  std::vector<std::pair<cplx, double>> lands;  // landing point, boundary parameter
  for (std::size_t v = 1; v < nseg; ++v) {
    lands.clear();
    if (dom.half_plane) {
      const double x = P[v].real(), y = P[v].imag();
      for (double c : {0.0, 1.0 / std::sqrt(3.0), 1.0, std::sqrt(3.0)}) {
        lands.push_back({{x + c * y, 0.0}, 0.0});
        if (c > 0.0) lands.push_back({{x - c * y, 0.0}, 0.0});
      }
    } else {
      double dist;
      const double s = dom.poly.project(P[v], &dist);
      if (dist <= delta) lands.push_back({dom.poly.point_at(s), s});
      near_boundary(P[v], [&](std::size_t k) { lands.push_back({B[k], dom.poly.project(B[k])}); });
    }
    for (const auto& [q, s] : lands) {
      if (std::abs(q - P[v]) > delta || q == P[v]) continue;
      if (outside_domain(P[v], q)) continue;
      bool blocked;
      const std::size_t first = scan(P[v], q, v, v, blocked);
      if (blocked || first <= v || !want(v, first)) continue;
      loop.assign(P.begin(), P.begin() + static_cast<std::ptrdiff_t>(v) + 1);
      if (dom.half_plane) {
        loop.push_back(q);
        loop.push_back({P[0].real(), 0.0});
      } else {
        const auto home = arc_home(s);
        loop.insert(loop.end(), home.begin(), home.end());
      }
      if (!point_in_polygon(0.5 * (P[v] + P[v + 1]), loop) || !target_outside(loop)) continue;
      fn(TipCandidate{{CrosscutKind::CurveBoundary, P[v], q}, v, first});
    }
  }
  // boundary-to-boundary crosscuts: the whole curve is trapped
  if (dom.half_plane) {
    const double x0 = P[0].real();
    double far = 0.0;
    std::size_t last = nseg + 1;
    for (std::size_t k = 0; k < n; ++k) {
      far = std::max(far, std::abs(P[k] - cplx(x0, 0.0)));
      if (2.0 * far >= delta) break;
      last = k;
    }
    if (last <= nseg && last > 0) {
      const double r = 0.5 * (far + 0.5 * delta);
      fn(TipCandidate{{CrosscutKind::BoundaryBoundary, {x0, 0.0}, {r, 0.0}}, 0, last});
    }
  } else {
    for (std::size_t i = 0; i < nb; ++i)
      near_boundary(B[i], [&](std::size_t j) {
        if (j <= i + 1 || (i == 0 && j + 1 == nb)) return;
        const cplx p = B[i], q = B[j];
        if (outside_domain(p, q)) return;
        const double sp = dom.poly.project(p), sq = dom.poly.project(q);
        // the start and the target must fall on different sides
        const double off_start = dom.poly.ccw_offset(sp, s_start), off_target = dom.poly.ccw_offset(sp, s_target);
        const double off_q = dom.poly.ccw_offset(sp, sq);
        if ((off_start < off_q) == (off_target < off_q)) return;
        // and the curve must really begin inside the cap on the start side
        auto cap = off_start < off_q ? dom.poly.arc(sp, sq) : dom.poly.arc(sq, sp);
        if (!point_in_polygon(0.5 * (P[0] + P[1]), cap)) return;
        bool blocked;
        const std::size_t first = scan(p, q, 0, 0, blocked);
        if (first == 0 || !want(0, first)) return;
        fn(TipCandidate{{CrosscutKind::BoundaryBoundary, p, q}, 0, first});
      });
  }
}

template <class F>
void tip_candidates(const std::vector<cplx>& P, const TipDomain& dom, double delta, F&& fn) {
  tip_candidates(P, dom, delta, std::forward<F>(fn), [](std::size_t, std::size_t) { return true; });
}

// Curve truncated when it first reaches the rho-neighbourhood of the target.
inline std::size_t tip_stop_index(const std::vector<cplx>& P, const TipDomain& dom) {
  if (dom.half_plane || dom.rho <= 0.0) return P.empty() ? 0 : P.size() - 1;
  for (std::size_t k = 0; k < P.size(); ++k)
    if (std::abs(P[k] - dom.target) <= dom.rho) return k;
  return P.empty() ? 0 : P.size() - 1;
}

}  // namespace detail

/// max(delta, largest diameter of curve arc cut off from the target by a
/// crosscut of diameter <= delta), over straight crosscuts.
inline TipModulusReport tip_modulus(const Curve& gamma, const TipDomain& dom, double delta) {
  if (!(delta > 0.0)) throw Error("tip_modulus: delta must be positive");
  TipModulusReport rep;
  rep.delta = delta;
  rep.eta_tip = delta;
  rep.stop_index = detail::tip_stop_index(gamma.points, dom);
  const std::vector<cplx> P(gamma.points.begin(), gamma.points.begin() + static_cast<std::ptrdiff_t>(rep.stop_index) + 1);
  // the trapped arc grows with its end, so only the latest end per start matters
  std::vector<std::ptrdiff_t> best_end(P.size(), -1);
  std::vector<Crosscut> best_cut(P.size());
  detail::tip_candidates(
      P, dom, delta,
      [&](const detail::TipCandidate& c) {
        if (static_cast<std::ptrdiff_t>(c.end) > best_end[c.v]) {
          best_end[c.v] = static_cast<std::ptrdiff_t>(c.end);
          best_cut[c.v] = c.cut;
        }
      },
      [&](std::size_t v, std::size_t end) { return static_cast<std::ptrdiff_t>(end) > best_end[v]; });
  for (std::size_t v = 0; v < P.size(); ++v) {
    if (best_end[v] < 0) continue;
    const double dm = point_set_diameter(P.data() + v, P.data() + best_end[v] + 1);
    if (dm > rep.eta_tip) {
      rep.eta_tip = dm;
      rep.witnessed = true;
      rep.s_witness = gamma.times[v];
      rep.t_witness = gamma.times[static_cast<std::size_t>(best_end[v])];
      rep.crosscut = best_cut[v];
    }
  }
  return rep;
}

struct BottleneckReport {
  bool found = false;
  double s = 0.0, t = 0.0;  // curve times of the trapped arc
  double arc_diameter = 0.0;
  Crosscut crosscut;
};

/// Nested (delta, eta) bottleneck: an arc of diameter > eta ending at the
/// tip that a crosscut of diameter <= delta cuts off from the target.
inline BottleneckReport detect_bottleneck(const Curve& gamma, const TipDomain& dom, double delta, double eta) {
  if (!(delta > 0.0) || !(eta >= delta)) throw Error("detect_bottleneck: need 0 < delta <= eta");
  BottleneckReport rep;
  const std::size_t stop = detail::tip_stop_index(gamma.points, dom);
  const std::vector<cplx> P(gamma.points.begin(), gamma.points.begin() + static_cast<std::ptrdiff_t>(stop) + 1);
  detail::tip_candidates(P, dom, delta, [&](const detail::TipCandidate& c) {
    if (rep.found) return;
    const double dm = point_set_diameter(P.data() + c.v, P.data() + c.end + 1);
    if (dm > eta) {
      rep = {true, gamma.times[c.v], gamma.times[c.end], dm, c.cut};
    }
  });
  return rep;
}

/// Frequency of eta_tip(delta) > eta with delta = c * eta^(1 + eps), and the
/// fitted power of eta.
struct TipTrendRow {
  double eta = 0.0, delta = 0.0;
  double p_hat = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  std::size_t n = 0, hits = 0;
};

struct TipTrend {
  std::vector<TipTrendRow> rows;
  double exponent = 0.0, exponent_se = 0.0;
  [[nodiscard]] bool positive_at_95() const { return exponent - 1.959963984540054 * exponent_se > 0.0; }
};

inline TipTrend tip_trend(const std::vector<Curve>& curves, const TipDomain& dom, const std::vector<double>& etas,
                          double c, double eps) {
  TipTrend out;
  std::vector<double> x, y;
  for (double eta : etas) {
    TipTrendRow r;
    r.eta = eta;
    r.delta = c * std::pow(eta, 1.0 + eps);
    for (const auto& g : curves) {
      r.hits += detect_bottleneck(g, dom, r.delta, eta).found;
      ++r.n;
    }
    r.p_hat = static_cast<double>(r.hits) / static_cast<double>(r.n);
    std::tie(r.ci_lo, r.ci_hi) = wilson_interval(r.hits, r.n);
    if (r.hits > 0) {
      x.push_back(std::log(eta));
      y.push_back(std::log(r.p_hat));
    }
    out.rows.push_back(r);
  }
  if (x.size() >= 3) {
    const auto f = least_squares(x, y);
    out.exponent = f.slope;
    out.exponent_se = f.slope_se;
  }
  return out;
}

}  // namespace slelab
