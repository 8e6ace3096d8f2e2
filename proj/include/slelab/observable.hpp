#pragma once
// Crossing events, the Carleson-Cardy-Smirnov observable, Cardy's formula
// and the boundary BPZ residual.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "slelab/percolation.hpp"
#include "slelab/stats.hpp"

namespace slelab {

// ---------------------------------------------------------------------------
// Continuum Cardy formula

inline double cardy_F(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error("cardy_F: x must lie in [0, 1]");
  if (x > 0.5) return 1.0 - cardy_F(1.0 - x);
  if (x == 0.0) return 0.0;
  const double c = std::tgamma(2.0 / 3.0) / (std::tgamma(1.0 / 3.0) * std::tgamma(4.0 / 3.0));
  double term = 1.0, sum = 1.0;
  for (int n = 0; n < 200; ++n) {
    term *= (n + 1.0 / 3.0) * (n + 2.0 / 3.0) / ((n + 4.0 / 3.0) * (n + 1.0)) * x;
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return c * std::cbrt(x) * sum;
}

/// Cross-ratio of four points; real for concyclic or collinear points.
inline double cross_ratio(cplx z1, cplx z2, cplx z3, cplx z4) {
  return std::real((z2 - z1) * (z4 - z3) / ((z3 - z1) * (z4 - z2)));
}

/// Modulus k with 2K(k)/K'(k) = ratio.
inline double elliptic_modulus_for_ratio(double ratio) {
  if (!(ratio > 0.0)) throw Error("elliptic_modulus_for_ratio: ratio must be positive");
  double lo = 1e-15, hi = 1.0 - 1e-15;
  auto f = [](double k) { return 2.0 * std::comp_ellint_1(k) / std::comp_ellint_1(std::sqrt(1.0 - k * k)); };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < ratio ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Cross-ratio for crossing between two opposite sides of a rectangle:
/// sides of length `side` a distance `separation` apart.
inline double rectangle_cross_ratio(double separation, double side) {
  const double k = elliptic_modulus_for_ratio(separation / side);
  const double r = (1.0 - k) / (1.0 + k);
  return r * r;
}

/// Continuum probability of a crossing between arcs (a,b) and (c,d).
/// Supported: axis-aligned rectangles with markers at the corners, disks.
inline double cardy_crossing(const JordanDomain& dom) {
  const auto& m = dom.marked();
  if (m.size() != 4) throw Error("cardy_crossing: need four marked points a, b, c, d");
  const auto& poly = dom.boundary();
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (auto p : poly) {
    xmin = std::min(xmin, p.real());
    xmax = std::max(xmax, p.real());
    ymin = std::min(ymin, p.imag());
    ymax = std::max(ymax, p.imag());
  }
  const double tol = 1e-9 * std::max(xmax - xmin, ymax - ymin);
  if (poly.size() == 4) {
    auto corner = [&](cplx z) {
      return (std::abs(z.real() - xmin) < tol || std::abs(z.real() - xmax) < tol) &&
             (std::abs(z.imag() - ymin) < tol || std::abs(z.imag() - ymax) < tol);
    };
    bool rect = true;
    for (auto p : poly) rect = rect && corner(p);
    if (rect) {
      for (auto z : m)
        if (!corner(z)) throw Error("cardy_crossing: rectangle markers must be corners");
      const double side = std::abs(m[1] - m[0]), sep = std::abs(m[2] - m[1]);
      return cardy_F(rectangle_cross_ratio(sep, side));
    }
  }
  const cplx c{(xmin + xmax) / 2, (ymin + ymax) / 2};
  const double r = std::abs(poly[0] - c);
  bool circle = poly.size() >= 64;
  for (auto p : poly) circle = circle && std::abs(std::abs(p - c) - r) < 1e-6 * r;
  if (circle) {
    // markers projected to the circle
    std::array<cplx, 4> z;
    for (int k = 0; k < 4; ++k) z[static_cast<std::size_t>(k)] = c + r * std::polar(1.0, std::arg(m[static_cast<std::size_t>(k)] - c));
    return cardy_F(cross_ratio(z[0], z[1], z[2], z[3]));
  }
  throw Error("cardy_crossing: unsupported domain (rectangles and disks only)");
}

inline double cardy_crossing_halfplane(double x1, double x2, double x3, double x4) {
  if (!(x1 < x2 && x2 < x3 && x3 < x4)) throw Error("cardy_crossing_halfplane: need x1 < x2 < x3 < x4");
  return cardy_F(cross_ratio(x1, x2, x3, x4));
}

/// Max over the grid of |c F'' + (2/x - 2/(1-x)) F'| with central
/// differences of step h; c = 3 is the kappa = 6 equation.
inline double bpz_residual(const std::vector<double>& grid, double h = 1e-3, double coefficient = 3.0) {
  double worst = 0.0;
  for (double x : grid) {
    if (!(x - h > 0.0 && x + h < 1.0)) throw Error("bpz_residual: grid point too close to 0 or 1");
    const double fp = cardy_F(x + h), f0 = cardy_F(x), fm = cardy_F(x - h);
    const double d1 = (fp - fm) / (2 * h), d2 = (fp - 2 * f0 + fm) / (h * h);
    worst = std::max(worst, std::abs(coefficient * d2 + (2.0 / x - 2.0 / (1.0 - x)) * d1));
  }
  return worst;
}

inline std::vector<double> uniform_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int k = 0; k < n; ++k) g.push_back(lo + (hi - lo) * k / (n - 1));
  return g;
}

// ---------------------------------------------------------------------------
// Discrete connectivity on a coloured configuration

/// Arc sets by marked-point label: arcs are 0 ab, 1 bc, 2 cd, 3 da, and
/// 4 marks cells revealed by an exploration started at a (part of arc db).
using ArcSet = unsigned;
inline constexpr ArcSet kArcAB = 1u, kArcBC = 2u, kArcCD = 4u, kArcDA = 8u, kArcSlit = 16u;
inline constexpr ArcSet kArcDB = kArcDA | kArcAB | kArcSlit;

namespace detail {

// Nodes: cell index for whole cells and half A of split irises; half B of
// flower f is node size + f.
class PartGraph {
 public:
  PartGraph(const AdmissibleDomain& d, const std::vector<std::uint8_t>& color, const std::vector<IrisState>& iris,
            const std::vector<std::uint8_t>* revealed = nullptr)
      : d_(d), color_(color), iris_(iris), revealed_(revealed) {}

  [[nodiscard]] int nodes() const { return static_cast<int>(d_.size() + d_.flowers.size()); }
  [[nodiscard]] int cell_of(int n) const {
    return n < static_cast<int>(d_.size()) ? n : d_.flowers[static_cast<std::size_t>(n - static_cast<int>(d_.size()))].iris;
  }

  [[nodiscard]] bool split_cell(int cell) const {
    const Cell& c = d_.cells[static_cast<std::size_t>(cell)];
    return c.role == kIrisRole && is_split(iris_[static_cast<std::size_t>(c.flower)]);
  }

  // active = interior and not revealed
  [[nodiscard]] bool active(int n) const {
    const int c = cell_of(n);
    if (d_.cells[static_cast<std::size_t>(c)].kind != CellKind::Interior) return false;
    if (revealed_ && (*revealed_)[static_cast<std::size_t>(c)]) return false;
    return n < static_cast<int>(d_.size()) || split_cell(c);
  }

  [[nodiscard]] std::uint8_t color(int n) const {
    const int c = cell_of(n);
    if (n >= static_cast<int>(d_.size())) return kYellow;
    if (split_cell(c)) return kBlue;
    return color_[static_cast<std::size_t>(c)];
  }

  // arc bit of a terminal cell (boundary or revealed), 0 otherwise
  [[nodiscard]] ArcSet terminal(int cell) const {
    const Cell& c = d_.cells[static_cast<std::size_t>(cell)];
    if (c.kind == CellKind::Boundary) return 1u << c.arc;
    if (c.kind == CellKind::Interior && revealed_ && (*revealed_)[static_cast<std::size_t>(cell)]) return kArcSlit;
    return 0u;
  }

  // part of `cell` facing direction j
  [[nodiscard]] int facing(int cell, int j) const {
    if (!split_cell(cell)) return cell;
    const int o = split_orientation(iris_[static_cast<std::size_t>(d_.cells[static_cast<std::size_t>(cell)].flower)]);
    return mod6(j - o) <= 2 ? cell : static_cast<int>(d_.size()) + d_.cells[static_cast<std::size_t>(cell)].flower;
  }

  // Edge neighbours, plus blue diagonal neighbours at split endpoints when
  // `diagonal` and both parts are blue. Calls fn(node) for active
  // neighbours and term(arcbit) for terminal cells.
  template <class F, class T>
  void neighbours(int n, bool diagonal, F&& fn, T&& term) const {
    const int cell = cell_of(n);
    const HexCoord h = d_.coord(cell);
    const bool split = split_cell(cell);
    int lo = 0, hi = 6;
    if (split) {
      const int o = split_orientation(iris_[static_cast<std::size_t>(d_.cells[static_cast<std::size_t>(cell)].flower)]);
      const bool half_a = n < static_cast<int>(d_.size());
      lo = half_a ? o : o + 3;
      hi = lo + 3;
      fn(half_a ? static_cast<int>(d_.size()) + d_.cells[static_cast<std::size_t>(cell)].flower : cell);
      if (diagonal && half_a) {
        for (int j : {o - 1, o + 3}) visit(h, mod6(j), fn, term, true);
      }
    }
    for (int j = lo; j < hi; ++j) visit(h, mod6(j), fn, term, false);
    if (!split && diagonal && color(n) == kBlue) {
      // petal next to a split iris: diagonal to half A at the endpoints
      for (int j = 0; j < 6; ++j) {
        const int nb = d_.index(h + kHexDirections[static_cast<std::size_t>(j)]);
        if (nb < 0 || !split_cell(nb) || !active(nb)) continue;
        const int o = split_orientation(iris_[static_cast<std::size_t>(d_.cells[static_cast<std::size_t>(nb)].flower)]);
        const int from_iris = mod6(j + 3);
        if (from_iris == mod6(o - 1) || from_iris == mod6(o + 3)) fn(nb);
      }
    }
  }

 private:
  template <class F, class T>
  void visit(HexCoord h, int j, F& fn, T& term, bool blue_only) const {
    const int nb = d_.index(h + kHexDirections[static_cast<std::size_t>(j)]);
    if (nb < 0) return;
    if (const ArcSet t = terminal(nb); t) {
      if (!blue_only) term(t);
      return;
    }
    const int p = facing(nb, mod6(j + 3));
    if (!active(p)) return;
    if (blue_only && color(p) != kBlue) return;
    fn(p);
  }

  const AdmissibleDomain& d_;
  const std::vector<std::uint8_t>& color_;
  const std::vector<IrisState>& iris_;
  const std::vector<std::uint8_t>* revealed_;
};

}  // namespace detail

/// Crossing of colour `col` between boundary arc sets `from` and `to`
/// through interior cells. Blue may pass diagonally at split endpoints.
inline bool crossing(const AdmissibleDomain& d, const Configuration& conf, std::uint8_t col, ArcSet from, ArcSet to) {
  detail::PartGraph g(d, conf.color, conf.iris);
  std::vector<char> seen(static_cast<std::size_t>(g.nodes()), 0);
  std::vector<int> stack;
  for (int n = 0; n < g.nodes(); ++n) {
    if (!g.active(n) || g.color(n) != col) continue;
    bool touch = false;
    g.neighbours(n, false, [](int) {}, [&](ArcSet t) { touch = touch || (t & from); });
    if (touch) {
      seen[static_cast<std::size_t>(n)] = 1;
      stack.push_back(n);
    }
  }
  bool hit = false;
  while (!stack.empty() && !hit) {
    const int n = stack.back();
    stack.pop_back();
    g.neighbours(
        n, col == kBlue,
        [&](int m) {
          if (!seen[static_cast<std::size_t>(m)] && g.color(m) == col) {
            seen[static_cast<std::size_t>(m)] = 1;
            stack.push_back(m);
          }
        },
        [&](ArcSet t) { hit = hit || (t & to); });
  }
  return hit;
}

inline bool blue_crossing(const AdmissibleDomain& d, const Configuration& conf, ArcSet from, ArcSet to) {
  return crossing(d, conf, kBlue, from, to);
}

/// Indicator that z lies above the lowest yellow crossing from `side1` to
/// `side2`, i.e. is separated from `opposite`. The cell of z counts as blue.
/// `revealed` marks cells that act as boundary of arc kArcSlit.
inline bool separated_by_yellow(const AdmissibleDomain& d, const std::vector<std::uint8_t>& color,
                                const std::vector<IrisState>& iris, int zcell, ArcSet opposite, ArcSet side1,
                                ArcSet side2, const std::vector<std::uint8_t>* revealed = nullptr) {
  std::vector<std::uint8_t> col = color;
  col[static_cast<std::size_t>(zcell)] = kBlue;
  detail::PartGraph g(d, col, iris, revealed);
  const int nn = g.nodes();
  if (!g.active(zcell)) throw Error("separated_by_yellow: query cell is not an open interior cell");
  // yellow clusters touching both sides
  std::vector<int> comp(static_cast<std::size_t>(nn), -1);
  std::vector<char> blocking;
  std::vector<int> stack;
  for (int s = 0; s < nn; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0 || !g.active(s) || g.color(s) != kYellow) continue;
    const int id = static_cast<int>(blocking.size());
    ArcSet touched = 0;
    comp[static_cast<std::size_t>(s)] = id;
    stack.push_back(s);
    while (!stack.empty()) {
      const int n = stack.back();
      stack.pop_back();
      g.neighbours(
          n, false,
          [&](int m) {
            if (comp[static_cast<std::size_t>(m)] < 0 && g.color(m) == kYellow) {
              comp[static_cast<std::size_t>(m)] = id;
              stack.push_back(m);
            }
          },
          [&](ArcSet t) { touched |= t; });
    }
    blocking.push_back((touched & side1) && (touched & side2));
  }
  auto blocked = [&](int n) { return comp[static_cast<std::size_t>(n)] >= 0 && blocking[static_cast<std::size_t>(comp[static_cast<std::size_t>(n)])]; };
  // flood from the opposite arc around blocking clusters
  std::vector<char> seen(static_cast<std::size_t>(nn), 0);
  for (int n = 0; n < nn; ++n) {
    if (!g.active(n) || blocked(n)) continue;
    bool touch = false;
    g.neighbours(n, false, [](int) {}, [&](ArcSet t) { touch = touch || (t & opposite); });
    if (touch) {
      seen[static_cast<std::size_t>(n)] = 1;
      stack.push_back(n);
    }
  }
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    if (n == zcell) return false;
    const bool nb = g.color(n) == kBlue;
    g.neighbours(
        n, nb,
        [&](int m) {
          if (!seen[static_cast<std::size_t>(m)] && !blocked(m)) {
            seen[static_cast<std::size_t>(m)] = 1;
            stack.push_back(m);
          }
        },
        [](ArcSet) {});
  }
  return !seen[static_cast<std::size_t>(zcell)];
}

struct CcsIndicator {
  bool b = false, c = false, d = false;
};

inline CcsIndicator ccs_indicators(const AdmissibleDomain& dom, const std::vector<std::uint8_t>& color,
                                   const std::vector<IrisState>& iris, int zcell,
                                   const std::vector<std::uint8_t>* revealed = nullptr) {
  CcsIndicator r;
  r.d = separated_by_yellow(dom, color, iris, zcell, kArcBC, kArcCD, kArcDB, revealed);
  r.b = separated_by_yellow(dom, color, iris, zcell, kArcCD, kArcDB, kArcBC, revealed);
  r.c = separated_by_yellow(dom, color, iris, zcell, kArcDB, kArcBC, kArcCD, revealed);
  return r;
}

struct CCSValue {
  cplx z;
  double s_b = 0, s_c = 0, s_d = 0;
  double se_b = 0, se_c = 0, se_d = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;

  [[nodiscard]] cplx S() const {
    const cplx tau = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
    return s_b + tau * s_c + tau * tau * s_d;
  }
};

/// Interior non-iris cell nearest to z.
inline int query_cell(const AdmissibleDomain& d, cplx z) {
  const HexCoord h = hex_round(z, d.mesh);
  int best = -1;
  double bd = 1e300;
  for (int rad = 0; rad <= 2 && best < 0; ++rad)
    for (int dq = -rad; dq <= rad; ++dq)
      for (int dr = -rad; dr <= rad; ++dr) {
        const int i = d.index({h.q + dq, h.r + dr});
        if (i < 0 || d.cells[static_cast<std::size_t>(i)].kind != CellKind::Interior ||
            d.cells[static_cast<std::size_t>(i)].role == kIrisRole)
          continue;
        const double dist = std::abs(d.center(i) - z);
        if (dist < bd) {
          bd = dist;
          best = i;
        }
      }
  if (best < 0) throw Error("query_cell: point is not inside the lattice domain");
  return best;
}

inline std::vector<CCSValue> estimate_ccs(const AdmissibleDomain& dom, ModelParams params, const std::vector<cplx>& zs,
                                          std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 100) throw Error("estimate_ccs: need at least 100 samples");
  if (dom.marked.size() != 4) throw Error("estimate_ccs: domain needs markers a, b, c, d");
  const FlowerTables t(params);
  std::vector<int> cells;
  for (auto z : zs) cells.push_back(query_cell(dom, z));
  std::vector<std::array<std::size_t, 3>> hits(zs.size(), {0, 0, 0});
  for (std::size_t i = 0; i < n_samples; ++i) {
    auto g = make_stream(seed, i, 0xcc5);
    const auto conf = sample_configuration(dom, t, g);
    for (std::size_t q = 0; q < zs.size(); ++q) {
      const auto ind = ccs_indicators(dom, conf.color, conf.iris, cells[q]);
      hits[q][0] += ind.b;
      hits[q][1] += ind.c;
      hits[q][2] += ind.d;
    }
  }
  std::vector<CCSValue> out;
  for (std::size_t q = 0; q < zs.size(); ++q) {
    CCSValue v;
    v.z = dom.center(cells[q]);
    const auto pb = proportion(hits[q][0], n_samples), pc = proportion(hits[q][1], n_samples), pd = proportion(hits[q][2], n_samples);
    v.s_b = pb.mean;
    v.se_b = pb.se;
    v.s_c = pc.mean;
    v.se_c = pc.se;
    v.s_d = pd.mean;
    v.se_d = pd.se;
    v.n = n_samples;
    v.seed = seed;
    out.push_back(v);
  }
  return out;
}

struct CrossingEstimate {
  double p = 0, se = 0;
  std::size_t hits = 0, n = 0;
};

/// Probability of a blue crossing between arcs (a,b) and (c,d).
inline CrossingEstimate estimate_crossing(const AdmissibleDomain& dom, ModelParams params, std::size_t n_samples,
                                          std::uint64_t seed, ArcSet from = kArcAB, ArcSet to = kArcCD) {
  if (dom.marked.size() != 4) throw Error("estimate_crossing: domain needs markers a, b, c, d");
  const FlowerTables t(params);
  CrossingEstimate r;
  r.n = n_samples;
  for (std::size_t i = 0; i < n_samples; ++i) {
    auto g = make_stream(seed, i, 0xca7);
    r.hits += blue_crossing(dom, sample_configuration(dom, t, g), from, to);
  }
  const auto p = proportion(r.hits, n_samples);
  r.p = p.mean;
  r.se = p.se;
  return r;
}

// ---------------------------------------------------------------------------
// Martingale and contour checks

struct MartingaleRow {
  cplx z;
  std::size_t k = 0;
  double s0 = 0, sk = 0;  // S_d before and after k steps
  double diff = 0, se = 0;
  double max_component_z = 0;  // largest |diff|/se over the three components
  double budget = 0;           // n^{-s}
  [[nodiscard]] bool within(double z = 3.0) const { return std::abs(diff) <= z * se; }
};

/// For each z and k: S after k steps is the slit-domain observable (cells
/// revealed by the exploration become boundary of arc db), evaluated on the
/// completed configuration; S_0 uses the same random stream (paired
/// differences, so k = 0 gives exactly 0).
inline std::vector<MartingaleRow> martingale_check(const AdmissibleDomain& dom, ModelParams params,
                                                   const std::vector<cplx>& zs, const std::vector<std::size_t>& ks,
                                                   std::size_t n_samples, std::uint64_t seed, double s_exponent = 0.0) {
  if (dom.marked.size() != 4) throw Error("martingale_check: domain needs markers a, b, c, d");
  const FlowerTables t(params);
  std::vector<int> cells;
  for (auto z : zs) cells.push_back(query_cell(dom, z));
  std::vector<MartingaleRow> rows;
  const double n_lattice = 1.0 / dom.mesh;
  for (std::size_t k : ks) {
    std::vector<std::array<std::vector<double>, 3>> diffs(zs.size());
    std::vector<std::vector<double>> s0(zs.size()), sk(zs.size());
    for (std::size_t i = 0; i < n_samples; ++i) {
      auto g0 = make_stream(seed, i, 0x3a0);
      const auto conf = sample_configuration(dom, t, g0);
      auto g = make_stream(seed, i, 0x3a0);
      RandomRevealer rev(t, g);
      ExplorationState st = initial_state(dom);
      explore_run(dom, st, rev, k);
      std::vector<std::uint8_t> rmask(dom.size(), 0);
      for (int c : st.revealed) rmask[static_cast<std::size_t>(c)] = 1;
      std::vector<std::uint8_t> col = st.color;
      std::vector<IrisState> iris = st.iris;
      complete_configuration(dom, t, g, col, iris);
      for (std::size_t q = 0; q < zs.size(); ++q) {
        const auto a = ccs_indicators(dom, conf.color, conf.iris, cells[q]);
        const bool open = !rmask[static_cast<std::size_t>(cells[q])];
        // a revealed query cell lies on the slit: use the full-domain event
        const auto b = open ? ccs_indicators(dom, col, iris, cells[q], &rmask) : ccs_indicators(dom, col, iris, cells[q]);
        diffs[q][0].push_back(double(b.b) - double(a.b));
        diffs[q][1].push_back(double(b.c) - double(a.c));
        diffs[q][2].push_back(double(b.d) - double(a.d));
        s0[q].push_back(a.d);
        sk[q].push_back(b.d);
      }
    }
    for (std::size_t q = 0; q < zs.size(); ++q) {
      MartingaleRow r;
      r.z = dom.center(cells[q]);
      r.k = k;
      r.s0 = mean_se(s0[q]).mean;
      r.sk = mean_se(sk[q]).mean;
      const auto dd = mean_se(diffs[q][2]);
      r.diff = dd.mean;
      r.se = dd.se;
      for (int c = 0; c < 3; ++c) {
        const auto m = mean_se(diffs[q][static_cast<std::size_t>(c)]);
        if (m.se > 0) r.max_component_z = std::max(r.max_component_z, std::abs(m.mean) / m.se);
      }
      r.budget = std::pow(n_lattice, -s_exponent);
      rows.push_back(r);
    }
  }
  return rows;
}

/// Trapezoid rule for a closed polygonal contour (first point == last).
inline cplx contour_integral(const std::vector<cplx>& pts, const std::vector<cplx>& values) {
  if (pts.size() < 4 || pts.size() != values.size()) throw Error("contour_integral: need matching closed contour data");
  if (std::abs(pts.front() - pts.back()) > 1e-12 * (1.0 + std::abs(pts.front()))) throw Error("contour_integral: contour is not closed");
  cplx s = 0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) s += 0.5 * (values[k] + values[k + 1]) * (pts[k + 1] - pts[k]);
  return s;
}

/// Closed ring of hexagon centres at lattice distance `radius` around z.
inline std::vector<cplx> hex_ring_contour(const AdmissibleDomain& d, cplx z, int radius) {
  if (radius < 1) throw Error("hex_ring_contour: radius must be >= 1");
  const HexCoord c = hex_round(z, d.mesh);
  std::vector<cplx> out;
  HexCoord h = c;
  for (int k = 0; k < radius; ++k) h = h + kHexDirections[4];
  for (int side = 0; side < 6; ++side)
    for (int k = 0; k < radius; ++k) {
      out.push_back(hex_center(h, d.mesh));
      h = h + kHexDirections[static_cast<std::size_t>(side)];
    }
  out.push_back(out.front());
  return out;
}

struct ContourReport {
  double value = 0;  // |mean contour integral|
  double se = 0;
  double length = 0;
  std::size_t n = 0;
};

/// Monte Carlo |contour integral of S|; the integral is linear in the
/// per-sample indicators, so each sample gives one complex value.
inline ContourReport contour_holomorphicity(const AdmissibleDomain& dom, ModelParams params,
                                            const std::vector<cplx>& contour, std::size_t n_samples,
                                            std::uint64_t seed) {
  if (std::abs(contour.front() - contour.back()) > 1e-12) throw Error("contour_holomorphicity: contour is not closed");
  if (dom.marked.size() != 4) throw Error("contour_holomorphicity: domain needs markers a, b, c, d");
  const FlowerTables t(params);
  const cplx tau = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
  std::vector<int> cells;
  std::vector<cplx> pts;
  for (auto z : contour) {
    cells.push_back(query_cell(dom, z));
    pts.push_back(dom.center(cells.back()));
  }
  std::vector<double> re, im;
  cplx mean = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    auto g = make_stream(seed, i, 0xc0);
    const auto conf = sample_configuration(dom, t, g);
    std::vector<cplx> vals;
    for (int c : cells) {
      const auto ind = ccs_indicators(dom, conf.color, conf.iris, c);
      vals.push_back(double(ind.b) + tau * double(ind.c) + tau * tau * double(ind.d));
    }
    const cplx v = contour_integral(pts, vals);
    re.push_back(v.real());
    im.push_back(v.imag());
    mean += v;
  }
  mean /= static_cast<double>(n_samples);
  ContourReport r;
  r.value = std::abs(mean);
  const auto a = mean_se(re), b = mean_se(im);
  r.se = std::hypot(a.se, b.se);
  r.length = polyline_length(pts);
  r.n = n_samples;
  return r;
}

}  // namespace slelab
