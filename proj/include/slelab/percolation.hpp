#pragma once
// Hexagonal site percolation with flowers (iris + six petals), admissible
// lattice domains and the exploration process keeping blue on its right.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "slelab/geometry.hpp"
#include "slelab/rng.hpp"
#include "slelab/stats.hpp"

namespace slelab {

class ModelConsistencyError : public Error {
 public:
  using Error::Error;
};

struct ModelParams {
  double a = 0.5;
  double s = 0.0;

  static ModelParams from_s(double s) { return {(1.0 - 3.0 * s) / 2.0, s}; }

  void validate() const {
    if (!(a >= 0.0) || !(s >= 0.0)) throw Error("ModelParams: a and s must be non-negative");
    if (std::abs(2.0 * a + 3.0 * s - 1.0) > 1e-12) throw Error("ModelParams: need 2a + 3s = 1");
    if (a * a < 2.0 * s * s) throw Error("ModelParams: need a^2 >= 2 s^2");
  }
};

/// Iris states. A split iris with orientation o has half A (blue) facing
/// neighbour directions o, o+1, o+2 and half B (yellow) facing the rest;
/// the split line joins vertices o-1 and o+2.
enum class IrisState : std::int8_t { Unknown = -1, Blue = 0, Yellow = 1, SplitH = 2, Split120 = 3, Split60 = 4 };

inline constexpr std::array<IrisState, 5> kIrisStates{IrisState::Blue, IrisState::Yellow, IrisState::SplitH,
                                                      IrisState::Split120, IrisState::Split60};

inline bool is_split(IrisState s) { return s == IrisState::SplitH || s == IrisState::Split120 || s == IrisState::Split60; }

inline int split_orientation(IrisState s) {
  switch (s) {
    case IrisState::SplitH: return 0;
    case IrisState::Split120: return 2;
    case IrisState::Split60: return 4;
    default: throw Error("split_orientation: iris is not split");
  }
}

enum class SiteState : std::uint8_t { Undecided, Blue, Yellow, SplitH, Split120, Split60 };

inline constexpr std::uint8_t kUnknown = 0, kBlue = 1, kYellow = 2, kSplit = 3;

// ---------------------------------------------------------------------------
// Flower law tables

/// Exact conditional laws of one flower, from the joint law: petals are
/// fair coins, the iris has law (a, a, s, s, s) except on triggers where it
/// is blue or yellow with probability 1/2 each. Petal knowledge is coded in
/// base 3 per petal (0 unknown, 1 blue, 2 yellow).
class FlowerTables {
 public:
  explicit FlowerTables(ModelParams p) : params_(p) {
    p.validate();
    for (unsigned pat = 0; pat < 64; ++pat)
      for (int i = 0; i < 5; ++i) joint_[pat][i] = iris_given_pattern(pat, kIrisStates[i]) / 64.0;
    for (int code = 0; code < 729; ++code) {
      int digit[6];
      for (int j = 0, c = code; j < 6; ++j, c /= 3) digit[j] = c % 3;
      std::array<double, 5> iris{};
      std::array<std::array<double, 6>, 6> blue{}, total{};
      for (unsigned pat = 0; pat < 64; ++pat) {
        bool ok = true;
        for (int j = 0; j < 6 && ok; ++j)
          if (digit[j] != 0 && ((pat >> j) & 1u) != (digit[j] == 1 ? 1u : 0u)) ok = false;
        if (!ok) continue;
        for (int i = 0; i < 5; ++i) {
          const double w = joint_[pat][i];
          iris[i] += w;
          for (int j = 0; j < 6; ++j) {
            for (int known : {i, 5}) {
              total[known][j] += w;
              if ((pat >> j) & 1u) blue[known][j] += w;
            }
          }
        }
      }
      const double z = iris[0] + iris[1] + iris[2] + iris[3] + iris[4];
      for (int i = 0; i < 5; ++i) iris_cond_[code][i] = z > 0 ? iris[i] / z : std::numeric_limits<double>::quiet_NaN();
      for (int known = 0; known < 6; ++known)
        for (int j = 0; j < 6; ++j)
          petal_cond_[known][code][j] = total[known][j] > 0 ? blue[known][j] / total[known][j]
                                                            : std::numeric_limits<double>::quiet_NaN();
    }
  }

  [[nodiscard]] const ModelParams& params() const { return params_; }

  /// Three blue and three yellow petals with exactly one adjacent yellow pair.
  static bool is_trigger(unsigned pattern) {
    if (__builtin_popcount(pattern & 63u) != 3) return false;
    int pairs = 0;
    for (int j = 0; j < 6; ++j) {
      const bool yj = !((pattern >> j) & 1u), yk = !((pattern >> ((j + 1) % 6)) & 1u);
      pairs += yj && yk;
    }
    return pairs == 1;
  }

  [[nodiscard]] double iris_given_pattern(unsigned pattern, IrisState s) const {
    if (is_trigger(pattern)) return (s == IrisState::Blue || s == IrisState::Yellow) ? 0.5 : 0.0;
    return (s == IrisState::Blue || s == IrisState::Yellow) ? params_.a : params_.s;
  }

  [[nodiscard]] double joint(unsigned pattern, IrisState s) const { return joint_[pattern][static_cast<int>(s)]; }

  [[nodiscard]] const std::array<double, 5>& iris_distribution(int code) const {
    if (std::isnan(iris_cond_[code][0])) throw ModelConsistencyError("flower: petal knowledge has probability zero");
    return iris_cond_[code];
  }

  /// P(petal j blue | petal knowledge, iris state or Unknown).
  [[nodiscard]] double petal_blue(int code, IrisState iris, int j) const {
    const int known = iris == IrisState::Unknown ? 5 : static_cast<int>(iris);
    const double p = petal_cond_[known][code][j];
    if (std::isnan(p)) throw ModelConsistencyError("flower: conditional with zero normalisation");
    return p;
  }

 private:
  ModelParams params_;
  double joint_[64][5]{};
  std::array<double, 5> iris_cond_[729]{};
  double petal_cond_[6][729][6]{};
};

// ---------------------------------------------------------------------------
// Lattice vertices

/// Corner k of hexagon h; three (h, k) pairs name the same point and the
/// canonical one is the lexicographically smallest.
struct Vertex {
  HexCoord h;
  int k = 0;

  friend bool operator==(const Vertex&, const Vertex&) = default;
  friend auto operator<=>(const Vertex&, const Vertex&) = default;
};

inline int mod6(int k) { return ((k % 6) + 6) % 6; }

inline Vertex canonical(Vertex v) {
  v.k = mod6(v.k);
  const Vertex a{v.h + kHexDirections[static_cast<std::size_t>(v.k)], mod6(v.k + 2)};
  const Vertex b{v.h + kHexDirections[static_cast<std::size_t>(mod6(v.k + 1))], mod6(v.k + 4)};
  return std::min({v, a, b});
}

inline cplx vertex_position(const Vertex& v, double mesh) { return hex_vertex(v.h, v.k, mesh); }

/// The three hexagons at a vertex in counter-clockwise order, each with the
/// index of the vertex as one of its own corners.
inline std::array<std::pair<HexCoord, int>, 3> vertex_hexes(const Vertex& v) {
  return {{{v.h + kHexDirections[static_cast<std::size_t>(mod6(v.k + 1))], mod6(v.k + 4)},
           {v.h, v.k},
           {v.h + kHexDirections[static_cast<std::size_t>(v.k)], mod6(v.k + 2)}}};
}

// ---------------------------------------------------------------------------
// Floral arrangement and admissible domains

struct FlowerArrangement {
  int period = 0;          // > 0: irises on the sublattice spanned by (period, 0) and (0, period)
  HexCoord offset{};
  std::vector<HexCoord> irises;  // explicit irises

  [[nodiscard]] bool periodic_iris(HexCoord h) const {
    if (period <= 0) return false;
    const int dq = h.q - offset.q, dr = h.r - offset.r;
    return ((dq % period) + period) % period == 0 && ((dr % period) + period) % period == 0;
  }
};

enum class CellKind : std::uint8_t { Outside, Interior, Boundary };

inline constexpr std::int8_t kFiller = -1, kIrisRole = 6;

struct Cell {
  CellKind kind = CellKind::Outside;
  std::int8_t role = kFiller;   // petal index 0..5 (iris + direction j), kIrisRole, or kFiller
  std::int32_t flower = -1;
  std::uint8_t color = kUnknown; // boundary colour or preset colour
  std::uint8_t arc = 0;          // boundary arc: 0 ab, 1 bc, 2 cd, 3 da (from the marked points)
};

struct Flower {
  int iris = -1;
  std::array<int, 6> petals{};
};

/// Whole hexagon (part 0) or one half of a split iris (1: blue half A, 2: yellow half B).
struct CellRef {
  int cell = -1;
  std::uint8_t part = 0;
  friend bool operator==(const CellRef&, const CellRef&) = default;
};

class AdmissibleDomain {
 public:
  double mesh = 0.0;
  int q0 = 0, r0 = 0, nq = 0, nr = 0;
  std::vector<Cell> cells;
  std::vector<Flower> flowers;
  std::vector<IrisState> preset_iris;
  std::vector<int> interior;

  Vertex start;
  CellRef start_left, start_right;
  Vertex end;
  CellRef end_left, end_right;  // the pair seen by an exploration started at the end
  bool has_interior = true;
  std::vector<cplx> marked;     // a, c or a, b, c, d

  [[nodiscard]] int index(HexCoord h) const {
    const int q = h.q - q0, r = h.r - r0;
    if (q < 0 || r < 0 || q >= nq || r >= nr) return -1;
    return r * nq + q;
  }
  [[nodiscard]] HexCoord coord(int i) const { return {q0 + i % nq, r0 + i / nq}; }
  [[nodiscard]] CellKind kind(HexCoord h) const {
    const int i = index(h);
    return i < 0 ? CellKind::Outside : cells[static_cast<std::size_t>(i)].kind;
  }
  [[nodiscard]] cplx center(int i) const { return hex_center(coord(i), mesh); }
  [[nodiscard]] std::size_t size() const { return cells.size(); }
  [[nodiscard]] std::size_t iris_count() const { return flowers.size(); }
};

namespace detail {

class Scanline {
 public:
  explicit Scanline(const std::vector<cplx>& poly) : poly_(poly) {}

  bool inside(cplx p) {
    auto& xs = crossings(p.imag());
    const auto n = std::lower_bound(xs.begin(), xs.end(), p.real()) - xs.begin();
    return (n % 2) == 1;
  }

 private:
  std::vector<double>& crossings(double y) {
    auto it = cache_.find(y);
    if (it != cache_.end()) return it->second;
    std::vector<double> xs;
    const std::size_t n = poly_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const cplx a = poly_[i], b = poly_[j];
      if ((a.imag() > y) != (b.imag() > y))
        xs.push_back(a.real() + (y - a.imag()) / (b.imag() - a.imag()) * (b.real() - a.real()));
    }
    std::sort(xs.begin(), xs.end());
    return cache_.emplace(y, std::move(xs)).first->second;
  }

  const std::vector<cplx>& poly_;
  std::unordered_map<double, std::vector<double>> cache_;
};

// Junction vertices between a blue and a yellow boundary cell whose third
// cell is interior. forward: CCW order (blue, interior, yellow).
inline std::vector<std::pair<Vertex, std::pair<int, int>>> junctions(const AdmissibleDomain& d, bool forward) {
  std::vector<std::pair<Vertex, std::pair<int, int>>> out;
  for (int i = 0; i < static_cast<int>(d.size()); ++i) {
    const Cell& c = d.cells[static_cast<std::size_t>(i)];
    if (c.kind != CellKind::Boundary || c.color != kBlue) continue;
    for (int k = 0; k < 6; ++k) {
      const Vertex v{d.coord(i), k};
      const auto hx = vertex_hexes(v);
      const int i0 = d.index(hx[0].first), i1 = d.index(hx[1].first), i2 = d.index(hx[2].first);
      if (i0 < 0 || i2 < 0) continue;
      // order around v: hx0, hx1 (= this blue cell), hx2
      const Cell& c0 = d.cells[static_cast<std::size_t>(i0)];
      const Cell& c2 = d.cells[static_cast<std::size_t>(i2)];
      if (forward) {
        if (c2.kind == CellKind::Boundary && c2.color == kYellow && c0.kind == CellKind::Interior)
          continue;  // order blue, yellow, interior: wrong orientation
        if (c0.kind == CellKind::Boundary && c0.color == kYellow && c2.kind == CellKind::Interior)
          out.push_back({canonical(v), {i0, i1}});  // left yellow, right blue
      } else {
        if (c2.kind == CellKind::Boundary && c2.color == kYellow && c0.kind == CellKind::Interior)
          out.push_back({canonical(v), {i1, i2}});  // reverse run: left blue, right yellow
      }
    }
  }
  return out;
}

}  // namespace detail

/// Lattice approximation of a Jordan domain: fillers and whole flowers with
/// all corners strictly inside form the interior (largest component);
/// cut flowers join the boundary. Boundary cells are blue on the
/// counter-clockwise arc from a to c and yellow on the other arc.
inline AdmissibleDomain build_admissible(const JordanDomain& dom, double mesh, const FlowerArrangement& arr = {}) {
  if (!(mesh > 0.0)) throw Error("build_admissible: mesh must be positive");
  const auto& mk = dom.marked();
  if (mk.size() != 2 && mk.size() != 4) throw Error("build_admissible: need marked points (a, c) or (a, b, c, d)");
  if (arr.period > 0 && arr.period < 3) throw Error("build_admissible: iris period must be >= 3");
  for (std::size_t i = 0; i < arr.irises.size(); ++i)
    for (std::size_t j = i + 1; j < arr.irises.size(); ++j)
      if (hex_distance(arr.irises[i], arr.irises[j]) < 3)
        throw Error("build_admissible: irises closer than two non-iris hexagons");

  AdmissibleDomain d;
  d.mesh = mesh;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : dom.boundary()) {
    xmin = std::min(xmin, p.real());
    xmax = std::max(xmax, p.real());
    ymin = std::min(ymin, p.imag());
    ymax = std::max(ymax, p.imag());
  }
  const double rh = mesh * std::numbers::sqrt3 / 2.0;
  const int rlo = static_cast<int>(std::floor(ymin / rh)) - 3, rhi = static_cast<int>(std::ceil(ymax / rh)) + 3;
  const int qlo = static_cast<int>(std::floor(xmin / mesh - 0.5 * rhi)) - 3;
  const int qhi = static_cast<int>(std::ceil(xmax / mesh - 0.5 * rlo)) + 3;
  d.q0 = qlo;
  d.r0 = rlo;
  d.nq = qhi - qlo + 1;
  d.nr = rhi - rlo + 1;
  d.cells.assign(static_cast<std::size_t>(d.nq) * static_cast<std::size_t>(d.nr), Cell{});

  detail::Scanline scan(dom.boundary());
  std::vector<char> inside(d.size(), 0);
  for (int i = 0; i < static_cast<int>(d.size()); ++i) {
    const HexCoord h = d.coord(i);
    if (!scan.inside(hex_center(h, mesh))) continue;
    bool all = true;
    for (int k = 0; k < 6 && all; ++k) all = scan.inside(hex_vertex(h, k, mesh));
    inside[static_cast<std::size_t>(i)] = all;
  }
  auto flower_inside = [&](HexCoord iris) {
    if (d.index(iris) < 0 || !inside[static_cast<std::size_t>(d.index(iris))]) return false;
    for (auto n : hex_neighbors(iris))
      if (d.index(n) < 0 || !inside[static_cast<std::size_t>(d.index(n))]) return false;
    return true;
  };

  std::vector<char> cut(d.size(), 0);
  std::vector<HexCoord> irises;
  for (const auto& h : arr.irises) {
    if (!flower_inside(h))
      throw Error("build_admissible: iris at (" + std::to_string(h.q) + "," + std::to_string(h.r) +
                  ") has a petal on or outside the boundary");
    irises.push_back(h);
  }
  if (arr.period > 0) {
    for (int i = 0; i < static_cast<int>(d.size()); ++i) {
      const HexCoord h = d.coord(i);
      if (!arr.periodic_iris(h)) continue;
      bool near = inside[static_cast<std::size_t>(i)] != 0;
      for (auto n : hex_neighbors(h)) near = near || (d.index(n) >= 0 && inside[static_cast<std::size_t>(d.index(n))]);
      if (!near) continue;
      if (flower_inside(h)) {
        irises.push_back(h);
      } else {
        cut[static_cast<std::size_t>(i)] = 1;
        for (auto n : hex_neighbors(h))
          if (d.index(n) >= 0) cut[static_cast<std::size_t>(d.index(n))] = 1;
      }
    }
  }

  // largest connected interior component
  std::vector<int> comp(d.size(), -1);
  int best = -1;
  std::size_t best_size = 0;
  for (int i = 0; i < static_cast<int>(d.size()); ++i) {
    if (!inside[static_cast<std::size_t>(i)] || cut[static_cast<std::size_t>(i)] || comp[static_cast<std::size_t>(i)] >= 0) continue;
    std::size_t count = 0;
    std::queue<int> q;
    q.push(i);
    comp[static_cast<std::size_t>(i)] = i;
    while (!q.empty()) {
      const int x = q.front();
      q.pop();
      ++count;
      for (auto n : hex_neighbors(d.coord(x))) {
        const int y = d.index(n);
        if (y < 0 || !inside[static_cast<std::size_t>(y)] || cut[static_cast<std::size_t>(y)] || comp[static_cast<std::size_t>(y)] >= 0) continue;
        comp[static_cast<std::size_t>(y)] = i;
        q.push(y);
      }
    }
    if (count > best_size) {
      best_size = count;
      best = i;
    }
  }
  if (best < 0) throw Error("build_admissible: no interior hexagons at this mesh");
  for (int i = 0; i < static_cast<int>(d.size()); ++i)
    if (comp[static_cast<std::size_t>(i)] == best) {
      d.cells[static_cast<std::size_t>(i)].kind = CellKind::Interior;
      d.interior.push_back(i);
    }

  for (const auto& h : irises) {
    const int ii = d.index(h);
    if (d.cells[static_cast<std::size_t>(ii)].kind != CellKind::Interior) continue;
    Flower f;
    f.iris = ii;
    const auto fid = static_cast<std::int32_t>(d.flowers.size());
    d.cells[static_cast<std::size_t>(ii)].role = kIrisRole;
    d.cells[static_cast<std::size_t>(ii)].flower = fid;
    const auto nb = hex_neighbors(h);
    for (int j = 0; j < 6; ++j) {
      const int pj = d.index(nb[static_cast<std::size_t>(j)]);
      f.petals[static_cast<std::size_t>(j)] = pj;
      d.cells[static_cast<std::size_t>(pj)].role = static_cast<std::int8_t>(j);
      d.cells[static_cast<std::size_t>(pj)].flower = fid;
    }
    d.flowers.push_back(f);
  }
  d.preset_iris.assign(d.flowers.size(), IrisState::Unknown);

  // boundary layer with arc colours
  d.marked = mk;
  const auto& mp = dom.marked_params();
  const double sa = mp[0];
  const double sc = mk.size() == 2 ? mp[1] : mp[2];
  const double ac = dom.ccw_offset(sa, sc);
  for (int i = 0; i < static_cast<int>(d.size()); ++i) {
    Cell& c = d.cells[static_cast<std::size_t>(i)];
    if (c.kind == CellKind::Interior) continue;
    bool adj = false;
    for (auto n : hex_neighbors(d.coord(i))) adj = adj || d.kind(n) == CellKind::Interior;
    if (!adj) continue;
    c.kind = CellKind::Boundary;
    c.role = kFiller;
    c.flower = -1;
    const double s = dom.project(d.center(i));
    const double off = dom.ccw_offset(sa, s);
    c.color = off < ac ? kBlue : kYellow;
    if (mk.size() == 4) {
      std::uint8_t arc = 0;
      for (std::uint8_t m = 1; m < 4; ++m)
        if (off >= dom.ccw_offset(sa, mp[m])) arc = m;
      c.arc = arc;
    } else {
      c.arc = off < ac ? 0 : 2;
    }
  }

  auto pick = [&](bool forward, cplx target, Vertex& v, CellRef& left, CellRef& right) {
    const auto js = detail::junctions(d, forward);
    double bestd = std::numeric_limits<double>::infinity();
    for (const auto& [vx, lr] : js) {
      const double dist = std::abs(vertex_position(vx, mesh) - target);
      if (dist < bestd) {
        bestd = dist;
        v = vx;
        left = {lr.first, 0};
        right = {lr.second, 0};
      }
    }
    if (bestd > 4.0 * mesh)
      throw Error("build_admissible: marked point not resolved by the lattice; use a mesh below " +
                  std::to_string(bestd / 4.0 > 0 && std::isfinite(bestd) ? mesh / 2.0 : mesh / 2.0));
  };
  const cplx a = mk[0], c = mk.size() == 2 ? mk[1] : mk[2];
  pick(true, a, d.start, d.start_left, d.start_right);
  pick(false, c, d.end, d.end_left, d.end_right);
  return d;
}

/// Hand-built domain: interior, blue and yellow boundary hexagons, the
/// start vertex with its (left yellow, right blue) pair, and the end vertex.
inline AdmissibleDomain domain_from_cells(double mesh, const std::vector<HexCoord>& interior,
                                          const std::vector<HexCoord>& blue, const std::vector<HexCoord>& yellow,
                                          Vertex start, HexCoord start_left, HexCoord start_right, Vertex end,
                                          const std::vector<HexCoord>& irises = {}) {
  AdmissibleDomain d;
  d.mesh = mesh;
  int qmin = 1 << 30, qmax = -(1 << 30), rmin = 1 << 30, rmax = -(1 << 30);
  for (const auto* list : {&interior, &blue, &yellow})
    for (const auto& h : *list) {
      qmin = std::min(qmin, h.q);
      qmax = std::max(qmax, h.q);
      rmin = std::min(rmin, h.r);
      rmax = std::max(rmax, h.r);
    }
  d.q0 = qmin - 2;
  d.r0 = rmin - 2;
  d.nq = qmax - qmin + 5;
  d.nr = rmax - rmin + 5;
  d.cells.assign(static_cast<std::size_t>(d.nq) * static_cast<std::size_t>(d.nr), Cell{});
  for (const auto& h : interior) {
    d.cells[static_cast<std::size_t>(d.index(h))].kind = CellKind::Interior;
    d.interior.push_back(d.index(h));
  }
  for (const auto& h : blue) d.cells[static_cast<std::size_t>(d.index(h))] = {CellKind::Boundary, kFiller, -1, kBlue, 0};
  for (const auto& h : yellow) d.cells[static_cast<std::size_t>(d.index(h))] = {CellKind::Boundary, kFiller, -1, kYellow, 2};
  for (const auto& h : irises) {
    Flower f;
    f.iris = d.index(h);
    const auto fid = static_cast<std::int32_t>(d.flowers.size());
    if (f.iris < 0 || d.cells[static_cast<std::size_t>(f.iris)].kind != CellKind::Interior)
      throw Error("domain_from_cells: iris must be interior");
    d.cells[static_cast<std::size_t>(f.iris)].role = kIrisRole;
    d.cells[static_cast<std::size_t>(f.iris)].flower = fid;
    for (int j = 0; j < 6; ++j) {
      const int pj = d.index(h + kHexDirections[static_cast<std::size_t>(j)]);
      if (pj < 0 || d.cells[static_cast<std::size_t>(pj)].kind != CellKind::Interior)
        throw Error("domain_from_cells: petal must be interior");
      f.petals[static_cast<std::size_t>(j)] = pj;
      d.cells[static_cast<std::size_t>(pj)].role = static_cast<std::int8_t>(j);
      d.cells[static_cast<std::size_t>(pj)].flower = fid;
    }
    d.flowers.push_back(f);
  }
  d.preset_iris.assign(d.flowers.size(), IrisState::Unknown);
  d.start = canonical(start);
  d.start_left = {d.index(start_left), 0};
  d.start_right = {d.index(start_right), 0};
  d.end = canonical(end);
  d.has_interior = !interior.empty();
  d.marked = {vertex_position(d.start, mesh), vertex_position(d.end, mesh)};
  return d;
}

// ---------------------------------------------------------------------------
// Colourings

/// Full colouring: per-cell colour (kSplit marks a split iris) and iris states.
struct Configuration {
  std::vector<std::uint8_t> color;
  std::vector<IrisState> iris;
};

struct ExplorationState {
  std::vector<Vertex> path;
  std::vector<cplx> points;
  std::vector<CellRef> lefts, rights;  // cells on either side of each step
  std::vector<std::uint8_t> color;     // per cell; kUnknown until revealed
  std::vector<IrisState> iris;         // per flower
  std::vector<int> revealed;           // cells in colouring order
  CellRef left, right;
  bool terminal = false;
  bool blue_right = true;

  [[nodiscard]] std::size_t steps() const { return path.empty() ? 0 : path.size() - 1; }
};

inline int flower_code(const AdmissibleDomain& d, const std::vector<std::uint8_t>& color, int f) {
  int code = 0;
  for (int j = 5; j >= 0; --j) code = code * 3 + color[static_cast<std::size_t>(d.flowers[static_cast<std::size_t>(f)].petals[static_cast<std::size_t>(j)])];
  return code;
}

inline IrisState draw_iris(const FlowerTables& t, int code, std::mt19937_64& g) {
  const auto& p = t.iris_distribution(code);
  double u = uniform01(g);
  for (int i = 0; i < 5; ++i) {
    if (u < p[static_cast<std::size_t>(i)]) return kIrisStates[static_cast<std::size_t>(i)];
    u -= p[static_cast<std::size_t>(i)];
  }
  for (int i = 4; i >= 0; --i)
    if (p[static_cast<std::size_t>(i)] > 0) return kIrisStates[static_cast<std::size_t>(i)];
  throw ModelConsistencyError("draw_iris: empty distribution");
}

inline std::uint8_t iris_color(IrisState s) {
  return s == IrisState::Blue ? kBlue : s == IrisState::Yellow ? kYellow : kSplit;
}

/// Samples every undetermined interior cell given the ones already set in
/// `color`/`iris` (fillers fair; flowers by the exact conditional tables).
inline void complete_configuration(const AdmissibleDomain& d, const FlowerTables& t, std::mt19937_64& g,
                                   std::vector<std::uint8_t>& color, std::vector<IrisState>& iris) {
  std::uint64_t bits = 0;
  int left = 0;
  for (int i : d.interior) {
    const Cell& c = d.cells[static_cast<std::size_t>(i)];
    if (c.flower >= 0 || color[static_cast<std::size_t>(i)] != kUnknown) continue;
    if (left == 0) {
      bits = g();
      left = 64;
    }
    color[static_cast<std::size_t>(i)] = (bits & 1u) ? kBlue : kYellow;
    bits >>= 1;
    --left;
  }
  for (int f = 0; f < static_cast<int>(d.flowers.size()); ++f) {
    const Flower& fl = d.flowers[static_cast<std::size_t>(f)];
    if (iris[static_cast<std::size_t>(f)] == IrisState::Unknown) {
      iris[static_cast<std::size_t>(f)] = draw_iris(t, flower_code(d, color, f), g);
      color[static_cast<std::size_t>(fl.iris)] = iris_color(iris[static_cast<std::size_t>(f)]);
    }
    for (int j = 0; j < 6; ++j) {
      const int pj = fl.petals[static_cast<std::size_t>(j)];
      if (color[static_cast<std::size_t>(pj)] != kUnknown) continue;
      const double pb = t.petal_blue(flower_code(d, color, f), iris[static_cast<std::size_t>(f)], j);
      color[static_cast<std::size_t>(pj)] = uniform01(g) < pb ? kBlue : kYellow;
    }
  }
}

inline std::pair<std::vector<std::uint8_t>, std::vector<IrisState>> preset_colouring(const AdmissibleDomain& d) {
  std::vector<std::uint8_t> color(d.size(), kUnknown);
  for (std::size_t i = 0; i < d.size(); ++i) color[i] = d.cells[i].color;
  std::vector<IrisState> iris = d.preset_iris;
  for (std::size_t f = 0; f < d.flowers.size(); ++f)
    if (iris[f] != IrisState::Unknown) color[static_cast<std::size_t>(d.flowers[f].iris)] = iris_color(iris[f]);
  return {color, iris};
}

inline Configuration sample_configuration(const AdmissibleDomain& d, const FlowerTables& t, std::mt19937_64& g) {
  auto [color, iris] = preset_colouring(d);
  complete_configuration(d, t, g, color, iris);
  return {std::move(color), std::move(iris)};
}

/// Exploration colouring rule driven by an RNG stream.
class RandomRevealer {
 public:
  RandomRevealer(const FlowerTables& t, std::mt19937_64& g) : t_(t), g_(g) {}

  std::uint8_t cell(const AdmissibleDomain& d, const ExplorationState& st, int i) {
    const Cell& c = d.cells[static_cast<std::size_t>(i)];
    if (c.flower < 0) return coin(g_) ? kBlue : kYellow;
    const double pb = t_.petal_blue(flower_code(d, st.color, c.flower), st.iris[static_cast<std::size_t>(c.flower)], c.role);
    return uniform01(g_) < pb ? kBlue : kYellow;
  }

  IrisState iris(const AdmissibleDomain& d, const ExplorationState& st, int f) {
    return draw_iris(t_, flower_code(d, st.color, f), g_);
  }

 private:
  const FlowerTables& t_;
  std::mt19937_64& g_;
};

/// Reads colours off a fixed configuration.
class FixedRevealer {
 public:
  explicit FixedRevealer(const Configuration& c) : c_(c) {}
  std::uint8_t cell(const AdmissibleDomain&, const ExplorationState&, int i) const { return c_.color[static_cast<std::size_t>(i)]; }
  IrisState iris(const AdmissibleDomain&, const ExplorationState&, int f) const { return c_.iris[static_cast<std::size_t>(f)]; }

 private:
  const Configuration& c_;
};

// ---------------------------------------------------------------------------
// Exploration process

inline ExplorationState initial_state(const AdmissibleDomain& d, bool forward = true) {
  ExplorationState st;
  auto [color, iris] = preset_colouring(d);
  st.color = std::move(color);
  st.iris = std::move(iris);
  st.blue_right = forward;
  const Vertex v = forward ? d.start : d.end;
  st.path.push_back(v);
  st.points.push_back(vertex_position(v, d.mesh));
  st.left = forward ? d.start_left : d.end_left;
  st.right = forward ? d.start_right : d.end_right;
  return st;
}

namespace detail {

inline std::uint8_t part_color(const ExplorationState& st, const CellRef& r) {
  if (r.part == 1) return kBlue;
  if (r.part == 2) return kYellow;
  return st.color[static_cast<std::size_t>(r.cell)];
}

// Parts of a hexagon around its corner j, in counter-clockwise order around
// that corner.
inline void expand(const AdmissibleDomain& d, const ExplorationState& st, int cell, int j, std::vector<CellRef>& out) {
  const Cell& c = d.cells[static_cast<std::size_t>(cell)];
  if (c.role == kIrisRole && st.color[static_cast<std::size_t>(cell)] == kSplit) {
    const int o = split_orientation(st.iris[static_cast<std::size_t>(c.flower)]);
    const int r = mod6(j - o);
    if (r == 0 || r == 1) out.push_back({cell, 1});
    else if (r == 3 || r == 4) out.push_back({cell, 2});
    else if (r == 5) {
      out.push_back({cell, 1});
      out.push_back({cell, 2});
    } else {
      out.push_back({cell, 2});
      out.push_back({cell, 1});
    }
    return;
  }
  out.push_back({cell, 0});
}

}  // namespace detail

/// Advances one step. Returns false once the exploration has terminated.
template <class Revealer>
bool explore_step(const AdmissibleDomain& d, ExplorationState& st, Revealer& rev) {
  if (st.terminal) return false;
  const Vertex v = st.path.back();
  const Vertex target = st.blue_right ? d.end : d.start;
  if (!d.has_interior && v == target) {
    st.terminal = true;
    return false;
  }
  const auto hx = vertex_hexes(v);
  int idx[3];
  for (int k = 0; k < 3; ++k) {
    idx[k] = d.index(hx[static_cast<std::size_t>(k)].first);
    if (idx[k] < 0 || d.cells[static_cast<std::size_t>(idx[k])].kind == CellKind::Outside)
      throw Error("explore: reached a vertex outside the domain");
  }
  for (int k = 0; k < 3; ++k) {
    const Cell& c = d.cells[static_cast<std::size_t>(idx[k])];
    if (c.role == kIrisRole && st.iris[static_cast<std::size_t>(c.flower)] == IrisState::Unknown) {
      const IrisState s = rev.iris(d, st, c.flower);
      st.iris[static_cast<std::size_t>(c.flower)] = s;
      st.color[static_cast<std::size_t>(idx[k])] = iris_color(s);
      st.revealed.push_back(idx[k]);
    }
  }
  std::vector<CellRef> around;
  around.reserve(6);
  for (int k = 0; k < 3; ++k) detail::expand(d, st, idx[k], hx[static_cast<std::size_t>(k)].second, around);
  const int m = static_cast<int>(around.size());
  int ir = -1;
  for (int k = 0; k < m; ++k)
    if (around[static_cast<std::size_t>(k)] == st.right) ir = k;
  if (ir < 0 || !(around[static_cast<std::size_t>((ir + m - 1) % m)] == st.left))
    throw Error("explore: inconsistent state at vertex");
  // At a split endpoint four parts can alternate in colour; the two blue
  // parts then count as connected, so a blue-right walk takes the last
  // admissible turn and a yellow-right walk the first.
  const std::uint8_t rc = st.blue_right ? kBlue : kYellow;
  CellRef nr{}, nl{};
  bool found = false;
  for (int j = 0; j + 1 < m; ++j) {
    const CellRef cur = around[static_cast<std::size_t>((ir + j) % m)];
    const CellRef nxt = around[static_cast<std::size_t>((ir + j + 1) % m)];
    if (nxt.part == 0 && st.color[static_cast<std::size_t>(nxt.cell)] == kUnknown) {
      st.color[static_cast<std::size_t>(nxt.cell)] = rev.cell(d, st, nxt.cell);
      st.revealed.push_back(nxt.cell);
    }
    if (detail::part_color(st, cur) == rc && detail::part_color(st, nxt) != rc) {
      nr = cur;
      nl = nxt;
      found = true;
      if (m == 3 || !st.blue_right) break;
    }
  }
  if (!found) throw Error("explore: no colour change around vertex");
  const bool nr_in = d.cells[static_cast<std::size_t>(nr.cell)].kind == CellKind::Interior;
  const bool nl_in = d.cells[static_cast<std::size_t>(nl.cell)].kind == CellKind::Interior;
  if (d.has_interior && !nr_in && !nl_in) {
    if (std::abs(vertex_position(v, d.mesh) - vertex_position(target, d.mesh)) > 4.0 * d.mesh)
      throw Error("explore: interface met the boundary junction away from the target; domain rejected");
    st.terminal = true;
    return false;
  }
  // other endpoint of the edge between nr and nl
  Vertex next;
  if (nr.cell == nl.cell) {
    const HexCoord h = d.coord(nr.cell);
    const int o = split_orientation(st.iris[static_cast<std::size_t>(d.cells[static_cast<std::size_t>(nr.cell)].flower)]);
    const Vertex e1 = canonical({h, o - 1}), e2 = canonical({h, o + 2});
    next = v == e1 ? e2 : e1;
  } else {
    const HexCoord hp = d.coord(nr.cell), hq = d.coord(nl.cell);
    const int dir = hex_direction_index(hp, hq);
    if (dir < 0) throw Error("explore: edge between non-adjacent cells");
    const Vertex e1 = canonical({hp, dir - 1}), e2 = canonical({hp, dir});
    next = v == e1 ? e2 : e1;
  }
  st.lefts.push_back(nl);
  st.rights.push_back(nr);
  st.left = nl;
  st.right = nr;
  st.path.push_back(next);
  st.points.push_back(vertex_position(next, d.mesh));
  if (st.path.size() > 8 * d.size() + 16) throw Error("explore: step budget exceeded");
  return true;
}

template <class Revealer>
void explore_run(const AdmissibleDomain& d, ExplorationState& st, Revealer& rev,
                 std::size_t max_steps = std::numeric_limits<std::size_t>::max()) {
  std::size_t n = 0;
  while (n < max_steps && explore_step(d, st, rev)) ++n;
}

/// Full exploration from a to c; deterministic per seed.
inline ExplorationState explore(const AdmissibleDomain& d, ModelParams params, std::uint64_t seed,
                                std::uint64_t index = 0) {
  const FlowerTables t(params);
  auto g = make_stream(seed, index, 0xe8);
  RandomRevealer rev(t, g);
  ExplorationState st = initial_state(d);
  explore_run(d, st, rev);
  return st;
}

inline ExplorationState explore(const AdmissibleDomain& d, const FlowerTables& t, std::mt19937_64& g, bool forward = true) {
  RandomRevealer rev(t, g);
  ExplorationState st = initial_state(d, forward);
  explore_run(d, st, rev);
  return st;
}

/// Polyline through the visited vertices, times 0, 1, 2, ...
inline Curve interface_curve(const ExplorationState& st, double /*mesh*/ = 0.0) {
  return Curve::from_points(st.points, Ambient::HalfPlane);
}

/// Domain seen by the exploration after its current step: every revealed
/// colour becomes a preset and the start moves to the current tip.
inline AdmissibleDomain slit_domain(const AdmissibleDomain& d, const ExplorationState& st) {
  AdmissibleDomain s = d;
  for (int i : st.revealed) s.cells[static_cast<std::size_t>(i)].color = st.color[static_cast<std::size_t>(i)];
  s.preset_iris = st.iris;
  if (st.blue_right) {
    s.start = st.path.back();
    s.start_left = st.left;
    s.start_right = st.right;
  } else {
    s.end = st.path.back();
    s.end_left = st.left;
    s.end_right = st.right;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Statistical checks of the exploration law

struct TwoSampleReport {
  std::vector<std::string> statistic;
  std::vector<double> p_value;
  std::vector<double> ks;
  std::size_t n = 0;

  [[nodiscard]] double min_p() const {
    return p_value.empty() ? 1.0 : *std::min_element(p_value.begin(), p_value.end());
  }
};

/// Law of the next k steps after step t: continuation of one exploration
/// versus a fresh exploration in the slit domain at step t.
inline TwoSampleReport markov_restart_check(const AdmissibleDomain& d, ModelParams params, std::size_t t,
                                            std::size_t n_seeds, std::uint64_t seed, std::size_t k = 10) {
  const FlowerTables tab(params);
  std::vector<double> cx, cy, fx, fy, cl, fl;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    auto g = make_stream(seed, i, 0x3a);
    RandomRevealer rev(tab, g);
    ExplorationState st = initial_state(d);
    explore_run(d, st, rev, t);
    const AdmissibleDomain sd = slit_domain(d, st);
    ExplorationState cont = st;
    explore_run(d, cont, rev, k);
    auto g2 = make_stream(seed, i, 0x3b);
    RandomRevealer rev2(tab, g2);
    ExplorationState fresh = initial_state(sd);
    explore_run(sd, fresh, rev2, k);
    const cplx c0 = st.points.back();
    const cplx dc = cont.points.back() - c0, df = fresh.points.back() - c0;
    cx.push_back(dc.real());
    cy.push_back(dc.imag());
    fx.push_back(df.real());
    fy.push_back(df.imag());
    cl.push_back(static_cast<double>(cont.steps() - st.steps()));
    fl.push_back(static_cast<double>(fresh.steps()));
  }
  TwoSampleReport r;
  r.n = n_seeds;
  for (auto [name, a, b] : {std::tuple{"dx", &cx, &fx}, std::tuple{"dy", &cy, &fy}, std::tuple{"steps", &cl, &fl}}) {
    const auto ks = ks_two_sample(*a, *b);
    r.statistic.emplace_back(name);
    r.ks.push_back(ks.statistic);
    r.p_value.push_back(ks.p_value);
  }
  return r;
}

/// Signed area between a path and the chord joining its endpoints.
inline double signed_area_to_chord(const std::vector<cplx>& pts) {
  double a = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) a += detail::cross(pts[k], pts[(k + 1) % pts.size()]);
  return 0.5 * a;
}

inline std::vector<cplx> reversed_points(const ExplorationState& st) { return {st.points.rbegin(), st.points.rend()}; }

/// Forward exploration a -> c versus the reversal of the exploration c -> a
/// (run with yellow on its right): two-sample tests on signed area,
/// length and midpoint.
inline TwoSampleReport reversal_check(const AdmissibleDomain& d, ModelParams params, std::size_t n_seeds,
                                      std::uint64_t seed) {
  const FlowerTables tab(params);
  std::vector<double> fa, ra, fl, rl, fm, rm;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    auto g = make_stream(seed, i, 0x71);
    const auto f = explore(d, tab, g, true);
    auto g2 = make_stream(seed, i, 0x72);
    const auto b = explore(d, tab, g2, false);
    const auto bp = reversed_points(b);
    fa.push_back(signed_area_to_chord(f.points));
    ra.push_back(signed_area_to_chord(bp));
    fl.push_back(static_cast<double>(f.steps()));
    rl.push_back(static_cast<double>(b.steps()));
    fm.push_back(f.points[f.points.size() / 2].real());
    rm.push_back(bp[bp.size() / 2].real());
  }
  TwoSampleReport r;
  r.n = n_seeds;
  for (auto [name, a, b] : {std::tuple{"signed_area", &fa, &ra}, std::tuple{"steps", &fl, &rl}, std::tuple{"mid_x", &fm, &rm}}) {
    const auto ks = ks_two_sample(*a, *b);
    r.statistic.emplace_back(name);
    r.ks.push_back(ks.statistic);
    r.p_value.push_back(ks.p_value);
  }
  return r;
}

}  // namespace slelab
