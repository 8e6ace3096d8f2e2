#pragma once
// Complex-plane primitives, hexagonal lattice coordinates, polygonal Jordan
// domains, the disk/half-plane Moebius map and the curve metric.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace slelab {

using cplx = std::complex<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point of the extended plane. Infinity is a tag, never a large float.
class ExtPoint {
 public:
  constexpr ExtPoint() = default;
  constexpr ExtPoint(cplx z) : z_(z) {}  // NOLINT: implicit from finite points
  constexpr ExtPoint(double re, double im) : z_(re, im) {}

  static constexpr ExtPoint infinity() {
    ExtPoint p;
    p.infinite_ = true;
    return p;
  }

  [[nodiscard]] constexpr bool is_infinite() const { return infinite_; }
  [[nodiscard]] cplx value() const {
    if (infinite_) throw Error("ExtPoint: value() of the point at infinity");
    return z_;
  }

  friend bool operator==(const ExtPoint& a, const ExtPoint& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.z_ == b.z_;
  }

 private:
  cplx z_{};
  bool infinite_ = false;
};

enum class Ambient { HalfPlane, Disk };

inline char ambient_tag(Ambient a) { return a == Ambient::HalfPlane ? 'H' : 'D'; }

inline Ambient parse_ambient(const std::string& s) {
  if (s == "H") return Ambient::HalfPlane;
  if (s == "D") return Ambient::Disk;
  throw Error("unknown ambient tag '" + s + "'");
}

// ---------------------------------------------------------------------------
// Moebius map between (D; -1, 1) and (H; 0, inf)

/// z -> i (z + 1) / (1 - z). Sends -1 to 0, 0 to i and 1 to infinity.
inline ExtPoint mobius_disk_to_halfplane(cplx z) {
  const cplx den = 1.0 - z;
  if (den == cplx(0.0, 0.0)) return ExtPoint::infinity();
  return {cplx(0.0, 1.0) * (z + 1.0) / den};
}

/// Inverse map w -> (w - i) / (w + i); infinity goes to 1.
inline cplx mobius_halfplane_to_disk(const ExtPoint& w) {
  if (w.is_infinite()) return {1.0, 0.0};
  const cplx v = w.value();
  const cplx i(0.0, 1.0);
  if (v == -i) throw Error("mobius_halfplane_to_disk: -i has no image in the closed disk");
  return (v - i) / (v + i);
}

/// Metric on the closed half-plane plus infinity, pulled back from the disk.
inline double dstar_metric(const ExtPoint& z, const ExtPoint& w) {
  return std::abs(mobius_halfplane_to_disk(z) - mobius_halfplane_to_disk(w));
}

// ---------------------------------------------------------------------------
// Curves

struct Curve {
  std::vector<double> times;
  std::vector<cplx> points;
  Ambient ambient = Ambient::HalfPlane;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] bool empty() const { return points.empty(); }

  /// Times strictly increasing from 0 and aligned with the points.
  [[nodiscard]] bool well_formed() const {
    if (times.size() != points.size() || times.empty()) return false;
    if (times.front() != 0.0) return false;
    for (std::size_t k = 1; k < times.size(); ++k)
      if (!(times[k] > times[k - 1])) return false;
    for (const auto& p : points)
      if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) return false;
    return true;
  }

  /// Polyline with times 0, 1, 2, ...
  static Curve from_points(std::vector<cplx> pts, Ambient amb = Ambient::HalfPlane) {
    Curve c;
    c.ambient = amb;
    c.points = std::move(pts);
    c.times.resize(c.points.size());
    for (std::size_t k = 0; k < c.times.size(); ++k) c.times[k] = static_cast<double>(k);
    return c;
  }

  /// Prefix of the curve with times <= t.
  [[nodiscard]] Curve prefix(double t) const {
    Curve c;
    c.ambient = ambient;
    for (std::size_t k = 0; k < size() && times[k] <= t; ++k) {
      c.times.push_back(times[k]);
      c.points.push_back(points[k]);
    }
    return c;
  }
};

/// Shortest round-trip text for a double.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// `# curve ambient=<H|D> n=<N>` then N rows `t re im`.
inline void write_curve(std::ostream& os, const Curve& c) {
  os << "# curve ambient=" << ambient_tag(c.ambient) << " n=" << c.size() << "\n";
  for (std::size_t k = 0; k < c.size(); ++k)
    os << format_double(c.times[k]) << ' ' << format_double(c.points[k].real()) << ' ' << format_double(c.points[k].imag()) << "\n";
}

inline Curve read_curve(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("read_curve: empty input");
  char amb = 0;
  std::size_t n = 0;
  if (std::sscanf(line.c_str(), "# curve ambient=%c n=%zu", &amb, &n) != 2) throw Error("read_curve: bad header '" + line + "'");
  Curve c;
  c.ambient = parse_ambient(std::string(1, amb));
  for (std::size_t k = 0; k < n; ++k) {
    double t, x, y;
    if (!(is >> t >> x >> y)) throw Error("read_curve: expected " + std::to_string(n) + " rows, got " + std::to_string(k));
    c.times.push_back(t);
    c.points.emplace_back(x, y);
  }
  return c;
}

inline double polyline_length(const std::vector<cplx>& pts) {
  double len = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) len += std::abs(pts[k] - pts[k - 1]);
  return len;
}

/// Diameter of a point set; quadratic, exact for polylines since the
/// diameter of a segment union is attained at vertices.
inline double point_set_diameter(const cplx* first, const cplx* last) {
  double d = 0.0;
  for (const cplx* a = first; a != last; ++a)
    for (const cplx* b = a + 1; b != last; ++b) d = std::max(d, std::abs(*a - *b));
  return d;
}

inline double point_set_diameter(const std::vector<cplx>& pts) {
  return point_set_diameter(pts.data(), pts.data() + pts.size());
}

/// Samples a polyline at `count` points equally spaced in arc length.
inline std::vector<cplx> resample_by_arclength(const std::vector<cplx>& pts, std::size_t count) {
  if (pts.empty() || count == 0) return {};
  if (pts.size() == 1 || count == 1) return std::vector<cplx>(count, pts.front());
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t k = 1; k < pts.size(); ++k) cum[k] = cum[k - 1] + std::abs(pts[k] - pts[k - 1]);
  const double total = cum.back();
  std::vector<cplx> out(count);
  std::size_t seg = 1;
  for (std::size_t j = 0; j < count; ++j) {
    const double s = total * static_cast<double>(j) / static_cast<double>(count - 1);
    while (seg + 1 < pts.size() && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double u = len > 0.0 ? std::clamp((s - cum[seg - 1]) / len, 0.0, 1.0) : 0.0;
    out[j] = pts[seg - 1] + u * (pts[seg] - pts[seg - 1]);
  }
  out.front() = pts.front();
  out.back() = pts.back();
  return out;
}

namespace detail {

// Discrete Frechet distance by the standard coupling DP.
inline double discrete_frechet(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> prev(m), cur(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = std::abs(a[i] - b[j]);
      double best;
      if (i == 0 && j == 0) best = d;
      else if (i == 0) best = std::max(cur[j - 1], d);
      else if (j == 0) best = std::max(prev[j], d);
      else best = std::max(std::min({prev[j], prev[j - 1], cur[j - 1]}), d);
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

}  // namespace detail

/// Upper bound on the curve metric (inf over reparameterizations of the sup
/// distance). Both curves are resampled at g equally spaced arc-length
/// points and aligned by monotone couplings; the result is the minimum over
/// all grids 2..reparam_grid, so it is weakly decreasing in the grid size.
/// Cost is cubic in reparam_grid.
inline double curve_distance(const Curve& c1, const Curve& c2, int reparam_grid) {
  if (reparam_grid < 2) throw Error("curve_distance: reparam_grid must be >= 2");
  if (c1.empty() || c2.empty()) throw Error("curve_distance: empty curve");
  double best = std::numeric_limits<double>::infinity();
  for (int g = 2; g <= reparam_grid; ++g) {
    const auto a = resample_by_arclength(c1.points, static_cast<std::size_t>(g));
    const auto b = resample_by_arclength(c2.points, static_cast<std::size_t>(g));
    best = std::min(best, detail::discrete_frechet(a, b));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Hexagonal lattice (pointy-top, axial coordinates)

struct HexCoord {
  int q = 0;
  int r = 0;

  friend constexpr bool operator==(const HexCoord&, const HexCoord&) = default;
  friend constexpr auto operator<=>(const HexCoord&, const HexCoord&) = default;
  constexpr HexCoord operator+(const HexCoord& o) const { return {q + o.q, r + o.r}; }
  constexpr HexCoord operator-(const HexCoord& o) const { return {q - o.q, r - o.r}; }
};

/// Unit axial offsets: east, then counter-clockwise.
inline constexpr std::array<HexCoord, 6> kHexDirections{
    {{1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}}};

inline std::array<HexCoord, 6> hex_neighbors(HexCoord h) {
  std::array<HexCoord, 6> out{};
  for (int k = 0; k < 6; ++k) out[static_cast<std::size_t>(k)] = h + kHexDirections[static_cast<std::size_t>(k)];
  return out;
}

/// Index k with b == a + kHexDirections[k], or -1 when not adjacent.
inline int hex_direction_index(HexCoord a, HexCoord b) {
  const HexCoord d = b - a;
  for (int k = 0; k < 6; ++k)
    if (kHexDirections[static_cast<std::size_t>(k)] == d) return k;
  return -1;
}

inline int hex_distance(HexCoord a, HexCoord b) {
  const int dq = a.q - b.q, dr = a.r - b.r;
  return (std::abs(dq) + std::abs(dr) + std::abs(dq + dr)) / 2;
}

/// Plane position of a hexagon centre; `mesh` is the centre-to-centre spacing.
inline cplx hex_center(HexCoord h, double mesh) {
  return {mesh * (h.q + 0.5 * h.r), mesh * (std::numbers::sqrt3 / 2.0) * h.r};
}

/// Vertex k of a hexagon sits at angle 60k + 30 degrees, between the
/// neighbours in directions k and k+1.
inline cplx hex_vertex(HexCoord h, int k, double mesh) {
  const double ang = std::numbers::pi / 180.0 * (60.0 * k + 30.0);
  return hex_center(h, mesh) + (mesh / std::numbers::sqrt3) * cplx(std::cos(ang), std::sin(ang));
}

/// Nearest hexagon to a plane point (cube rounding).
inline HexCoord hex_round(cplx p, double mesh) {
  const double rf = p.imag() / (mesh * std::numbers::sqrt3 / 2.0);
  const double qf = p.real() / mesh - 0.5 * rf;
  const double sf = -qf - rf;
  double rq = std::round(qf), rr = std::round(rf), rs = std::round(sf);
  const double dq = std::abs(rq - qf), dr = std::abs(rr - rf), ds = std::abs(rs - sf);
  if (dq > dr && dq > ds) rq = -rr - rs;
  else if (dr > ds) rr = -rq - rs;
  return {static_cast<int>(rq), static_cast<int>(rr)};
}

struct HexHash {
  std::size_t operator()(const HexCoord& h) const noexcept {
    return std::hash<std::int64_t>{}((static_cast<std::int64_t>(h.q) << 32) ^ static_cast<std::uint32_t>(h.r));
  }
};

// ---------------------------------------------------------------------------
// Polygonal Jordan domains

struct Annulus {
  cplx center{};
  double r_inner = 0.0;
  double r_outer = 0.0;

  Annulus() = default;
  Annulus(cplx c, double r, double R) : center(c), r_inner(r), r_outer(R) {
    if (!(r > 0.0) || !(R > r)) throw Error("Annulus: need 0 < r_inner < r_outer");
  }
};

namespace detail {

inline double cross(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

// Proper or touching intersection of closed segments [p1,p2] and [q1,q2].
inline bool segments_intersect(cplx p1, cplx p2, cplx q1, cplx q2) {
  const double d1 = cross(p2 - p1, q1 - p1), d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1), d4 = cross(q2 - q1, p2 - q1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  auto on_seg = [](cplx a, cplx b, cplx p) {
    return std::min(a.real(), b.real()) <= p.real() && p.real() <= std::max(a.real(), b.real()) &&
           std::min(a.imag(), b.imag()) <= p.imag() && p.imag() <= std::max(a.imag(), b.imag());
  };
  if (d1 == 0 && on_seg(p1, p2, q1)) return true;
  if (d2 == 0 && on_seg(p1, p2, q2)) return true;
  if (d3 == 0 && on_seg(q1, q2, p1)) return true;
  if (d4 == 0 && on_seg(q1, q2, p2)) return true;
  return false;
}

// Strict crossing: interiors intersect transversally.
inline bool segments_cross(cplx p1, cplx p2, cplx q1, cplx q2) {
  const double d1 = cross(p2 - p1, q1 - p1), d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1), d4 = cross(q2 - q1, p2 - q1);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

inline double point_segment_distance(cplx p, cplx a, cplx b, double* param = nullptr) {
  const cplx ab = b - a;
  const double len2 = std::norm(ab);
  double u = len2 > 0.0 ? ((p - a).real() * ab.real() + (p - a).imag() * ab.imag()) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  if (param) *param = u;
  return std::abs(p - (a + u * ab));
}

inline double segment_distance(cplx a, cplx b, cplx c, cplx d) {
  if (segments_cross(a, b, c, d)) return 0.0;
  return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d), point_segment_distance(c, a, b),
                   point_segment_distance(d, a, b)});
}

// Even-odd point-in-polygon test.
inline bool point_in_polygon(cplx p, const std::vector<cplx>& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const cplx a = poly[i], b = poly[j];
    if ((a.imag() > p.imag()) != (b.imag() > p.imag())) {
      const double x = a.real() + (p.imag() - a.imag()) / (b.imag() - a.imag()) * (b.real() - a.real());
      if (p.real() < x) inside = !inside;
    }
  }
  return inside;
}

inline double signed_area(const std::vector<cplx>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

}  // namespace detail

/// Index k of the first polyline point whose incoming segment comes within
/// `tol` of an earlier non-adjacent segment; repeated points are ignored.
inline std::optional<std::size_t> first_self_crossing(const std::vector<cplx>& pts, double tol) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < pts.size(); ++k)
    if (idx.empty() || pts[k] != pts[idx.back()]) idx.push_back(k);
  if (idx.size() < 4) return std::nullopt;
  double xmin = pts[idx[0]].real(), ymin = pts[idx[0]].imag(), xmax = xmin, ymax = ymin, len = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const cplx p = pts[idx[k]];
    xmin = std::min(xmin, p.real());
    xmax = std::max(xmax, p.real());
    ymin = std::min(ymin, p.imag());
    ymax = std::max(ymax, p.imag());
    if (k > 0) len += std::abs(p - pts[idx[k - 1]]);
  }
  const double cell = std::max(len / static_cast<double>(idx.size() - 1), 1e-300);
  const auto nx = static_cast<long>(std::min(4096.0, std::floor((xmax - xmin) / cell) + 1));
  const auto ny = static_cast<long>(std::min(4096.0, std::floor((ymax - ymin) / cell) + 1));
  const double cx = (xmax - xmin) / static_cast<double>(nx) + 1e-300, cy = (ymax - ymin) / static_cast<double>(ny) + 1e-300;
  std::vector<std::vector<std::size_t>> grid(static_cast<std::size_t>(nx * ny));
  auto cell_range = [&](cplx a, cplx b, long& x0, long& x1, long& y0, long& y1) {
    auto clampx = [&](double v) { return std::clamp(static_cast<long>(std::floor((v - xmin) / cx)), 0L, nx - 1); };
    auto clampy = [&](double v) { return std::clamp(static_cast<long>(std::floor((v - ymin) / cy)), 0L, ny - 1); };
    x0 = clampx(std::min(a.real(), b.real()) - tol);
    x1 = clampx(std::max(a.real(), b.real()) + tol);
    y0 = clampy(std::min(a.imag(), b.imag()) - tol);
    y1 = clampy(std::max(a.imag(), b.imag()) + tol);
  };
  std::vector<std::size_t> stamp(idx.size(), 0);
  for (std::size_t s = 0; s + 1 < idx.size(); ++s) {
    const cplx a = pts[idx[s]], b = pts[idx[s + 1]];
    long x0, x1, y0, y1;
    cell_range(a, b, x0, x1, y0, y1);
    for (long x = x0; x <= x1; ++x)
      for (long y = y0; y <= y1; ++y)
        for (std::size_t j : grid[static_cast<std::size_t>(x * ny + y)]) {
          if (j + 1 >= s || stamp[j] == s + 1) continue;
          stamp[j] = s + 1;
          if (detail::segment_distance(a, b, pts[idx[j]], pts[idx[j + 1]]) <= tol) return idx[s + 1];
        }
    for (long x = x0; x <= x1; ++x)
      for (long y = y0; y <= y1; ++y) grid[static_cast<std::size_t>(x * ny + y)].push_back(s);
  }
  return std::nullopt;
}

/// Simple closed polygon, stored counter-clockwise, with marked boundary
/// points given in counter-clockwise cyclic order.
class JordanDomain {
 public:
  JordanDomain() = default;

  JordanDomain(std::vector<cplx> boundary, std::vector<cplx> marked) : boundary_(std::move(boundary)) {
    if (boundary_.size() >= 2 && boundary_.front() == boundary_.back()) boundary_.pop_back();
    if (boundary_.size() < 3) throw Error("JordanDomain: need at least 3 boundary vertices");
    if (detail::signed_area(boundary_) < 0) std::reverse(boundary_.begin(), boundary_.end());
    if (!simple()) throw Error("JordanDomain: boundary polygon is not simple");
    cum_.assign(boundary_.size() + 1, 0.0);
    for (std::size_t k = 0; k < boundary_.size(); ++k)
      cum_[k + 1] = cum_[k] + std::abs(boundary_[(k + 1) % boundary_.size()] - boundary_[k]);
    for (const auto& m : marked) {
      double dist = 0.0;
      const double s = project(m, &dist);
      if (dist > 1e-9 * (1.0 + perimeter())) throw Error("JordanDomain: marked point is not on the boundary");
      marked_.push_back(point_at(s));
      marked_params_.push_back(s);
    }
    for (std::size_t k = 2; k < marked_params_.size(); ++k) {
      const double a = ccw_offset(marked_params_[0], marked_params_[k - 1]);
      const double b = ccw_offset(marked_params_[0], marked_params_[k]);
      if (!(b > a)) throw Error("JordanDomain: marked points are not in counter-clockwise order");
    }
  }

  static JordanDomain rectangle(double width, double height) {
    return {{{0, 0}, {width, 0}, {width, height}, {0, height}}, {}};
  }

  /// Regular polygon approximating the disk; the vertex count governs accuracy.
  static JordanDomain disk(double radius, int vertices = 720, cplx center = {0, 0}) {
    std::vector<cplx> pts;
    for (int k = 0; k < vertices; ++k) {
      const double ang = 2.0 * std::numbers::pi * k / vertices + std::numbers::pi;
      pts.push_back(center + radius * cplx(std::cos(ang), std::sin(ang)));
    }
    return {std::move(pts), {}};
  }

  static JordanDomain equilateral_triangle(double side) {
    return {{{0, 0}, {side, 0}, {side / 2, side * std::numbers::sqrt3 / 2}}, {}};
  }

  [[nodiscard]] JordanDomain with_marked(std::vector<cplx> marked) const { return {boundary_, std::move(marked)}; }

  [[nodiscard]] const std::vector<cplx>& boundary() const { return boundary_; }
  [[nodiscard]] const std::vector<cplx>& marked() const { return marked_; }
  [[nodiscard]] const std::vector<double>& marked_params() const { return marked_params_; }
  [[nodiscard]] double perimeter() const { return cum_.back(); }

  [[nodiscard]] bool contains(cplx p) const { return detail::point_in_polygon(p, boundary_); }

  /// Arc-length parameter of the nearest boundary point.
  double project(cplx p, double* dist = nullptr) const {
    double best = std::numeric_limits<double>::infinity(), best_s = 0.0;
    const std::size_t n = boundary_.size();
    for (std::size_t k = 0; k < n; ++k) {
      double u = 0.0;
      const double d = detail::point_segment_distance(p, boundary_[k], boundary_[(k + 1) % n], &u);
      if (d < best) {
        best = d;
        best_s = cum_[k] + u * (cum_[k + 1] - cum_[k]);
      }
    }
    if (dist) *dist = best;
    return best_s;
  }

  [[nodiscard]] cplx point_at(double s) const {
    const double per = perimeter();
    s = std::fmod(std::fmod(s, per) + per, per);
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cum_.begin()) - 1, boundary_.size() - 1);
    const double len = cum_[k + 1] - cum_[k];
    const double u = len > 0 ? (s - cum_[k]) / len : 0.0;
    return boundary_[k] + u * (boundary_[(k + 1) % boundary_.size()] - boundary_[k]);
  }

  /// Counter-clockwise arc length travelled from parameter `from` to `to`.
  [[nodiscard]] double ccw_offset(double from, double to) const {
    const double per = perimeter();
    return std::fmod(std::fmod(to - from, per) + per, per);
  }

  /// Boundary points strictly between parameters `from` and `to` going
  /// counter-clockwise, including the endpoints themselves.
  [[nodiscard]] std::vector<cplx> arc(double from, double to) const {
    const double len = ccw_offset(from, to);
    const std::size_t n = boundary_.size();
    std::vector<std::pair<double, std::size_t>> inner;
    for (std::size_t k = 0; k < n; ++k) {
      const double off = ccw_offset(from, cum_[k]);
      if (off > 0 && off < len) inner.emplace_back(off, k);
    }
    std::sort(inner.begin(), inner.end());
    std::vector<cplx> out{point_at(from)};
    for (const auto& [off, k] : inner) out.push_back(boundary_[k]);
    out.push_back(point_at(to));
    return out;
  }

  [[nodiscard]] double diameter() const { return point_set_diameter(boundary_); }

 private:
  [[nodiscard]] bool simple() const {
    const std::size_t n = boundary_.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        if (j == i + 1 || (i == 0 && j == n - 1)) continue;
        if (detail::segments_intersect(boundary_[i], boundary_[(i + 1) % n], boundary_[j], boundary_[(j + 1) % n]))
          return false;
      }
    return true;
  }

  std::vector<cplx> boundary_;
  std::vector<cplx> marked_;
  std::vector<double> marked_params_;
  std::vector<double> cum_;
};

}  // namespace slelab
