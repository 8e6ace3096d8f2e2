#include <gtest/gtest.h>

#include <map>
#include <queue>
#include <random>
#include <set>

#include "slelab/geometry.hpp"

using namespace slelab;

namespace {

// Plain real arithmetic for i(z+1)/(1-z).
std::pair<double, double> phi_by_hand(double x, double y) {
  const double nr = -y, ni = x + 1.0;    // i (z + 1)
  const double dr = 1.0 - x, di = -y;    // 1 - z
  const double den = dr * dr + di * di;
  return {(nr * dr + ni * di) / den, (ni * dr - nr * di) / den};
}

// Arc-length resampling written independently of the library helper.
std::vector<cplx> oracle_resample(const std::vector<cplx>& p, int g) {
  double total = 0;
  for (size_t k = 1; k < p.size(); ++k) total += std::abs(p[k] - p[k - 1]);
  std::vector<cplx> out;
  for (int j = 0; j < g; ++j) {
    double s = total * j / (g - 1);
    size_t k = 1;
    double acc = 0;
    while (k + 1 < p.size() && acc + std::abs(p[k] - p[k - 1]) < s) {
      acc += std::abs(p[k] - p[k - 1]);
      ++k;
    }
    const double len = std::abs(p[k] - p[k - 1]);
    const double u = len > 0 ? std::min(1.0, std::max(0.0, (s - acc) / len)) : 0.0;
    out.push_back(p[k - 1] + u * (p[k] - p[k - 1]));
  }
  out.back() = p.back();
  return out;
}

// Discrete Frechet distance by thresholding: a coupling within eps exists
// iff the free cells connect the corners by monotone moves (BFS).
bool coupling_within(const std::vector<cplx>& a, const std::vector<cplx>& b, double eps) {
  const size_t n = a.size(), m = b.size();
  if (std::abs(a[0] - b[0]) > eps) return false;
  std::vector<char> seen(n * m, 0);
  std::queue<std::pair<size_t, size_t>> q;
  q.push({0, 0});
  seen[0] = 1;
  while (!q.empty()) {
    auto [i, j] = q.front();
    q.pop();
    if (i == n - 1 && j == m - 1) return true;
    const std::pair<size_t, size_t> nxt[3] = {{i + 1, j}, {i, j + 1}, {i + 1, j + 1}};
    for (auto [x, y] : nxt) {
      if (x >= n || y >= m || seen[x * m + y]) continue;
      if (std::abs(a[x] - b[y]) > eps) continue;
      seen[x * m + y] = 1;
      q.push({x, y});
    }
  }
  return false;
}

double oracle_frechet(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  std::set<double> cands;
  for (auto p : a)
    for (auto q : b) cands.insert(std::abs(p - q));
  std::vector<double> v(cands.begin(), cands.end());
  size_t lo = 0, hi = v.size() - 1;
  while (lo < hi) {
    const size_t mid = (lo + hi) / 2;
    if (coupling_within(a, b, v[mid])) hi = mid;
    else lo = mid + 1;
  }
  return v[lo];
}

Curve random_curve(std::mt19937_64& g, int n) {
  std::normal_distribution<double> nd;
  std::vector<cplx> pts{{0, 0}};
  for (int k = 1; k < n; ++k) pts.push_back(pts.back() + cplx(nd(g), std::abs(nd(g))) * 0.3);
  return Curve::from_points(pts);
}

}  // namespace

TEST(Mobius, FixedNormalization) {
  EXPECT_EQ(mobius_disk_to_halfplane({-1, 0}).value(), cplx(0, 0));
  EXPECT_NEAR(std::abs(mobius_disk_to_halfplane({0, 0}).value() - cplx(0, 1)), 0.0, 1e-15);
  EXPECT_TRUE(mobius_disk_to_halfplane({1, 0}).is_infinite());
}

TEST(Mobius, ImageOfIMatchesHandArithmetic) {
  const auto [re, im] = phi_by_hand(0.0, 1.0);
  const cplx got = mobius_disk_to_halfplane({0, 1}).value();
  EXPECT_NEAR(got.real(), re, 1e-15);
  EXPECT_NEAR(got.imag(), im, 1e-15);
  EXPECT_NEAR(re, -1.0, 1e-15);
  EXPECT_NEAR(im, 0.0, 1e-15);
}

TEST(Mobius, RoundTripOnHalfPlaneGrid) {
  double worst = 0;
  for (int a = -40; a <= 40; ++a)
    for (int b = 0; b <= 40; ++b) {
      const cplx w(a * 0.25, b * 0.25);
      const cplx z = mobius_halfplane_to_disk(w);
      worst = std::max(worst, std::abs(mobius_disk_to_halfplane(z).value() - w) / (1.0 + std::abs(w)));
    }
  EXPECT_LT(worst, 1e-12);
  EXPECT_EQ(mobius_halfplane_to_disk(ExtPoint::infinity()), cplx(1, 0));
}

TEST(Dstar, Examples) {
  EXPECT_DOUBLE_EQ(dstar_metric(cplx(0, 0), cplx(0, 0)), 0.0);
  EXPECT_NEAR(dstar_metric(cplx(0, 1), ExtPoint::infinity()), 1.0, 1e-15);
  EXPECT_NEAR(dstar_metric(cplx(0, 0), ExtPoint::infinity()), 2.0, 1e-15);
}

TEST(Dstar, MetricAxiomsOnRandomTriples) {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> ux(-5, 5), uy(0, 5);
  for (int k = 0; k < 2000; ++k) {
    ExtPoint p[3];
    for (auto& q : p) q = (g() % 17 == 0) ? ExtPoint::infinity() : ExtPoint(ux(g), uy(g));
    EXPECT_DOUBLE_EQ(dstar_metric(p[0], p[0]), 0.0);
    EXPECT_DOUBLE_EQ(dstar_metric(p[0], p[1]), dstar_metric(p[1], p[0]));
    EXPECT_LE(dstar_metric(p[0], p[2]), dstar_metric(p[0], p[1]) + dstar_metric(p[1], p[2]) + 1e-14);
  }
}

TEST(CurveDistance, IdentityAndTranslation) {
  const Curve seg = Curve::from_points({{0, 0}, {0, 1}});
  const Curve shifted = Curve::from_points({{0.1, 0}, {0.1, 1}});
  EXPECT_DOUBLE_EQ(curve_distance(seg, seg, 20), 0.0);
  EXPECT_NEAR(curve_distance(seg, shifted, 20), 0.1, 1e-12);
  EXPECT_THROW(curve_distance(seg, seg, 1), Error);
}

TEST(CurveDistance, MatchesExhaustiveAlignmentAtGrid50) {
  const Curve a = Curve::from_points({{0, 0}, {0.2, 0.5}, {0.1, 1.0}, {0.6, 1.2}, {1.0, 1.0}});
  const Curve b = Curve::from_points({{0, 0}, {0.4, 0.2}, {0.5, 0.9}, {0.9, 0.6}, {1.1, 1.3}});
  double oracle = 1e300;
  for (int gsz = 2; gsz <= 50; ++gsz)
    oracle = std::min(oracle, oracle_frechet(oracle_resample(a.points, gsz), oracle_resample(b.points, gsz)));
  EXPECT_NEAR(curve_distance(a, b, 50), oracle, 1e-12);
}

TEST(CurveDistance, SymmetricZeroOnSelfAndMonotoneInGrid) {
  std::mt19937_64 g(11);
  for (int k = 0; k < 20; ++k) {
    const Curve a = random_curve(g, 8), b = random_curve(g, 6);
    EXPECT_DOUBLE_EQ(curve_distance(a, a, 12), 0.0);
    EXPECT_NEAR(curve_distance(a, b, 12), curve_distance(b, a, 12), 1e-12);
    EXPECT_LE(curve_distance(a, b, 24), curve_distance(a, b, 12));
  }
}

TEST(Hex, NeighborsOrderAndTranslation) {
  const auto n0 = hex_neighbors({0, 0});
  const HexCoord expect[6] = {{1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}};
  for (int k = 0; k < 6; ++k) EXPECT_EQ(n0[k], expect[k]);
  const auto n1 = hex_neighbors({2, -1});
  for (int k = 0; k < 6; ++k) EXPECT_EQ(n1[k], (expect[k] + HexCoord{2, -1}));
  // east first, then counter-clockwise in the plane
  double prev = -1;
  for (int k = 0; k < 6; ++k) {
    double ang = std::arg(hex_center(n0[k], 1.0));
    if (ang < -1e-12) ang += 2 * std::numbers::pi;
    EXPECT_GT(ang, prev);
    EXPECT_NEAR(std::abs(hex_center(n0[k], 1.0)), 1.0, 1e-12);
    prev = ang;
  }
}

TEST(Hex, NeighborSymmetry) {
  for (int q = -3; q <= 3; ++q)
    for (int r = -3; r <= 3; ++r)
      for (auto h : hex_neighbors({q, r})) {
        const auto back = hex_neighbors(h);
        EXPECT_NE(std::find(back.begin(), back.end(), HexCoord{q, r}), back.end());
      }
}

TEST(Hex, AxialDistanceEqualsBfsDistance) {
  std::map<HexCoord, int> dist{{{0, 0}, 0}};
  std::queue<HexCoord> q;
  q.push({0, 0});
  while (!q.empty()) {
    const HexCoord h = q.front();
    q.pop();
    if (dist[h] == 10) continue;
    for (auto n : hex_neighbors(h))
      if (!dist.count(n)) {
        dist[n] = dist[h] + 1;
        q.push(n);
      }
  }
  EXPECT_EQ(dist.size(), 1u + 3u * 10u * 11u);
  for (auto [h, d] : dist) EXPECT_EQ(hex_distance(h, {0, 0}), d);
}

TEST(Hex, VerticesSharedWithNeighbours) {
  const double mesh = 0.37;
  for (int k = 0; k < 6; ++k) {
    const cplx v = hex_vertex({0, 0}, k, mesh);
    EXPECT_NEAR(std::abs(v - hex_vertex(kHexDirections[k], (k + 2) % 6, mesh)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(v - hex_vertex(kHexDirections[(k + 1) % 6], (k + 4) % 6, mesh)), 0.0, 1e-12);
  }
  EXPECT_EQ(hex_round(hex_center({5, -3}, mesh) + cplx(0.1, -0.05) * mesh, mesh), (HexCoord{5, -3}));
}

TEST(Jordan, OrientationMarkedPointsAndArcs) {
  const JordanDomain sq({{0, 0}, {0, 1}, {1, 1}, {1, 0}}, {});
  EXPECT_GT(detail::signed_area(sq.boundary()), 0.0);
  EXPECT_NEAR(sq.perimeter(), 4.0, 1e-15);
  EXPECT_TRUE(sq.contains({0.5, 0.5}));
  EXPECT_FALSE(sq.contains({1.5, 0.5}));
  const auto m = sq.with_marked({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  EXPECT_EQ(m.marked().size(), 4u);
  EXPECT_THROW(sq.with_marked({{0, 0}, {0, 1}, {1, 1}}), Error);
  EXPECT_THROW(sq.with_marked({{0.5, 0.5}}), Error);
  EXPECT_THROW(JordanDomain({{0, 0}, {1, 1}, {1, 0}, {0, 1}}, {}), Error);
  const auto arc = m.arc(m.marked_params()[1], m.marked_params()[3]);
  EXPECT_EQ(arc.size(), 3u);
  EXPECT_NEAR(polyline_length(arc), 2.0, 1e-12);
}

TEST(Annulus, RejectsBadRadii) {
  EXPECT_THROW(Annulus({0, 0}, 0.0, 1.0), Error);
  EXPECT_THROW(Annulus({0, 0}, 2.0, 1.0), Error);
  EXPECT_NO_THROW(Annulus({0, 0}, 0.5, 1.0));
}
