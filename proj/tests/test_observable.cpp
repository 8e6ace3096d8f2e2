#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "slelab/observable.hpp"

using namespace slelab;

namespace {

// Independent oracle: normalised incomplete beta by tanh-sinh quadrature.
double cardy_quadrature(double x) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto f = [](double u) { return std::pow(u * (1.0 - u), -2.0 / 3.0); };
  const double total = 2.0 * integrator.integrate(f, 0.0, 0.5);
  // past 1/2 substitute u -> 1 - u so the singular endpoint stays at 0
  return x <= 0.5 ? integrator.integrate(f, 0.0, x) / total : 1.0 - integrator.integrate(f, 0.0, 1.0 - x) / total;
}

// K(k) via the arithmetic-geometric mean.
double agm_K(double k) {
  double a = 1.0, b = std::sqrt(1.0 - k * k);
  for (int i = 0; i < 60; ++i) {
    const double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return M_PI / (2.0 * a);
}

AdmissibleDomain square_domain(double mesh, int period = 0) {
  FlowerArrangement arr;
  arr.period = period;
  return build_admissible(JordanDomain::rectangle(1, 1).with_marked({{0, 0}, {1, 0}, {1, 1}, {0, 1}}), mesh, arr);
}

}  // namespace

TEST(Cardy, HalfAndSymmetry) {
  EXPECT_NEAR(cardy_F(0.5), 0.5, 1e-10);
  double prev = 0.0;
  for (int k = 1; k < 1000; ++k) {
    const double x = k / 1000.0;
    EXPECT_NEAR(cardy_F(x) + cardy_F(1 - x), 1.0, 1e-10);
    EXPECT_GT(cardy_F(x), prev);
    prev = cardy_F(x);
  }
  EXPECT_EQ(cardy_F(0.0), 0.0);
  EXPECT_NEAR(cardy_F(1.0), 1.0, 1e-15);
  EXPECT_LT(cardy_F(1e-9), 1e-2);
  EXPECT_THROW(cardy_F(1.5), Error);
}

TEST(Cardy, MatchesQuadratureOracle) {
  for (double x : {0.01, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 0.99}) EXPECT_NEAR(cardy_F(x), cardy_quadrature(x), 1e-10) << x;
}

TEST(Cardy, RectangleCrossRatio) {
  // square: symmetry
  EXPECT_NEAR(rectangle_cross_ratio(1.0, 1.0), 0.5, 1e-12);
  for (double ratio : {0.5, 2.0, 3.0}) {
    const double k = elliptic_modulus_for_ratio(ratio);
    EXPECT_NEAR(2 * agm_K(k) / agm_K(std::sqrt(1 - k * k)), ratio, 1e-9);
  }
  // crossing across a longer rectangle is less likely; reciprocal aspect gives the complement
  EXPECT_NEAR(cardy_F(rectangle_cross_ratio(2, 1)) + cardy_F(rectangle_cross_ratio(1, 2)), 1.0, 1e-10);
  const auto wide = JordanDomain::rectangle(2, 1).with_marked({{0, 1}, {0, 0}, {2, 0}, {2, 1}});
  EXPECT_NEAR(cardy_crossing(wide), cardy_F(rectangle_cross_ratio(2, 1)), 1e-14);
  EXPECT_LT(cardy_crossing(wide), 0.5);
  const auto disk = JordanDomain::disk(1.0).with_marked({{-1, 0}, {0, -1}, {1, 0}, {0, 1}});
  EXPECT_NEAR(cardy_crossing(disk), 0.5, 1e-10);
  EXPECT_THROW(cardy_crossing(JordanDomain::equilateral_triangle(1).with_marked({{0, 0}, {0.5, 0}, {1, 0}, {0.5, 0.8}})), Error);
  EXPECT_NEAR(cardy_crossing_halfplane(-1, 0, 1, 2), cardy_F(cross_ratio(-1, 0, 1, 2)), 0);
}

TEST(Bpz, ResidualAndNegativeControl) {
  const auto grid = uniform_grid(0.25, 0.75, 51);
  EXPECT_LT(bpz_residual(grid, 1e-3), 1e-4);
  EXPECT_LT(bpz_residual({0.5}, 1e-3), 1e-6);
  EXPECT_GT(bpz_residual(grid, 1e-3, 2.0), 1e-2);
  // closed-form derivatives satisfy the equation exactly
  for (double x : grid) {
    const double f1 = std::pow(x * (1 - x), -2.0 / 3.0);
    const double f2 = f1 * (-2.0 / 3.0) * (1 - 2 * x) / (x * (1 - x));
    EXPECT_NEAR(3 * f2 + (2 / x - 2 / (1 - x)) * f1, 0.0, 1e-12);
  }
  EXPECT_THROW(bpz_residual({0.0005}, 1e-3), Error);
}

TEST(Crossing, DualityBlueVersusYellow) {
  // exactly one of: blue ab <-> cd, yellow bc <-> da; also with split irises
  for (double s : {0.0, 0.15}) {
    const auto d = square_domain(1.0 / 20, 4);
    const FlowerTables t(ModelParams::from_s(s));
    std::mt19937_64 g(21);
    int blue = 0;
    for (int rep = 0; rep < 400; ++rep) {
      const auto conf = sample_configuration(d, t, g);
      const bool b = crossing(d, conf, kBlue, kArcAB, kArcCD);
      const bool y = crossing(d, conf, kYellow, kArcBC, kArcDA);
      ASSERT_NE(b, y);
      blue += b;
    }
    EXPECT_GT(blue, 120);
    EXPECT_LT(blue, 280);
  }
}

TEST(Crossing, SquareNearHalf) {
  const auto d = square_domain(1.0 / 32);
  const auto r = estimate_crossing(d, ModelParams{}, 3000, 4);
  EXPECT_NEAR(r.p, 0.5, 4 * r.se + 0.02);
  const auto r2 = estimate_crossing(d, ModelParams{}, 3000, 4);
  EXPECT_EQ(r.hits, r2.hits);
}

TEST(Ccs, BoundaryValues) {
  const auto d = square_domain(1.0 / 24);
  // arcs: ab bottom, bc right, cd top, da left
  const auto v = estimate_ccs(d, ModelParams{}, {{0.97, 0.5}, {0.03, 0.97}, {0.5, 0.5}}, 400, 9);
  EXPECT_EQ(v[0].s_d, 0.0);  // next to bc
  EXPECT_GE(v[1].s_d, 0.6);  // next to d
  for (const auto& x : v) {
    for (double s : {x.s_b, x.s_c, x.s_d}) {
      EXPECT_GE(s, 0.0);
      EXPECT_LE(s, 1.0);
    }
  }
  EXPECT_THROW(estimate_ccs(d, ModelParams{}, {{0.5, 0.5}}, 50, 1), Error);
}

TEST(Ccs, TriangleCentroidSymmetry) {
  const double side = 1.0;
  // b, c, d at the corners, a on side db
  const auto jd = JordanDomain::equilateral_triangle(side);
  const auto& bd = jd.boundary();
  cplx corners[3] = {bd[0], bd[1], bd[2]};
  const auto dom = jd.with_marked({0.5 * (corners[2] + corners[0]), corners[0], corners[1], corners[2]});
  const auto d = build_admissible(dom, 1.0 / 40);
  const cplx centroid = (corners[0] + corners[1] + corners[2]) / 3.0;
  const auto v = estimate_ccs(d, ModelParams{}, {centroid}, 3000, 13)[0];
  const double se = std::sqrt(v.se_b * v.se_b + v.se_c * v.se_c);
  EXPECT_NEAR(v.s_b, v.s_c, 3.5 * se);
  EXPECT_NEAR(v.s_c, v.s_d, 3.5 * std::sqrt(v.se_c * v.se_c + v.se_d * v.se_d));
  EXPECT_NEAR(v.s_b, 1.0 / 3, 0.08);
}

TEST(Martingale, ZeroStepsIsExact) {
  const auto d = square_domain(1.0 / 20);
  const auto rows = martingale_check(d, ModelParams{}, {{0.4, 0.4}, {0.6, 0.5}}, {0}, 200, 3);
  for (const auto& r : rows) {
    EXPECT_EQ(r.diff, 0.0);
    EXPECT_EQ(r.s0, r.sk);
  }
}

TEST(Martingale, WithinMonteCarloError) {
  const auto d = square_domain(1.0 / 24);
  for (double s : {0.0, 0.15}) {
    const auto rows = martingale_check(s == 0 ? d : square_domain(1.0 / 24, 4), ModelParams::from_s(s),
                                       {{0.3, 0.3}, {0.5, 0.5}}, {5, 20}, 800, 17);
    for (const auto& r : rows) {
      EXPECT_LE(std::abs(r.diff), 3.5 * r.se + 1e-12) << "s=" << s << " k=" << r.k;
      EXPECT_LT(r.max_component_z, 4.0);
    }
  }
}

TEST(Contour, ExactCancellation) {
  std::vector<cplx> ring;
  for (int k = 0; k <= 12; ++k) ring.push_back(std::polar(1.0, 2 * M_PI * k / 12));
  ring.back() = ring.front();
  std::vector<cplx> ones(ring.size(), 1.0), ident = ring;
  EXPECT_NEAR(std::abs(contour_integral(ring, ones)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(contour_integral(ring, ident)), 0.0, 1e-14);
  std::vector<cplx> open(ring.begin(), ring.end() - 1);
  EXPECT_THROW(contour_integral(open, std::vector<cplx>(open.size(), 1.0)), Error);
}

TEST(Contour, HexRingOnLattice) {
  const auto d = square_domain(1.0 / 24);
  const auto c = hex_ring_contour(d, {0.5, 0.5}, 3);
  EXPECT_EQ(c.size(), 19u);
  for (std::size_t k = 0; k + 1 < c.size(); ++k) EXPECT_NEAR(std::abs(c[k + 1] - c[k]), d.mesh, 1e-12);
  const auto r = contour_holomorphicity(d, ModelParams{}, c, 200, 2);
  EXPECT_GE(r.value, 0.0);
  EXPECT_NEAR(r.length, 18 * d.mesh, 1e-12);
}
