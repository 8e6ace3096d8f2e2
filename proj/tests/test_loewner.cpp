#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "slelab/loewner.hpp"

using namespace slelab;

namespace {

DrivingFunction constant_driving(double value, double T, double dt) {
  const auto n = static_cast<size_t>(std::llround(T / dt));
  return {dt, std::vector<double>(n + 1, value), Ambient::HalfPlane};
}

DrivingFunction sqrt_driving(double c, double T, double dt) {
  auto w = constant_driving(0.0, T, dt);
  for (size_t k = 0; k < w.values.size(); ++k) w.values[k] = c * std::sqrt(w.time(k));
  return w;
}

double sup_diff(const DrivingFunction& a, const DrivingFunction& b) {
  const size_t n = std::min(a.values.size(), b.values.size());
  double e = 0;
  for (size_t k = 0; k < n; ++k) e = std::max(e, std::abs(a.values[k] - b.values[k]));
  return e;
}

// Continuous-driving Loewner ODE by classical RK4, independent of the slit maps.
cplx rk4_flow(cplx z, double c, double t_end, int steps) {
  const double h = t_end / steps;
  auto f = [c](double t, cplx g) { return 2.0 / (g - c * std::sqrt(t)); };
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    const cplx k1 = f(t, z), k2 = f(t + h / 2, z + h / 2 * k1), k3 = f(t + h / 2, z + h / 2 * k2),
               k4 = f(t + h, z + h * k3);
    z += h / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return z;
}

constexpr double kAlpha = 1.0 / 3.0;
const double kTiltC = 2 * (1 - 2 * kAlpha) / std::sqrt(kAlpha * (1 - kAlpha));

}  // namespace

TEST(ForwardFlow, ClosedFormForZeroDriving) {
  const auto w = constant_driving(0.0, 1.0, 1.0 / 1024);
  const auto r = forward_flow(w, {0, 3}, 1.0);
  ASSERT_FALSE(r.swallowed);
  EXPECT_NEAR(std::abs(r.value - std::sqrt(cplx(-9 + 4, 0))), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(r.value - cplx(0, std::sqrt(5.0))), 0.0, 1e-12);
  const auto real = forward_flow(w, {1, 0}, 0.1);
  ASSERT_FALSE(real.swallowed);
  EXPECT_NEAR(real.value.real(), std::sqrt(1.4), 1e-12);
  EXPECT_EQ(real.value.imag(), 0.0);
  const auto neg = forward_flow(w, {-1, 0}, 0.1);
  EXPECT_NEAR(neg.value.real(), -std::sqrt(1.4), 1e-12);
}

TEST(ForwardFlow, SwallowingTimeOfSlitPoint) {
  const double dt = 1.0 / 1000;
  const auto w = constant_driving(0.0, 1.0, dt);
  const auto r = forward_flow(w, {0, 1}, 1.0);
  ASSERT_TRUE(r.swallowed);
  EXPECT_NEAR(r.tau, 0.25, 1e-9);
  EXPECT_THROW(forward_flow(w, {0, 1}, 2.0), Error);
}

TEST(ReverseFlow, VerticalSlit) {
  const double dt = std::ldexp(1.0, -12);
  const auto w = constant_driving(0.0, 1.0, dt);
  const Curve c = reverse_flow_curve(w);
  const double d = std::sqrt(dt);
  EXPECT_LT(std::abs(c.points.back() - cplx(0, 2)), 1e-2);
  for (size_t k = 1; k < c.size(); k += 97) {
    EXPECT_NEAR(c.points[k].real(), 0.0, 1e-12);
    EXPECT_NEAR(c.points[k].imag(), std::sqrt(4 * c.times[k] + d * d), 1e-12);
  }
  EXPECT_THROW(reverse_flow_curve(w, 0.0), Error);
  EXPECT_THROW(reverse_flow_curve(w, -1.0), Error);
}

TEST(ReverseFlow, SqrtDrivingGivesTiltedRay) {
  const double dt = std::ldexp(1.0, -12);
  const auto w = sqrt_driving(kTiltC, 1.0, dt);
  const Curve c = reverse_flow_curve(w, 1e-9);
  for (size_t k = 256; k < c.size(); ++k) EXPECT_NEAR(std::arg(c.points[k]), kAlpha * std::numbers::pi, 2e-3);
  // the endpoint is swallowed at T by the continuous flow
  const double eps = 1e-4;
  const cplx g = rk4_flow(c.points.back(), kTiltC, 1.0 - eps, 200000);
  EXPECT_LT(std::abs(g - kTiltC * std::sqrt(1.0 - eps)), 4 * std::sqrt(eps));
  const cplx g_off = rk4_flow(c.points.back() * cplx(1.0, 0.2), kTiltC, 1.0 - eps, 200000);
  EXPECT_GT(std::abs(g_off - kTiltC * std::sqrt(1.0 - eps)), 0.1);
}

TEST(ReverseFlow, ZeroKappaEqualsSlit) {
  const auto p = sample_sle(0.0, 1.0, 1.0 / 256, 5);
  const auto q = reverse_flow_curve(constant_driving(0.0, 1.0, 1.0 / 256));
  ASSERT_EQ(p.curve.size(), q.size());
  for (size_t k = 0; k < q.size(); ++k) EXPECT_EQ(p.curve.points[k], q.points[k]);
}

TEST(Extract, AnalyticSlitGivesZero) {
  std::vector<cplx> pts;
  for (int k = 0; k <= 4096; ++k) pts.emplace_back(0.0, 2.0 * std::sqrt(k / 4096.0));
  ExtractOptions o;
  o.dt = std::ldexp(1.0, -12);
  const auto w = extract_driving(Curve::from_points(pts), o);
  double sup = 0;
  for (double v : w.values) sup = std::max(sup, std::abs(v));
  EXPECT_LT(sup, 1e-12);
  EXPECT_NEAR(w.horizon(), 1.0, 1e-9);
}

TEST(Extract, TiltedSegmentGivesSqrtDriving) {
  const double r = 2.245006;  // tip modulus at T = 1 from the reverse flow
  std::vector<cplx> pts;
  for (int k = 0; k <= 4096; ++k) pts.push_back(std::polar(r * std::sqrt(k / 4096.0), kAlpha * std::numbers::pi));
  ExtractOptions o;
  o.dt = std::ldexp(1.0, -12);
  const auto w = extract_driving(Curve::from_points(pts), o);
  EXPECT_NEAR(w.horizon(), 1.0, 1e-3);
  EXPECT_LT(sup_diff(w, sqrt_driving(kTiltC, 1.0, o.dt)), 1e-2);
}

TEST(Extract, RoundTripShrinksWithStep) {
  std::vector<double> worst;
  for (int e : {8, 10}) {
    const double dt = std::ldexp(1.0, -e);
    double w_err = 0;
    for (int s = 0; s < 8; ++s) {
      auto g = make_stream(99, s);
      const auto w = random_holder_driving(0.5, dt, 2.0, g);
      ExtractOptions o;
      o.dt = dt;
      w_err = std::max(w_err, sup_diff(extract_driving(reverse_flow_curve(w, 1e-3 * std::sqrt(dt)), o), w));
    }
    worst.push_back(w_err);
  }
  EXPECT_LT(worst[1], 0.02);
  EXPECT_LE(worst[1], worst[0]);
}

TEST(Extract, CapacityIncrementsAreTwoDt) {
  const double dt = 1.0 / 512;
  auto g = make_stream(3, 0);
  const auto w = random_holder_driving(0.5, dt, 1.5, g);
  const auto tr = zipper(reverse_flow_curve(w, 1e-4 * std::sqrt(dt)));
  for (size_t k = 1; k < tr.times.size(); ++k) EXPECT_NEAR(2 * (tr.times[k] - tr.times[k - 1]), 2 * dt, 1e-6);
}

TEST(Extract, LoewnerScaling) {
  const double dt = 1.0 / 1024, lam = 1.7;
  auto g = make_stream(4, 0);
  const auto w = random_holder_driving(0.5, dt, 1.0, g);
  const Curve c = reverse_flow_curve(w, 1e-4 * std::sqrt(dt));
  Curve scaled = c;
  for (size_t k = 0; k < c.size(); ++k) {
    scaled.points[k] *= lam;
    scaled.times[k] *= lam * lam;
  }
  ExtractOptions o;
  o.dt = dt * lam * lam;
  const auto ws = extract_driving(scaled, o);
  ASSERT_EQ(ws.values.size(), w.values.size());
  for (size_t k = 0; k < w.values.size(); ++k) EXPECT_NEAR(ws.values[k], lam * w.values[k], 1e-8);
}

TEST(Extract, MergesZeroCapacityAndReportsCrossings) {
  const Curve dup = Curve::from_points({{0, 0}, {0, 1}, {0, 1}, {0, 2}});
  const auto tr = zipper(dup);
  EXPECT_EQ(tr.times.size(), 3u);
  EXPECT_NEAR(tr.times.back(), 1.0, 1e-12);
  const Curve below = Curve::from_points({{0, 0}, {0, 1}, {0.5, -0.5}});
  EXPECT_THROW(zipper(below), SelfCrossingError);
  const Curve loop = Curve::from_points({{0, 0}, {0, 1}, {1, 1}, {1, 0.5}, {-1, 0.5}});
  try {
    zipper(loop);
    ADD_FAILURE() << "self-crossing not reported";
  } catch (const SelfCrossingError& e) {
    EXPECT_EQ(e.time, 4.0);
  }
}

TEST(Extract, DiskConjugation) {
  const double dt = 1.0 / 512;
  auto g = make_stream(8, 1);
  const auto wh = random_holder_driving(0.5, dt, 1.0, g);
  const auto wd = to_disk(wh);
  EXPECT_NEAR(wd.values[0], std::numbers::pi, 1e-15);
  const Curve cd = reverse_flow_curve(wd, 1e-4 * std::sqrt(dt));
  EXPECT_EQ(cd.ambient, Ambient::Disk);
  for (const auto& p : cd.points) EXPECT_LE(std::abs(p), 1.0 + 1e-12);
  EXPECT_NEAR(std::abs(cd.points[0] - cplx(-1, 0)), 0.0, 1e-12);
  ExtractOptions o;
  o.dt = dt;
  const auto back = extract_driving(cd, o);
  EXPECT_EQ(back.ambient, Ambient::Disk);
  EXPECT_LT(sup_diff(to_halfplane(back), wh), 1e-6);
}

TEST(SampleSle, DeterminismAndValidation) {
  const auto a = sample_sle(6.0, 0.2, 1.0 / 256, 17, 3);
  const auto b = sample_sle(6.0, 0.2, 1.0 / 256, 17, 3);
  EXPECT_EQ(a.driving.values, b.driving.values);
  EXPECT_EQ(a.curve.points, b.curve.points);
  EXPECT_NE(a.driving.values, sample_sle(6.0, 0.2, 1.0 / 256, 17, 4).driving.values);
  EXPECT_THROW(sample_sle(8.0, 0.2, 1.0 / 256, 1), Error);
  EXPECT_THROW(sample_sle(-1.0, 0.2, 1.0 / 256, 1), Error);
}

TEST(SampleSle, TerminalVarianceIsKappaT) {
  const double kappa = 6, T = 0.1;
  const int n = 10000;
  std::vector<double> x(n);
  for (int s = 0; s < n; ++s) x[s] = sample_sle(kappa, T, T / 8, 2024, s).driving.values.back();
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double v = 0, m4 = 0;
  for (double y : x) {
    v += (y - m) * (y - m);
    m4 += std::pow(y - m, 4);
  }
  v /= n - 1;
  m4 /= n;
  const double se = std::sqrt((m4 - v * v) / n);
  EXPECT_LT(std::abs(v - kappa * T), 3 * se);
}

TEST(HullStats, SlitAndEmptyHull) {
  const auto w = constant_driving(0.0, 1.0, 1.0 / 1024);
  const Curve c = reverse_flow_curve(w, 1e-9);
  const auto h = hull_stats(c, w, 1.0);
  EXPECT_NEAR(h.hcap, 2.0, 1e-15);
  EXPECT_NEAR(h.diam, 2.0, 1e-6);
  EXPECT_NEAR(h.k_of_t, 1.0, 1e-15);
  const auto z = hull_stats(c, w, 0.0);
  EXPECT_EQ(z.diam, 0.0);
  EXPECT_EQ(z.k_of_t, 0.0);
}

TEST(HullStats, DiameterSandwichOnSleSuite) {
  double lo = 1e300, hi = 0;
  for (int s = 0; s < 40; ++s) {
    const auto p = sample_sle(6.0, 0.5, 1.0 / 512, 31, s, 1e-5);
    for (double t : {0.05, 0.1, 0.25, 0.5}) {
      const auto h = hull_stats(p.curve, p.driving, t);
      lo = std::min(lo, h.diam / h.k_of_t);
      hi = std::max(hi, h.diam / h.k_of_t);
    }
  }
  RecordProperty("min_ratio", std::to_string(lo));
  RecordProperty("max_ratio", std::to_string(hi));
  const double C = std::max(hi, 1 / lo);
  EXPECT_LT(C, 10.0);
  EXPECT_GT(lo, 0.0);
}

TEST(HullStats, LocalGrowthIncrementsShrink) {
  auto g = make_stream(77, 0);
  const auto w = random_holder_driving(0.5, 1.0 / 1024, 2.0, g);
  const LoewnerPair p{w, reverse_flow_curve(w, 1e-5)};
  std::vector<double> inc;
  for (int stride : {64, 16, 4}) {
    double worst = 0;
    for (size_t k = 0; k + stride < p.curve.size(); k += stride)
      worst = std::max(worst, point_set_diameter(p.curve.points.data() + k, p.curve.points.data() + k + stride + 1));
    inc.push_back(worst);
  }
  EXPECT_GT(inc[0], inc[1]);
  EXPECT_GT(inc[1], inc[2]);
}

TEST(DerivativeGrowth, ZeroDrivingClosedForm) {
  const double dt = 1.0 / 256;
  const auto w = constant_driving(0.0, 1.0, dt);
  for (double d : {0.3, 0.05}) {
    for (size_t k : {1, 50, 256}) {
      const double t = k * dt;
      EXPECT_NEAR(std::abs(reverse_derivative(w, k, d)), d / std::sqrt(d * d + 4 * t), 1e-10);
    }
  }
  const auto rep = measure_derivative_growth(w, 0.5, 0.5, 4);
  ASSERT_EQ(rep.ratio.size(), 4u);
  for (size_t j = 0; j < rep.ratio.size(); ++j) {
    const double d = rep.d_values[j];
    EXPECT_NEAR(rep.ratio[j], d * d / std::sqrt(d * d + 4 * dt) / std::pow(d, 0.5), 1e-10);
    EXPECT_LE(rep.ratio[j], std::pow(d, 0.5) + 1e-12);
  }
  EXPECT_THROW(measure_derivative_growth(w, 0.5, 1.0), Error);
  EXPECT_THROW(measure_derivative_growth(w, 1.0, 0.5), Error);
}

TEST(DerivativeGrowth, ViolationsDecayWithDstar) {
  const double kappa = 6, beta = 0.99;
  std::vector<double> c_big, c_small;
  for (int s = 0; s < 30; ++s) {
    const auto w = sample_sle(kappa, 0.25, 1.0 / 256, 555, s, 1.0).driving;
    c_big.push_back(measure_derivative_growth(w, beta, 0.2, 3).constant);
    c_small.push_back(measure_derivative_growth(w, beta, 0.2 / 8, 3).constant);
  }
  std::sort(c_big.begin(), c_big.end());
  const double c = c_big[c_big.size() * 3 / 4];
  int viol_big = 0, viol_small = 0;
  for (size_t k = 0; k < c_big.size(); ++k) {
    viol_big += c_big[k] > c;
    viol_small += c_small[k] > c;
  }
  EXPECT_LE(viol_small, viol_big);
}

TEST(DerivativeGrowth, DiskStoppingRule) {
  const auto w = to_disk(sample_sle(2.0, 2.0, 1.0 / 128, 9, 0).driving);
  const auto rep = measure_derivative_growth(w, 0.5, 0.5, 2, 0.9);
  EXPECT_LE(rep.stop_time, 2.0);
  EXPECT_GT(rep.constant, 0.0);
}

TEST(Exponents, FormulaValues) {
  const double k = 6;
  EXPECT_NEAR(lambda_c(k), 1 + 2.0 / 6 + 18.0 / 32, 1e-15);
  EXPECT_NEAR(beta_plus(k), 4 * (6 * std::sqrt(14.0) + 2) / 100, 1e-15);
  EXPECT_NEAR(beta_plus(1.0), std::max(0.0, 4 * (3.0 - 3.0) / 25), 1e-15);
  const double b = 0.99;
  EXPECT_NEAR(q_of_beta(b, k), std::min(lambda_c(k) * b, b + 2 * (1 + b) / k + b * b * k / (8 * (1 + b)) - 2), 1e-15);
}
