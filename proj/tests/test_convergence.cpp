#include <gtest/gtest.h>

#include "slelab/convergence.hpp"
#include "slelab/observable.hpp"

using namespace slelab;

namespace {

DrivingFunction linear_driving(double a, double T, double dt) {
  const auto n = static_cast<std::size_t>(std::llround(T / dt));
  DrivingFunction w{dt, std::vector<double>(n + 1), Ambient::HalfPlane};
  for (std::size_t k = 0; k <= n; ++k) w.values[k] = a * w.time(k);
  return w;
}

std::vector<DrivingFunction> brownian_ensemble(double kappa, double T, double dt, std::size_t n, std::uint64_t seed,
                                               double drift = 0.0) {
  std::vector<DrivingFunction> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto g = make_stream(seed, i, 0x77);
    auto w = brownian_driving(kappa, T, dt, g);
    for (std::size_t k = 0; k < w.values.size(); ++k) w.values[k] += drift * w.time(k);
    out.push_back(std::move(w));
  }
  return out;
}

BrownianPath as_path(const DrivingFunction& w) {
  BrownianPath b;
  b.h = w.dt;
  b.values = w.values;
  return b;
}

}  // namespace

TEST(Mesoscopic, ZeroDrivingGivesTimeBlocks) {
  const double dt = 1.0 / 4096, n = 64, s = 0.6;
  const auto m = mesoscopic_decompose(linear_driving(0.0, 0.5, dt), s, n);
  const double tt = std::pow(n, -2 * s / 3);
  const auto len = static_cast<std::size_t>(std::ceil(tt / dt));
  ASSERT_EQ(m.indices.size(), 1 + 2048 / len);
  for (std::size_t k = 0; k < m.indices.size(); ++k) EXPECT_EQ(m.indices[k], k * len);
  EXPECT_DOUBLE_EQ(m.space_threshold, std::pow(n, -s / 3));
}

TEST(Mesoscopic, LinearDrivingClosedForm) {
  const double dt = 1.0 / 2048, n = 100, s = 0.9;
  const double tt = std::pow(n, -2 * s / 3), ts = std::pow(n, -s / 3);
  // slow: the clock wins; fast: the space threshold wins
  for (double a : {0.37, 41.3, -41.3}) {
    const auto m = mesoscopic_decompose(linear_driving(a, 0.5, dt), s, n);
    const auto by_time = static_cast<std::size_t>(std::ceil(tt / dt));
    const auto by_space = static_cast<std::size_t>(std::ceil(ts / (std::abs(a) * dt)));
    const auto len = std::min(by_time, by_space);
    ASSERT_EQ(m.indices.size(), 1 + 1024 / len) << a;
    for (std::size_t k = 1; k < m.indices.size(); ++k) EXPECT_EQ(m.indices[k] - m.indices[k - 1], len);
  }
  EXPECT_THROW(mesoscopic_decompose(linear_driving(0, 0.5, dt), 1.2, n), Error);
  EXPECT_THROW(mesoscopic_decompose(linear_driving(0, 0.5, dt), 0.5, 0.5), Error);
}

TEST(Mesoscopic, DoublingRefines) {
  const auto ens = brownian_ensemble(6.0, 0.5, 1.0 / 4096, 20, 5);
  for (const auto& w : ens) {
    for (double n : {16.0, 64.0, 256.0}) {
      const auto a = mesoscopic_decompose(w, 0.9, n), b = mesoscopic_decompose(w, 0.9, 2 * n);
      std::size_t longest = 0;
      for (std::size_t k = 1; k < b.indices.size(); ++k) longest = std::max(longest, b.indices[k] - b.indices[k - 1]);
      longest = std::max(longest, w.steps() - b.indices.back());
      for (std::size_t m : a.indices) {
        std::size_t best = w.steps();
        for (std::size_t q : b.indices) best = std::min(best, m > q ? m - q : q - m);
        EXPECT_LE(best, longest);
      }
      EXPECT_GE(b.indices.size(), a.indices.size());
    }
  }
}

TEST(KeyEstimates, BrownianIsCentred) {
  const auto ens = brownian_ensemble(6.0, 0.5, 1.0 / 2048, 400, 11);
  for (double n : {32.0, 128.0}) {
    const auto r = key_estimate_stats(ens, 0.9, n, 6.0);
    EXPECT_LT(r.abs_dw(), 4 * r.se_dw) << n;
    EXPECT_LT(r.abs_qv(), 4 * r.se_qv) << n;
    EXPECT_GT(r.blocks, 400u);
    EXPECT_FALSE(r.rows.empty());
  }
  // exactly zero on the zero driving with kappa 0
  const auto z = key_estimate_stats({linear_driving(0, 0.5, 1.0 / 1024), linear_driving(0, 0.5, 1.0 / 1024)}, 0.5, 10, 0);
  EXPECT_EQ(z.mean_dw, 0.0);
  EXPECT_EQ(z.mean_qv, 0.0);
}

TEST(KeyEstimates, DetectsSmallDrift) {
  // small kappa so blocks end on the clock; drift 0.01 per block
  const double n = 1000, s = 0.9, tt = std::pow(n, -2 * s / 3);
  const auto ens = brownian_ensemble(0.1, 0.5, 1.0 / 4096, 200, 3, 0.01 / tt);
  const auto r = key_estimate_stats(ens, s, n, 0.1);
  EXPECT_NEAR(r.mean_dw, 0.01, 0.002);
  EXPECT_GE(r.mean_dw / r.se_dw, 5.0);
}

TEST(KeyEstimates, TrendCheck) {
  KeyEstimateReport a, b, c;
  a.mean_dw = 0.1, a.se_dw = 0.01, a.mean_qv = 0.2, a.se_qv = 0.01;
  b.mean_dw = 0.05, b.se_dw = 0.01, b.mean_qv = 0.1, b.se_qv = 0.01;
  c.mean_dw = -0.06, c.se_dw = 0.01, c.mean_qv = 0.05, c.se_qv = 0.01;
  EXPECT_TRUE(key_estimates_decrease({a, b, c}));
  c.mean_qv = 0.2;
  EXPECT_FALSE(key_estimates_decrease({a, b, c}));
}

TEST(Skorokhod, TwoPointMeanTimeIsDeltaSquared) {
  const double delta = 0.05;
  const DiscreteLaw law({-delta, delta}, {1, 1});
  std::mt19937_64 sign(1);
  std::vector<CouplingResult> cs;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> inc(500);
    for (auto& x : inc) x = coin(sign) ? delta : -delta;
    auto g = make_stream(7, rep);
    cs.push_back(skorokhod_embed(inc, law, delta, g));
    const auto& c = cs.back();
    for (std::size_t k = 0; k < c.M.size(); ++k) {
      ASSERT_EQ(c.B.values[c.tau_index[k]], c.M[k]);
      if (k) {
        ASSERT_NEAR(c.M[k] - c.M[k - 1], inc[k - 1], 1e-12);
      }
    }
    // the path stays inside each interval before its exit
    for (std::size_t k = 1; k < c.M.size(); ++k)
      for (std::size_t j = c.tau_index[k - 1]; j <= c.tau_index[k]; ++j)
        ASSERT_LE(std::abs(c.B.values[j] - c.M[k - 1]), delta + 1e-12);
  }
  const auto e = embedding_check(cs, delta * delta);
  EXPECT_LT(std::abs(e.z()), 3.0) << e.mean_dtau << " vs " << delta * delta;
}

TEST(Skorokhod, ZeroMartingaleAndBounds) {
  const DiscreteLaw law({-1, 0, 1}, {1, 2, 1});
  std::mt19937_64 g(3);
  const auto c = skorokhod_embed(std::vector<double>(50, 0.0), law, 1.0, g);
  for (double t : c.tau) EXPECT_EQ(t, 0.0);
  EXPECT_EQ(c.B.values.size(), 1u);
  EXPECT_THROW(skorokhod_embed({0.5, 2.0}, law, 1.0, g), Error);
  EXPECT_THROW(skorokhod_embed({0.5}, law, std::numeric_limits<double>::infinity(), g), Error);
  EXPECT_THROW(skorokhod_embed({0.5}, DiscreteLaw({0.5, 1.0}, {1, 1}), 1.0, g), Error);
  EXPECT_THROW(skorokhod_generate(DiscreteLaw({0.5, 1.0}, {1, 1}), 3, g), Error);
  EXPECT_THROW(DiscreteLaw({1, 2}, {1}), Error);
}

TEST(Skorokhod, ThreePointLawMatches) {
  const double delta = 0.1;
  const DiscreteLaw law({-delta, 0, delta}, {0.25, 0.5, 0.25});
  const std::size_t K = 100000;
  auto g = make_stream(19, 0);
  const auto c = skorokhod_generate(law, K, g, delta * delta / 64);
  std::vector<double> emb, direct;
  for (std::size_t k = 1; k < c.M.size(); ++k) {
    const double x = std::round((c.M[k] - c.M[k - 1]) / delta);
    ASSERT_NEAR(c.M[k] - c.M[k - 1], x * delta, 1e-12);
    emb.push_back(x * delta);
  }
  auto h = make_stream(19, 1);
  for (std::size_t k = 0; k < K; ++k) {
    const double u = uniform01(h);
    direct.push_back(u < 0.25 ? -delta : (u < 0.75 ? 0.0 : delta));
  }
  EXPECT_GT(ks_two_sample(emb, direct).p_value, 0.01);
  for (std::size_t k = 0; k < c.M.size(); ++k) ASSERT_EQ(c.B.values[c.tau_index[k]], c.M[k]);
  // mean stopping increment equals the second moment
  const auto e = embedding_check({c}, law.second_moment());
  EXPECT_LT(std::abs(e.z()), 3.0);
  // the backward embedding of the same increments has the same stopping-time law
  std::vector<double> head(direct.begin(), direct.begin() + 20000);
  auto gb = make_stream(19, 2);
  const auto b = skorokhod_embed(head, law, delta, gb, delta * delta / 64);
  std::vector<double> t1, t2;
  for (std::size_t k = 1; k <= head.size(); ++k) {
    t1.push_back(c.tau[k] - c.tau[k - 1]);
    t2.push_back(b.tau[k] - b.tau[k - 1]);
  }
  EXPECT_GT(ks_two_sample(t1, t2).p_value, 0.01);
}

TEST(Modulus, SlidingWindowMatchesBruteForce) {
  auto g = make_stream(4, 0);
  const auto w = brownian_driving(1.0, 1.0, 1.0 / 500, g);
  const auto p = as_path(w);
  const std::size_t win = 50;
  double brute = 0.0;
  for (std::size_t t = 0; t + win <= 500; ++t)
    for (std::size_t s = 1; s <= win; ++s) brute = std::max(brute, std::abs(p.values[t + s] - p.values[t]));
  EXPECT_DOUBLE_EQ(brownian_modulus(p, 1.0, 0.1), brute);
  EXPECT_THROW(brownian_modulus(p, 1.0, 1e-9), Error);
}

TEST(Modulus, EmbeddedBrownianMeetsBound) {
  // paths of the embedding itself, T = common horizon
  const double delta = 0.05;
  const DiscreteLaw law({-delta, delta}, {1, 1});
  std::vector<BrownianPath> paths;
  double T = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 400; ++i) {
    auto g = make_stream(31, i);
    paths.push_back(skorokhod_generate(law, 400, g, delta * delta / 25).B);
    T = std::min(T, paths.back().horizon());
  }
  ASSERT_GT(T, 0.3);
  const auto rows = modulus_check(paths, T, T / 10, {3, 4, 5});
  for (const auto& r : rows) EXPECT_TRUE(r.holds()) << r.v << " " << r.frequency << " " << r.bound;
  EXPECT_LE(rows[0].frequency, rows[1].frequency);
  EXPECT_LE(rows[1].frequency, rows[2].frequency);
}

TEST(Kappa, BrownianRecoversKappa) {
  const auto grid = uniform_grid(0.05, 0.3, 26);
  const auto e6 = estimate_kappa(brownian_ensemble(6.0, 0.3, 1.0 / 1024, 10000, 1), grid, 200);
  EXPECT_GE(e6.kappa, 5.8);
  EXPECT_LE(e6.kappa, 6.2);
  EXPECT_LT(e6.ci_lo, e6.kappa);
  EXPECT_GT(e6.ci_hi, e6.kappa);
  EXPECT_LT(std::abs(e6.mean_z()), 3.0);
  EXPECT_LT(std::abs(e6.excess_kurtosis), 0.3);
  const auto e2 = estimate_kappa(brownian_ensemble(2.0, 0.3, 1.0 / 1024, 2000, 2), grid, 100);
  EXPECT_NEAR(e2.kappa, 2.0, 0.15);
  const auto e0 = estimate_kappa(brownian_ensemble(0.0, 0.3, 1.0 / 1024, 100, 3), grid, 50);
  EXPECT_EQ(e0.kappa, 0.0);
  EXPECT_THROW(estimate_kappa(brownian_ensemble(6.0, 0.3, 1.0 / 1024, 99, 3), grid), Error);
}

TEST(Kappa, ScaleInvariantAndSkipsEarlyTimes) {
  const double lambda = 1.7, dt = 1.0 / 512;
  auto ens = brownian_ensemble(4.0, 0.3, dt, 200, 8);
  auto scaled = ens;
  for (auto& w : scaled) {
    w.dt *= lambda * lambda;
    for (auto& v : w.values) v *= lambda;
  }
  std::vector<double> grid = {1e-3, 0.1, 0.2, 0.3}, sgrid;
  for (double t : grid) sgrid.push_back(lambda * lambda * t);
  const auto a = estimate_kappa(ens, grid, 50, 4), b = estimate_kappa(scaled, sgrid, 50, 4);
  EXPECT_NEAR(a.kappa, b.kappa, 1e-12 * a.kappa);
  ASSERT_EQ(a.rows.size(), 3u);  // 1e-3 < 10 dt is dropped
  EXPECT_NEAR(a.ci_lo, b.ci_lo, 1e-12);
}

TEST(RateFit, SyntheticPowerLaws) {
  const std::vector<double> ns = {32, 64, 128, 256, 512};
  std::vector<double> exact, flat(5, 0.7);
  for (double n : ns) exact.push_back(3.0 * std::pow(n, -0.3));
  const auto f = rate_fit(ns, exact);
  EXPECT_NEAR(f.u, 0.3, 1e-12);
  EXPECT_NEAR(f.prefactor, 3.0, 1e-10);
  EXPECT_NEAR(rate_fit(ns, flat).u, 0.0, 1e-12);
  EXPECT_FALSE(rate_fit(ns, flat).positive());
  for (double u : {0.2, 0.5}) {
    std::mt19937_64 g(static_cast<std::uint64_t>(u * 100));
    std::normal_distribution<double> nd;
    std::vector<double> noisy, se;
    for (double n : ns) {
      const double e = std::pow(n, -u);
      noisy.push_back(e * (1 + 0.01 * nd(g)));
      se.push_back(0.01 * e);
    }
    const auto r = rate_fit(ns, noisy, se);
    EXPECT_NEAR(r.u, u, 0.02);
    EXPECT_TRUE(r.positive());
    EXPECT_LT(r.ci_lo, r.u);
    EXPECT_GT(r.ci_hi, r.u);
  }
  EXPECT_THROW(rate_fit({1, 2}, {1, 1}), Error);
  EXPECT_THROW(rate_fit({1, 2, 3}, {1, 0, 1}), Error);
  EXPECT_THROW(rate_fit({1, 2, 3}, {1, -1, 1}), Error);
}

TEST(Couple, ExactEmbeddingOfRecentredBlocks) {
  const auto ens = brownian_ensemble(6.0, 0.5, 1.0 / 2048, 60, 21);
  const auto c = couple(ens, 0.9, 64, 6.0, 5, true);
  ASSERT_EQ(c.couplings.size(), ens.size());
  for (const auto& r : c.couplings) {
    ASSERT_EQ(r.W.size(), r.M.size());
    for (std::size_t k = 0; k < r.M.size(); ++k) ASSERT_EQ(r.B.values[r.tau_index[k]], r.M[k]);
    // residual between the driving and the martingale is the accumulated recentring
    for (std::size_t k = 0; k < r.M.size(); ++k) EXPECT_NEAR(r.W[k] - r.M[k], k * c.correction, 1e-9);
    EXPECT_GE(r.sup_distance, 0.0);
  }
  EXPECT_GT(c.mean_sup, 0.0);
  EXPECT_LT(c.mean_sup, 2.0);
  // deterministic per seed
  EXPECT_EQ(couple(ens, 0.9, 64, 6.0, 5).mean_sup, c.mean_sup);
}

TEST(Couple, TimeChangeTracksCapacity) {
  // tau_k should follow kappa t_{m_k} for Brownian input
  const auto ens = brownian_ensemble(6.0, 0.5, 1.0 / 2048, 100, 22);
  const auto c = couple(ens, 0.9, 256, 6.0, 6, true);
  double num = 0.0, den = 0.0;
  for (const auto& r : c.couplings) {
    num += r.tau.back();
    den += 6.0 * r.capacity.back();
  }
  EXPECT_NEAR(num / den, 1.0, 0.1);
}

TEST(Transfer, IdenticalOffsetAndPerturbed) {
  const double T = 0.25, dt = 1.0 / 512;
  const auto p1 = sample_sle(6.0, T, dt, 41);
  const auto same = curve_transfer_check(p1, p1, 0.5, 0.5, 0.4, 2.0);
  EXPECT_EQ(same.epsilon, 0.0);
  EXPECT_EQ(same.curve_distance, 0.0);
  EXPECT_EQ(same.implied_c, 0.0);
  // a rigid shift by 1e-2 moves both the driving and the curve by 1e-2
  auto p2 = p1;
  for (auto& v : p2.driving.values) v += 1e-2;
  for (auto& z : p2.curve.points) z += 1e-2;
  const auto off = curve_transfer_check(p1, p2, 0.5, 0.5, 0.4, 2.0);
  EXPECT_NEAR(off.epsilon, 1e-2, 1e-12);
  EXPECT_NEAR(off.curve_distance, 1e-2, 1e-12);
  EXPECT_NEAR(off.d_star, std::pow(1e-2, 0.4), 1e-12);
  EXPECT_GE(off.eta_tip, off.d_star);
  // small SLE_6 perturbation of the driving
  auto g = make_stream(41, 1);
  const auto noise = brownian_driving(6.0, T, dt, g);
  double mx = 0.0;
  for (double v : noise.values) mx = std::max(mx, std::abs(v));
  LoewnerPair p3;
  p3.driving = p1.driving;
  for (std::size_t k = 0; k < noise.values.size(); ++k) p3.driving.values[k] += 1e-3 * noise.values[k] / mx;
  p3.curve = reverse_flow_curve(p3.driving);
  const auto pert = curve_transfer_check(p1, p3, 0.5, 0.5, 0.4, 2.0);
  EXPECT_NEAR(pert.epsilon, 1e-3, 1e-12);
  EXPECT_GT(pert.rate, 0.0);
  EXPECT_TRUE(std::isfinite(pert.implied_c));
  EXPECT_GT(pert.derivative_c, 0.0);
  EXPECT_THROW(curve_transfer_check(p1, p1, 0.5, 0.5, 0.6, 2.0), Error);
}

TEST(PercolationDriving, DiskInterfaceReachesCapacity) {
  const auto d = percolation_disk(1.0 / 32);
  const auto st = explore(d, ModelParams{}, 9, 0);
  const auto w = interface_driving(st, 0.3, 1.0 / 1024);
  EXPECT_EQ(w.ambient, Ambient::HalfPlane);
  EXPECT_EQ(w.steps(), 307u);  // floor(T / dt)
  EXPECT_LT(std::abs(w.values[0]), 0.2);
  for (double v : w.values) EXPECT_TRUE(std::isfinite(v));
}
