#pragma once
// Chordal Loewner evolution with piecewise-constant driving: forward flow,
// reverse-flow traces, vertical-slit zipper extraction, SLE sampling and
// derivative-growth diagnostics. The disk ambient is handled by
// conjugating with the Moebius map onto the half-plane.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "slelab/geometry.hpp"
#include "slelab/rng.hpp"

namespace slelab {

/// Driving values on the grid t_k = k dt. Step j (from t_j to t_{j+1})
/// is driven by the constant values[j + 1], so the tip at t_k sits over
/// values[k]. In the disk ambient the values are angles on the circle.
struct DrivingFunction {
  double dt = 0.0;
  std::vector<double> values;
  Ambient ambient = Ambient::HalfPlane;

  [[nodiscard]] std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
  [[nodiscard]] double horizon() const { return dt * static_cast<double>(steps()); }
  [[nodiscard]] double time(std::size_t k) const { return dt * static_cast<double>(k); }

  /// W(t) by linear interpolation between grid values.
  [[nodiscard]] double at(double t) const {
    if (values.empty()) throw Error("DrivingFunction: empty");
    const double u = std::clamp(t / dt, 0.0, static_cast<double>(steps()));
    const auto k = std::min(static_cast<std::size_t>(u), steps() > 0 ? steps() - 1 : 0);
    if (steps() == 0) return values[0];
    const double f = u - static_cast<double>(k);
    return (1.0 - f) * values[k] + f * values[k + 1];
  }

  [[nodiscard]] DrivingFunction prefix(double t_end) const {
    DrivingFunction w{dt, {}, ambient};
    const auto n = std::min(steps(), static_cast<std::size_t>(std::floor(t_end / dt + 1e-9)));
    w.values.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n + 1));
    return w;
  }
};

struct LoewnerPair {
  DrivingFunction driving;
  Curve curve;
};

struct HullStats {
  double hcap = 0.0;
  double diam = 0.0;
  double k_of_t = 0.0;
};

class StepFailure : public Error {
 public:
  using Error::Error;
};

class SelfCrossingError : public Error {
 public:
  SelfCrossingError(const std::string& what, double t) : Error(what), time(t) {}
  double time;
};

// ---------------------------------------------------------------------------
// Elementary vertical-slit maps

namespace detail {

// Square root in the closed upper half-plane; on the real axis the sign
// follows the reference point so that real points outside the slit stay
// on their side.
inline cplx upper_sqrt(cplx v, double side) {
  cplx r = std::sqrt(v);
  if (r.imag() < 0.0) r = -r;
  if (r.imag() == 0.0 && ((side < 0.0 && r.real() > 0.0) || (side > 0.0 && r.real() < 0.0))) r = -r;
  return r;
}

}  // namespace detail

/// g(z) = xi + sqrt((z - xi)^2 + 4 dt): removes the vertical slit of
/// height 2 sqrt(dt) at xi; hydrodynamically normalized with hcap 2 dt.
inline cplx slit_map(cplx z, double xi, double dt) {
  const cplx u = z - xi;
  return xi + detail::upper_sqrt(u * u + 4.0 * dt, u.real());
}

/// Inverse of slit_map: grows the vertical slit back.
inline cplx inverse_slit_map(cplx w, double xi, double dt) {
  const cplx u = w - xi;
  return xi + detail::upper_sqrt(u * u - 4.0 * dt, u.real());
}

inline cplx inverse_slit_derivative(cplx w, double xi, double dt) {
  const cplx u = w - xi;
  return u / detail::upper_sqrt(u * u - 4.0 * dt, u.real());
}

// ---------------------------------------------------------------------------
// Ambient conversion

/// Half-plane driving value to the angle of its preimage on the circle.
inline double halfplane_to_angle(double x) { return 2.0 * std::atan2(1.0, -x); }

/// Angle on the circle (away from 1) to the half-plane boundary point.
inline double angle_to_halfplane(double theta) { return -1.0 / std::tan(theta / 2.0); }

inline DrivingFunction to_halfplane(const DrivingFunction& w) {
  if (w.ambient == Ambient::HalfPlane) return w;
  DrivingFunction out{w.dt, w.values, Ambient::HalfPlane};
  for (auto& v : out.values) v = angle_to_halfplane(v);
  return out;
}

inline DrivingFunction to_disk(const DrivingFunction& w) {
  if (w.ambient == Ambient::Disk) return w;
  DrivingFunction out{w.dt, w.values, Ambient::Disk};
  for (auto& v : out.values) v = halfplane_to_angle(v);
  return out;
}

/// Curve mapped into the half-plane; disk points at 1 have no finite image
/// and end the curve.
inline Curve to_halfplane(const Curve& c) {
  if (c.ambient == Ambient::HalfPlane) return c;
  Curve out;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const ExtPoint p = mobius_disk_to_halfplane(c.points[k]);
    if (p.is_infinite()) break;
    cplx v = p.value();
    if (v.imag() < 0.0) v.imag(0.0);
    out.times.push_back(c.times[k]);
    out.points.push_back(v);
  }
  return out;
}

inline Curve to_disk(const Curve& c) {
  if (c.ambient == Ambient::Disk) return c;
  Curve out{c.times, {}, Ambient::Disk};
  out.points.reserve(c.size());
  for (const auto& p : c.points) out.points.push_back(mobius_halfplane_to_disk(p));
  return out;
}

// ---------------------------------------------------------------------------
// Forward flow

struct FlowResult {
  bool swallowed = false;
  cplx value{};       // g_{t_end}(z) when not swallowed
  double tau = 0.0;   // swallowing time when swallowed
};

/// g_{t_end}(z) by exact constant-driving steps. A point whose image comes
/// within `tol` of the driving value during a step is reported swallowed at
/// the first such time; tol <= 0 selects 1e-6 sqrt(dt).
inline FlowResult forward_flow(const DrivingFunction& w, cplx z, double t_end, double tol = 0.0) {
  const DrivingFunction h = to_halfplane(w);
  if (t_end < 0.0 || t_end > h.horizon() * (1.0 + 1e-12) + 1e-15)
    throw Error("forward_flow: t_end outside the driving horizon");
  if (!(z.imag() >= 0.0)) throw Error("forward_flow: z below the real axis");
  if (tol <= 0.0) tol = 1e-6 * std::sqrt(h.dt);
  cplx g = z;
  double t = 0.0;
  for (std::size_t j = 0; j < h.steps() && t < t_end; ++j) {
    const double step = std::min(h.dt, t_end - t);
    const double xi = h.values[j + 1];
    const cplx u = g - xi;
    const cplx a = u * u;
    const double s = std::clamp(-a.real() / 4.0, 0.0, step);
    if (std::sqrt(std::abs(a + 4.0 * s)) <= tol) return {true, {}, t + s};
    g = slit_map(g, xi, step);
    if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
      throw StepFailure("forward_flow: non-finite value at t = " + std::to_string(t));
    t += step;
  }
  return {false, g, 0.0};
}

// ---------------------------------------------------------------------------
// Reverse flow traces

namespace detail {

// f_{t_k}(w): inverse slits composed from step k-1 down to step 0.
inline cplx reverse_compose(const DrivingFunction& h, std::size_t k, cplx w) {
  for (std::size_t j = k; j-- > 0;) w = inverse_slit_map(w, h.values[j + 1], h.dt);
  return w;
}

}  // namespace detail

/// Trace gamma(t_k) ~ f_{t_k}(W(t_k) + i d) for every grid time; d <= 0
/// is rejected, and NaN selects the default sqrt(dt). Cost O(N^2).
inline Curve reverse_flow_curve(const DrivingFunction& w, double d = std::numeric_limits<double>::quiet_NaN()) {
  if (std::isnan(d)) d = std::sqrt(w.dt);
  if (!(d > 0.0)) throw Error("reverse_flow_curve: offset d must be positive");
  if (w.values.empty() || !(w.dt > 0.0)) throw Error("reverse_flow_curve: empty driving function");
  const DrivingFunction h = to_halfplane(w);
  Curve c;
  c.ambient = Ambient::HalfPlane;
  c.times.resize(h.values.size());
  c.points.resize(h.values.size());
  c.times[0] = 0.0;
  c.points[0] = {h.values[0], 0.0};
  for (std::size_t k = 1; k < h.values.size(); ++k) {
    c.times[k] = h.time(k);
    c.points[k] = detail::reverse_compose(h, k, cplx(h.values[k], d));
  }
  return w.ambient == Ambient::Disk ? to_disk(c) : c;
}

// ---------------------------------------------------------------------------
// Zipper extraction

struct ExtractOptions {
  double dt = 0.0;          // output grid step; <= 0 uses the mean capacity increment
  double t_max = std::numeric_limits<double>::infinity();  // stop once capacity reaches this
  double min_spacing = 0.0; // drop input points closer than this to the previous kept one
  double cross_tol = 1e-9;  // self-crossing tolerance relative to the curve diameter
};

/// Raw zipper output: capacity times T_k (hcap/2) and slit bases xi_k.
struct ZipperTrace {
  std::vector<double> times;
  std::vector<double> xi;
};

/// Vertical-slit zipper. Each increment of the mapped curve is replaced by
/// the vertical slit over its endpoint; zero-capacity increments are merged
/// into the next one.
inline ZipperTrace zipper(const Curve& input, const ExtractOptions& opt = {}) {
  Curve c = to_halfplane(input);
  if (c.empty()) throw Error("extract_driving: empty curve");
  std::vector<cplx> pts;
  pts.reserve(c.size() + 1);
  if (c.points[0].imag() > 0.0) pts.emplace_back(c.points[0].real(), 0.0);
  std::vector<double> src_time;
  if (!pts.empty()) src_time.push_back(c.times[0]);
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (!pts.empty() && opt.min_spacing > 0.0 && std::abs(c.points[k] - pts.back()) < opt.min_spacing &&
        k + 1 < c.size())
      continue;
    pts.push_back(c.points[k]);
    src_time.push_back(c.times[k]);
  }
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, std::abs(p - pts[0]));
  const double tol = opt.cross_tol * std::max(scale, 1e-300);
  for (std::size_t k = 0; k < c.size(); ++k)
    if (c.points[k].imag() < -tol) throw SelfCrossingError("extract_driving: curve leaves the half-plane", c.times[k]);
  if (const auto bad = first_self_crossing(c.points, tol))
    throw SelfCrossingError("extract_driving: curve crosses itself", c.times[*bad]);

  ZipperTrace out;
  out.times.push_back(0.0);
  out.xi.push_back(pts[0].real());
  double cap = 0.0;
  std::vector<cplx> z(pts.begin() + 1, pts.end());
  std::vector<double> zt(src_time.begin() + 1, src_time.end());
  for (std::size_t k = 0; k < z.size(); ++k) {
    cplx w = z[k];
    if (w.imag() < -tol)
      throw SelfCrossingError("extract_driving: curve crosses itself or the boundary", zt[k]);
    const double y = std::max(w.imag(), 0.0);
    const double dcap = y * y / 4.0;
    if (!(dcap > 0.0)) continue;
    const double xi = w.real();
    cap += dcap;
    out.times.push_back(cap);
    out.xi.push_back(xi);
    if (cap >= opt.t_max) break;
    for (std::size_t j = k + 1; j < z.size(); ++j) {
      z[j] = slit_map(z[j], xi, dcap);
      if (!std::isfinite(z[j].real()) || !std::isfinite(z[j].imag()))
        throw StepFailure("extract_driving: non-finite zipper value");
    }
  }
  return out;
}

/// Driving function of a curve, resampled onto a uniform capacity grid.
/// Disk curves yield disk (angle) drivings.
inline DrivingFunction extract_driving(const Curve& c, const ExtractOptions& opt = {}) {
  const ZipperTrace tr = zipper(c, opt);
  const double total = std::min(tr.times.back(), opt.t_max);
  DrivingFunction w;
  w.ambient = Ambient::HalfPlane;
  const std::size_t incs = tr.times.size() - 1;
  w.dt = opt.dt > 0.0 ? opt.dt : (incs > 0 ? tr.times.back() / static_cast<double>(incs) : 1.0);
  const auto n = static_cast<std::size_t>(std::floor(total / w.dt + 1e-9));
  w.values.resize(n + 1);
  std::size_t seg = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = w.time(k);
    while (seg + 1 < tr.times.size() - 1 && tr.times[seg + 1] < t) ++seg;
    if (seg + 1 >= tr.times.size()) {
      w.values[k] = tr.xi.back();
      continue;
    }
    const double t0 = tr.times[seg], t1 = tr.times[seg + 1];
    const double f = t1 > t0 ? std::clamp((t - t0) / (t1 - t0), 0.0, 1.0) : 1.0;
    w.values[k] = (1.0 - f) * tr.xi[seg] + f * tr.xi[seg + 1];
  }
  return c.ambient == Ambient::Disk ? to_disk(w) : w;
}

// ---------------------------------------------------------------------------
// Text format: `# driving ambient=<H|D> dt=<dt> n=<N>` then N + 1 values

inline void write_driving(std::ostream& os, const DrivingFunction& w) {
  os << "# driving ambient=" << ambient_tag(w.ambient) << " dt=" << format_double(w.dt) << " n=" << w.steps() << "\n";
  for (double v : w.values) os << format_double(v) << "\n";
}

inline DrivingFunction read_driving(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("read_driving: empty input");
  char amb = 0;
  double dt = 0.0;
  std::size_t n = 0;
  if (std::sscanf(line.c_str(), "# driving ambient=%c dt=%lf n=%zu", &amb, &dt, &n) != 3)
    throw Error("read_driving: bad header '" + line + "'");
  DrivingFunction w{dt, {}, parse_ambient(std::string(1, amb))};
  for (std::size_t k = 0; k <= n; ++k) {
    double v;
    if (!(is >> v)) throw Error("read_driving: expected " + std::to_string(n + 1) + " values, got " + std::to_string(k));
    w.values.push_back(v);
  }
  return w;
}

// ---------------------------------------------------------------------------
// SLE sampling

inline DrivingFunction brownian_driving(double kappa, double T, double dt, std::mt19937_64& g) {
  if (!(dt > 0.0)) throw Error("brownian_driving: dt must be positive");
  const auto n = static_cast<std::size_t>(std::llround(T / dt));
  DrivingFunction w{dt, std::vector<double>(n + 1, 0.0), Ambient::HalfPlane};
  std::normal_distribution<double> nd;
  const double sd = std::sqrt(kappa * dt);
  for (std::size_t k = 0; k < n; ++k) w.values[k + 1] = w.values[k] + sd * nd(g);
  return w;
}

/// Rough test driving: Brownian-like sine series with 1/k coefficients,
/// W(0) = 0, rescaled so that max |W| equals `amplitude`.
inline DrivingFunction random_holder_driving(double T, double dt, double amplitude, std::mt19937_64& g,
                                             int modes = 32) {
  const auto n = static_cast<std::size_t>(std::llround(T / dt));
  std::normal_distribution<double> nd;
  std::vector<double> coef(static_cast<std::size_t>(modes));
  for (auto& x : coef) x = nd(g);
  DrivingFunction w{dt, std::vector<double>(n + 1, 0.0), Ambient::HalfPlane};
  double mx = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = w.time(k);
    double v = 0.0;
    for (int j = 1; j <= modes; ++j) v += coef[static_cast<std::size_t>(j - 1)] * std::sin(j * std::numbers::pi * t / T) / j;
    w.values[k] = v;
    mx = std::max(mx, std::abs(v));
  }
  if (mx > 0.0)
    for (auto& v : w.values) v *= amplitude / mx;
  return w;
}

/// SLE_kappa pair on [0, T]; deterministic per (seed, index).
inline LoewnerPair sample_sle(double kappa, double T, double dt, std::uint64_t seed, std::uint64_t index = 0,
                              double d = std::numeric_limits<double>::quiet_NaN()) {
  if (!(kappa >= 0.0) || kappa >= 8.0) throw Error("sample_sle: kappa must lie in [0, 8)");
  auto g = make_stream(seed, index, 0x51e);
  LoewnerPair p;
  p.driving = brownian_driving(kappa, T, dt, g);
  p.curve = reverse_flow_curve(p.driving, d);
  return p;
}

// ---------------------------------------------------------------------------
// Hull statistics

inline HullStats hull_stats(const Curve& c, const DrivingFunction& w, double t) {
  HullStats h;
  h.hcap = 2.0 * t;
  std::vector<cplx> pts;
  for (std::size_t k = 0; k < c.size() && c.times[k] <= t * (1.0 + 1e-12) + 1e-15; ++k) pts.push_back(c.points[k]);
  h.diam = point_set_diameter(pts);
  const DrivingFunction hw = to_halfplane(w);
  double osc = 0.0;
  const auto n = std::min(hw.steps(), static_cast<std::size_t>(std::floor(t / hw.dt + 1e-9)));
  for (std::size_t k = 0; k <= n; ++k) osc = std::max(osc, std::abs(hw.values[k] - hw.values[0]));
  h.k_of_t = t > 0.0 ? std::sqrt(t) + osc : 0.0;
  return h;
}

// ---------------------------------------------------------------------------
// Derivative growth

/// Exponent formulas attached to the derivative estimate for reverse SLE.
inline double lambda_c(double kappa) { return 1.0 + 2.0 / kappa + 3.0 * kappa / 32.0; }

inline double q_of_beta(double beta, double kappa) {
  return std::min(lambda_c(kappa) * beta,
                  beta + 2.0 * (1.0 + beta) / kappa + beta * beta * kappa / (8.0 * (1.0 + beta)) - 2.0);
}

inline double beta_plus(double kappa) {
  return std::max(0.0, 4.0 * (kappa * std::sqrt(8.0 + kappa) - (4.0 - kappa)) / ((4.0 + kappa) * (4.0 + kappa)));
}

struct DerivativeGrowthReport {
  double beta = 0.0;
  std::vector<double> d_values;
  std::vector<double> ratio;  // sup_t d |f'(t, W(t) + i d)| / d^{1 - beta}
  double constant = 0.0;      // max over the ladder
  double stop_time = 0.0;     // horizon actually used
};

/// f'(t_k, W(t_k) + i d) as the product of the per-step inverse-slit derivatives.
inline cplx reverse_derivative(const DrivingFunction& h, std::size_t k, double d) {
  cplx w(h.values[k], d);
  cplx der(1.0, 0.0);
  for (std::size_t j = k; j-- > 0;) {
    der *= inverse_slit_derivative(w, h.values[j + 1], h.dt);
    w = inverse_slit_map(w, h.values[j + 1], h.dt);
  }
  return der;
}

/// Empirical constant in sup_t d|f'| <= c d^{1-beta} over d = d_star 2^{-j}.
/// With disk drivings the horizon ends at the first grid time where the
/// trace enters the disk ball |1 - z| <= eps_stop (eps_stop > 0).
inline DerivativeGrowthReport measure_derivative_growth(const DrivingFunction& w, double beta, double d_star,
                                                        int levels = 6, double eps_stop = 0.0) {
  if (!(beta > 0.0 && beta < 1.0)) throw Error("measure_derivative_growth: beta must lie in (0, 1)");
  if (!(d_star > 0.0 && d_star < 1.0)) throw Error("measure_derivative_growth: d_star must lie in (0, 1)");
  if (levels < 1) throw Error("measure_derivative_growth: need at least one level");
  const DrivingFunction h = to_halfplane(w);
  std::size_t n_end = h.steps();
  if (w.ambient == Ambient::Disk && eps_stop > 0.0) {
    const Curve tr = to_disk(reverse_flow_curve(h));
    for (std::size_t k = 0; k < tr.size(); ++k)
      if (std::abs(1.0 - tr.points[k]) <= eps_stop) {
        n_end = k;
        break;
      }
  }
  DerivativeGrowthReport rep;
  rep.beta = beta;
  rep.stop_time = h.time(n_end);
  for (int j = 0; j < levels; ++j) {
    const double d = d_star * std::ldexp(1.0, -j);
    double sup = 0.0;
    for (std::size_t k = 1; k <= n_end; ++k) sup = std::max(sup, d * std::abs(reverse_derivative(h, k, d)));
    rep.d_values.push_back(d);
    rep.ratio.push_back(sup / std::pow(d, 1.0 - beta));
    rep.constant = std::max(rep.constant, rep.ratio.back());
  }
  return rep;
}

}  // namespace slelab
