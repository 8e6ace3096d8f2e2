#pragma once
// Experiment configuration, deterministic parallel runs, artifacts and
// manifests, plot data.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "slelab/convergence.hpp"
#include "slelab/observable.hpp"
#include "slelab/regularity.hpp"

namespace slelab {

inline constexpr const char* kCodeVersion = "slelab 0.1.0";

using json = nlohmann::json;

class SchemaError : public Error {
 public:
  SchemaError(const std::string& field, const std::string& what)
      : Error("config field '" + field + "': " + what), field_(field) {}
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class WorkerFailure : public Error {
 public:
  WorkerFailure(std::size_t index, const std::string& what)
      : Error("sample " + std::to_string(index) + " failed: " + what), index_(index) {}
  [[nodiscard]] std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k = {"sample-percolation", "extract-driving", "generate-sle", "estimate-cardy",
                                             "check-ks",           "tip-modulus",     "estimate-kappa", "rate-fit",
                                             "key-estimates",      "couple"};
  return k;
}

// ---------------------------------------------------------------------------
// Configuration

struct DomainSpec {
  std::string shape = "disk";  // disk | rectangle | square
  double width = 1.0, height = 1.0;
  double target_radius = 0.1;  // tip-modulus target ball
  bool operator==(const DomainSpec&) const = default;
};

struct Thresholds {
  double s = 0.9;      // block exponent of the key estimates
  double delta = 0.05;
  double eta = 0.3;
  double rho = 2.0;
  double beta = 0.5;
  double p = 0.4;
  double r = 0.5;
  bool operator==(const Thresholds&) const = default;
};

struct ExperimentConfig {
  std::string kind;
  DomainSpec domain;
  double a = 0.5, s = 0.0;
  int flower_period = 0;  // irises every this many cells; 0 = none
  double kappa = 6.0;
  std::vector<int> meshes = {32};  // inverse mesh sizes n
  std::size_t samples = 100;
  std::size_t annuli = 1;
  std::uint64_t seed = 1;
  double T = 0.5;
  double dt = 1.0 / 1024;
  Thresholds thresholds;
  std::vector<double> ratios = {2.0, 4.0, 10.0};
  double grid_t0 = 0.05, grid_t1 = 0.3;
  int grid_points = 26;
  std::string out = "out";
  std::optional<std::size_t> inject_failure;  // testing hook: this sample throws
  bool operator==(const ExperimentConfig&) const = default;

  [[nodiscard]] ModelParams model() const { return {a, s}; }
  [[nodiscard]] FlowerArrangement flowers() const {
    FlowerArrangement f;
    f.period = flower_period;
    return f;
  }
};

inline json to_json(const ExperimentConfig& c) {
  json j = {{"kind", c.kind},
            {"domain",
             {{"shape", c.domain.shape},
              {"width", c.domain.width},
              {"height", c.domain.height},
              {"target_radius", c.domain.target_radius}}},
            {"model", {{"a", c.a}, {"s", c.s}, {"flower_period", c.flower_period}}},
            {"kappa", c.kappa},
            {"meshes", c.meshes},
            {"samples", c.samples},
            {"annuli", c.annuli},
            {"seed", c.seed},
            {"T", c.T},
            {"dt", c.dt},
            {"thresholds",
             {{"s", c.thresholds.s},
              {"delta", c.thresholds.delta},
              {"eta", c.thresholds.eta},
              {"rho", c.thresholds.rho},
              {"beta", c.thresholds.beta},
              {"p", c.thresholds.p},
              {"r", c.thresholds.r}}},
            {"ratios", c.ratios},
            {"grid", {{"t0", c.grid_t0}, {"t1", c.grid_t1}, {"points", c.grid_points}}},
            {"out", c.out}};
  if (c.inject_failure) j["inject_failure"] = *c.inject_failure;
  return j;
}

namespace detail {

inline void reject_unknown(const json& j, const std::string& where, const std::vector<std::string>& keys) {
  if (!j.is_object()) throw SchemaError(where.empty() ? "<root>" : where, "expected an object");
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw SchemaError(where.empty() ? k : where + "." + k, "unknown field");
}

template <class T>
void read_field(const json& j, const std::string& key, const std::string& path, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(path, "wrong type");
  }
}

inline void read_number(const json& j, const std::string& key, const std::string& path, double& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number()) throw SchemaError(path, "expected a number");
  out = j.at(key).get<double>();
  if (!std::isfinite(out)) throw SchemaError(path, "must be finite");
}

inline void read_count(const json& j, const std::string& key, const std::string& path, std::size_t& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number_unsigned()) throw SchemaError(path, "expected a non-negative integer");
  out = j.at(key).get<std::size_t>();
}

inline bool needs_disk(const std::string& kind) { return kind != "estimate-cardy" && kind != "generate-sle"; }

}  // namespace detail

/// Checks every value against the preconditions of the operation it feeds.
inline void validate(const ExperimentConfig& c) {
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end()) throw SchemaError("kind", "unknown experiment '" + c.kind + "'");
  const auto& d = c.domain;
  if (d.shape != "disk" && d.shape != "rectangle" && d.shape != "square") throw SchemaError("domain.shape", "expected disk, rectangle or square");
  if (!(d.width > 0.0)) throw SchemaError("domain.width", "must be positive");
  if (!(d.height > 0.0)) throw SchemaError("domain.height", "must be positive");
  if (!(d.target_radius >= 0.0 && d.target_radius < 1.0)) throw SchemaError("domain.target_radius", "must lie in [0, 1)");
  if (d.shape == "square" && d.width != d.height) throw SchemaError("domain.height", "a square needs width = height");
  if (detail::needs_disk(c.kind) && d.shape != "disk") throw SchemaError("domain.shape", c.kind + " runs on the disk");
  if (c.kind == "estimate-cardy" && d.shape == "disk") throw SchemaError("domain.shape", "estimate-cardy needs a rectangle or square");
  if (!(c.a >= 0.0)) throw SchemaError("model.a", "must be non-negative");
  if (!(c.s >= 0.0)) throw SchemaError("model.s", "must be non-negative");
  if (std::abs(2.0 * c.a + 3.0 * c.s - 1.0) > 1e-12) throw SchemaError("model.s", "need 2a + 3s = 1");
  if (c.a * c.a < 2.0 * c.s * c.s) throw SchemaError("model.s", "need a^2 >= 2 s^2");
  if (c.flower_period < 0 || (c.flower_period > 0 && c.flower_period < 3))
    throw SchemaError("model.flower_period", "must be 0 or at least 3");
  if (!(c.kappa >= 0.0 && c.kappa < 8.0)) throw SchemaError("kappa", "must lie in [0, 8)");
  if ((c.kind == "couple" || c.kind == "rate-fit") && !(c.kappa > 0.0)) throw SchemaError("kappa", "coupling needs kappa > 0");
  if (c.meshes.empty()) throw SchemaError("meshes", "need at least one mesh");
  for (int n : c.meshes)
    if (n < 4) throw SchemaError("meshes", "inverse mesh sizes must be at least 4");
  if (c.kind == "rate-fit" && c.meshes.size() < 3) throw SchemaError("meshes", "rate-fit needs at least 3 meshes");
  if (c.samples == 0) throw SchemaError("samples", "must be positive");
  if (c.kind == "estimate-kappa" && c.samples < 100) throw SchemaError("samples", "estimate-kappa needs at least 100");
  if (c.annuli == 0) throw SchemaError("annuli", "must be positive");
  if (!(c.T > 0.0)) throw SchemaError("T", "must be positive");
  if (!(c.dt > 0.0 && c.dt < c.T)) throw SchemaError("dt", "must lie in (0, T)");
  const auto& t = c.thresholds;
  if (!(t.s > 0.0 && t.s < 1.0)) throw SchemaError("thresholds.s", "must lie in (0, 1)");
  if (!(t.delta > 0.0)) throw SchemaError("thresholds.delta", "must be positive");
  if (!(t.eta >= t.delta)) throw SchemaError("thresholds.eta", "must be at least delta");
  if (!(t.rho > 1.0)) throw SchemaError("thresholds.rho", "must exceed 1");
  if (!(t.beta > 0.0 && t.beta < 1.0)) throw SchemaError("thresholds.beta", "must lie in (0, 1)");
  if (!(t.r > 0.0 && t.r < 1.0)) throw SchemaError("thresholds.r", "must lie in (0, 1)");
  if (!(t.p > 0.0 && t.p * t.rho < 1.0)) throw SchemaError("thresholds.p", "must lie in (0, 1/rho)");
  for (double r : c.ratios)
    if (!(r > 1.0)) throw SchemaError("ratios", "each ratio must exceed 1");
  if (c.kind == "check-ks" && c.ratios.empty()) throw SchemaError("ratios", "need at least one ratio");
  if (!(c.grid_t0 > 0.0 && c.grid_t1 >= c.grid_t0)) throw SchemaError("grid.t0", "need 0 < t0 <= t1");
  if (c.kind == "estimate-kappa" && c.grid_t1 > c.T) throw SchemaError("grid.t1", "must not exceed T");
  if (c.grid_points < 1) throw SchemaError("grid.points", "must be positive");
  if (c.out.empty()) throw SchemaError("out", "must be non-empty");
}

/// Strict parse: unknown fields, wrong types and out-of-range values are
/// schema errors naming the field. A model given by s alone takes a from
/// 2a + 3s = 1. A non-empty verb fills a missing kind and must match a
/// given one.
inline ExperimentConfig config_from_json(const json& j, const std::string& verb = "") {
  detail::reject_unknown(j, "", {"kind", "domain", "model", "kappa", "meshes", "samples", "annuli", "seed", "T", "dt",
                                 "thresholds", "ratios", "grid", "out", "inject_failure"});
  ExperimentConfig c;
  detail::read_field(j, "kind", "kind", c.kind);
  if (!verb.empty()) {
    if (!c.kind.empty() && c.kind != verb) throw SchemaError("kind", "config is for " + c.kind + ", not " + verb);
    c.kind = verb;
  }
  if (j.contains("domain")) {
    const auto& d = j["domain"];
    detail::reject_unknown(d, "domain", {"shape", "width", "height", "target_radius"});
    detail::read_field(d, "shape", "domain.shape", c.domain.shape);
    detail::read_number(d, "width", "domain.width", c.domain.width);
    detail::read_number(d, "height", "domain.height", c.domain.height);
    detail::read_number(d, "target_radius", "domain.target_radius", c.domain.target_radius);
    if (c.domain.shape == "square" && !d.contains("height")) c.domain.height = c.domain.width;
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    detail::reject_unknown(m, "model", {"a", "s", "flower_period"});
    detail::read_field(m, "flower_period", "model.flower_period", c.flower_period);
    detail::read_number(m, "s", "model.s", c.s);
    if (m.contains("a")) detail::read_number(m, "a", "model.a", c.a);
    else c.a = ModelParams::from_s(c.s).a;
  }
  detail::read_number(j, "kappa", "kappa", c.kappa);
  if (j.contains("meshes")) {
    if (!j["meshes"].is_array()) throw SchemaError("meshes", "expected an array of integers");
    c.meshes.clear();
    for (const auto& v : j["meshes"]) {
      if (!v.is_number_integer()) throw SchemaError("meshes", "expected an array of integers");
      c.meshes.push_back(v.get<int>());
    }
  }
  detail::read_count(j, "samples", "samples", c.samples);
  detail::read_count(j, "annuli", "annuli", c.annuli);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw SchemaError("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  detail::read_number(j, "T", "T", c.T);
  detail::read_number(j, "dt", "dt", c.dt);
  if (j.contains("thresholds")) {
    const auto& t = j["thresholds"];
    detail::reject_unknown(t, "thresholds", {"s", "delta", "eta", "rho", "beta", "p", "r"});
    detail::read_number(t, "s", "thresholds.s", c.thresholds.s);
    detail::read_number(t, "delta", "thresholds.delta", c.thresholds.delta);
    detail::read_number(t, "eta", "thresholds.eta", c.thresholds.eta);
    detail::read_number(t, "rho", "thresholds.rho", c.thresholds.rho);
    detail::read_number(t, "beta", "thresholds.beta", c.thresholds.beta);
    detail::read_number(t, "p", "thresholds.p", c.thresholds.p);
    detail::read_number(t, "r", "thresholds.r", c.thresholds.r);
  }
  if (j.contains("ratios")) {
    if (!j["ratios"].is_array()) throw SchemaError("ratios", "expected an array of numbers");
    c.ratios.clear();
    for (const auto& v : j["ratios"]) {
      if (!v.is_number()) throw SchemaError("ratios", "expected an array of numbers");
      c.ratios.push_back(v.get<double>());
    }
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    detail::reject_unknown(g, "grid", {"t0", "t1", "points"});
    detail::read_number(g, "t0", "grid.t0", c.grid_t0);
    detail::read_number(g, "t1", "grid.t1", c.grid_t1);
    detail::read_field(g, "points", "grid.points", c.grid_points);
  }
  detail::read_field(j, "out", "out", c.out);
  if (j.contains("inject_failure")) {
    std::size_t k = 0;
    detail::read_count(j, "inject_failure", "inject_failure", k);
    c.inject_failure = k;
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& p, const std::string& verb = "") {
  std::ifstream is(p);
  if (!is) throw Error("cannot open config " + p.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw SchemaError("<root>", std::string("invalid JSON: ") + e.what());
  }
  // a manifest carries its config
  if (j.is_object() && j.contains("config") && j.contains("config_hash")) j = j["config"];
  return config_from_json(j, verb);
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(c).dump())));
  return buf;
}

// ---------------------------------------------------------------------------
// Deterministic parallel map

/// fn(i) for i < n on `jobs` threads pulling indices from a shared counter.
/// Results come back in index order, so reductions do not depend on
/// scheduling. The first failing index (lowest) is rethrown as WorkerFailure.
template <class F>
auto parallel_map(std::size_t n, unsigned jobs, F fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::optional<std::pair<std::size_t, std::string>> failure;
  auto work = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        slots[i].emplace(fn(i));
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(mu);
        if (!failure || i < failure->first) failure = std::make_pair(i, std::string(e.what()));
        stop = true;
      }
    }
  };
  const unsigned t = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (t == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < t; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) throw WorkerFailure(failure->first, failure->second);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// Manifest and artifacts

struct StreamRecord {
  std::string label;
  std::uint64_t seed = 0;
  std::size_t first = 0, count = 0;  // sample i draws from stream (seed, i)
};

struct RunManifest {
  ExperimentConfig config;
  std::string config_hash;
  std::string code_version = kCodeVersion;
  std::vector<StreamRecord> streams;
  double wall_clock = 0.0;
  std::vector<std::string> outputs;  // relative to config.out
  std::string status = "ok";
  std::string error;
  json summary = json::object();

  [[nodiscard]] bool ok() const { return status == "ok"; }
};

inline json to_json(const RunManifest& m) {
  json s = json::array();
  for (const auto& r : m.streams) s.push_back({{"label", r.label}, {"seed", r.seed}, {"first", r.first}, {"count", r.count}});
  return {{"config", to_json(m.config)}, {"config_hash", m.config_hash}, {"code_version", m.code_version},
          {"streams", s},                {"wall_clock", m.wall_clock},   {"outputs", m.outputs},
          {"status", m.status},          {"error", m.error},             {"summary", m.summary}};
}

inline RunManifest load_manifest(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw Error("cannot open manifest " + p.string());
  const json j = json::parse(is);
  RunManifest m;
  m.config = config_from_json(j.at("config"));
  m.config_hash = j.at("config_hash").get<std::string>();
  m.code_version = j.at("code_version").get<std::string>();
  for (const auto& r : j.at("streams"))
    m.streams.push_back({r.at("label").get<std::string>(), r.at("seed").get<std::uint64_t>(), r.at("first").get<std::size_t>(),
                         r.at("count").get<std::size_t>()});
  m.wall_clock = j.at("wall_clock").get<double>();
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  m.status = j.at("status").get<std::string>();
  m.error = j.at("error").get<std::string>();
  m.summary = j.at("summary");
  return m;
}

/// Staged output files; nothing touches the disk until the run succeeds.
class Artifacts {
 public:
  std::ostringstream& file(const std::string& rel) { return files_[rel]; }

  /// CSV with a header row; cells are pre-formatted strings.
  void csv(const std::string& rel, const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    auto& os = file(rel);
    for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
    os << "\n";
    for (const auto& r : rows) {
      for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << r[k];
      os << "\n";
    }
  }

  std::vector<std::string> commit(const std::filesystem::path& dir) const {
    std::vector<std::string> names;
    for (const auto& [rel, content] : files_) {
      const auto p = dir / rel;
      std::filesystem::create_directories(p.parent_path());
      std::ofstream os(p, std::ios::binary);
      if (!os) throw Error("cannot write " + p.string());
      os << content.str();
      names.push_back(rel);
    }
    return names;
  }

 private:
  std::map<std::string, std::ostringstream> files_;  // sorted, so the output list is stable
};

inline std::string fmt(double x) { return format_double(x); }
inline std::string fmt(std::size_t x) { return std::to_string(x); }
inline std::string fmt(int x) { return std::to_string(x); }
inline std::string fmt(bool x) { return x ? "1" : "0"; }

// ---------------------------------------------------------------------------
// Experiments

namespace detail {

inline void maybe_fail(const ExperimentConfig& c, std::size_t i) {
  if (c.inject_failure && *c.inject_failure == i) throw Error("injected failure");
}

inline std::string tag(int n) { return "n" + std::to_string(n); }

inline std::string sample_name(const std::string& dir, int n, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/n%d_%05zu.txt", dir.c_str(), n, i);
  return buf;
}

inline std::vector<ExplorationState> interfaces(const ExperimentConfig& c, const AdmissibleDomain& d, unsigned jobs) {
  return parallel_map(c.samples, jobs, [&](std::size_t i) {
    maybe_fail(c, i);
    return explore(d, c.model(), c.seed, i);
  });
}

inline std::vector<DrivingFunction> drivings(const ExperimentConfig& c, const AdmissibleDomain& d, unsigned jobs) {
  return parallel_map(c.samples, jobs, [&](std::size_t i) {
    maybe_fail(c, i);
    return interface_driving(explore(d, c.model(), c.seed, i), c.T, c.dt);
  });
}

inline JordanDomain crossing_rectangle(const DomainSpec& d) {
  const double w = d.width, h = d.height;
  return JordanDomain::rectangle(w, h).with_marked({{0, 0}, {w, 0}, {w, h}, {0, h}});
}

inline void record(RunManifest& m, int n) { m.streams.push_back({tag(n), m.config.seed, 0, m.config.samples}); }

inline void run_sample_percolation(RunManifest& m, Artifacts& out, unsigned jobs) {
  const auto& c = m.config;
  std::vector<std::vector<std::string>> rows;
  for (int n : c.meshes) {
    record(m, n);
    const auto d = percolation_disk(1.0 / n, c.flowers());
    const auto sts = interfaces(c, d, jobs);
    for (std::size_t i = 0; i < sts.size(); ++i) {
      write_curve(out.file(sample_name("curves", n, i)), Curve::from_points(sts[i].points, Ambient::Disk));
      rows.push_back({fmt(n), fmt(i), fmt(sts[i].points.size()), fmt(polyline_length(sts[i].points))});
    }
  }
  out.csv("interfaces.csv", {"n", "index", "points", "length"}, rows);
}

inline void run_extract_driving(RunManifest& m, Artifacts& out, unsigned jobs) {
  const auto& c = m.config;
  std::vector<std::vector<std::string>> rows;
  for (int n : c.meshes) {
    record(m, n);
    const auto ws = drivings(c, percolation_disk(1.0 / n, c.flowers()), jobs);
    for (std::size_t i = 0; i < ws.size(); ++i) {
      write_driving(out.file(sample_name("drivings", n, i)), ws[i]);
      rows.push_back({fmt(n), fmt(i), fmt(ws[i].steps()), fmt(ws[i].values.front()), fmt(ws[i].values.back())});
    }
  }
  out.csv("drivings.csv", {"n", "index", "steps", "w0", "w_end"}, rows);
}

inline void run_generate_sle(RunManifest& m, Artifacts& out, unsigned jobs) {
  const auto& c = m.config;
  m.streams.push_back({"sle", c.seed, 0, c.samples});
  const auto pairs = parallel_map(c.samples, jobs, [&](std::size_t i) {
    maybe_fail(c, i);
    return sample_sle(c.kappa, c.T, c.dt, c.seed, i);
  });
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    char name[64];
    std::snprintf(name, sizeof name, "sle/curve_%05zu.txt", i);
    write_curve(out.file(name), p.curve);
    std::snprintf(name, sizeof name, "sle/driving_%05zu.txt", i);
    write_driving(out.file(name), p.driving);
    double dev = 0.0;  // distance from the vertical slit 2i sqrt(t)
    for (std::size_t k = 0; k < p.curve.size(); ++k)
      dev = std::max(dev, std::abs(p.curve.points[k] - cplx(0.0, 2.0 * std::sqrt(p.curve.times[k]))));
    const cplx tip = p.curve.points.back();
    rows.push_back({fmt(i), fmt(p.curve.size()), fmt(tip.real()), fmt(tip.imag()), fmt(dev)});
  }
  out.csv("sle.csv", {"index", "points", "tip_re", "tip_im", "slit_deviation"}, rows);
}

inline void run_estimate_cardy(RunManifest& m, Artifacts& out, unsigned jobs) {
  const auto& c = m.config;
  const auto dom = crossing_rectangle(c.domain);
  const double exact = cardy_crossing(dom);
  const FlowerTables t(c.model());
  std::vector<std::vector<std::string>> rows;
  json js = json::array();
  for (int n : c.meshes) {
    record(m, n);
    const auto d = build_admissible(dom, 1.0 / n, c.flowers());
    const auto hits = parallel_map(c.samples, jobs, [&](std::size_t i) {
      maybe_fail(c, i);
      auto g = make_stream(c.seed, i, 0xca7);
      return static_cast<int>(blue_crossing(d, sample_configuration(d, t, g), kArcAB, kArcCD));
    });
    std::size_t h = 0;
    for (int x : hits) h += static_cast<std::size_t>(x);
    const auto p = proportion(h, c.samples);
    rows.push_back({fmt(n), fmt(c.samples), fmt(h), fmt(p.mean), fmt(p.se), fmt(exact)});
    js.push_back({{"n", n}, {"p", p.mean}, {"se", p.se}, {"cardy", exact}});
  }
  out.csv("cardy.csv", {"n", "samples", "hits", "p", "se", "cardy"}, rows);
  m.summary["cardy"] = js;
}

inline void run_check_ks(RunManifest& m, Artifacts& out, unsigned jobs) {
  const auto& c = m.config;
  std::vector<std::vector<std::string>> rows;
  for (int n : c.meshes) {
    record(m, n);
    const auto d = percolation_disk(1.0 / n, c.flowers());
    const double r_max = ks_radius(d);
    const auto per = parallel_map(c.samples, jobs, [&](std::size_t i) {
      maybe_fail(c, i);
      return ks_sample_hits(d, c.model(), c.ratios, c.annuli, c.seed, i, r_max);
    });
    std::vector<std::size_t> hits(c.ratios.size(), 0);
    for (const auto& h : per)
      for (std::size_t j = 0; j < h.size(); ++j) hits[j] += h[j];
    for (const auto& r : ks_rows(c.ratios, hits, c.samples * c.annuli))
      rows.push_back({fmt(n), fmt(r.ratio), fmt(r.n), fmt(r.hits), fmt(r.p_hat), fmt(r.ci_lo), fmt(r.ci_hi)});
  }
  out.csv("ks.csv", {"n", "ratio", "samples", "hits", "p", "ci_lo", "ci_hi"}, rows);
}

inline void run_tip_modulus(RunManifest& m, Artifacts& out, unsigned jobs) {
  const auto& c = m.config;
  std::vector<std::vector<std::string>> rows;
  for (int n : c.meshes) {
    record(m, n);
    const double rl = 1.0 - 2.0 / n;
    const auto d = percolation_disk(1.0 / n, c.flowers());
    const auto dom = TipDomain::jordan(JordanDomain::disk(rl), {rl, 0.0}, c.domain.target_radius);
    const auto res = parallel_map(c.samples, jobs, [&](std::size_t i) {
      maybe_fail(c, i);
      const auto st = explore(d, c.model(), c.seed, i);
      const auto curve = Curve::from_points(st.points, Ambient::Disk);
      const auto tm = tip_modulus(curve, dom, c.thresholds.delta);
      const bool bott = detect_bottleneck(curve, dom, c.thresholds.delta, c.thresholds.eta).found;
      return std::vector<std::string>{fmt(n), fmt(i), fmt(st.points.size()), fmt(c.thresholds.delta), fmt(tm.eta_tip),
                                      fmt(tm.witnessed), fmt(bott)};
    });
    rows.insert(rows.end(), res.begin(), res.end());
  }
  out.csv("tip.csv", {"n", "index", "points", "delta", "eta_tip", "witnessed", "bottleneck"}, rows);
}

inline void run_estimate_kappa(RunManifest& m, Artifacts& out, unsigned jobs) {
  const auto& c = m.config;
  const auto grid = uniform_grid(c.grid_t0, c.grid_t1, c.grid_points);
  std::vector<std::vector<std::string>> rows, trows;
  json js = json::array();
  for (int n : c.meshes) {
    record(m, n);
    const auto e = estimate_kappa(drivings(c, percolation_disk(1.0 / n, c.flowers()), jobs), grid, 400, c.seed);
    rows.push_back({fmt(n), fmt(e.samples), fmt(e.kappa), fmt(e.ci_lo), fmt(e.ci_hi), fmt(e.mean_w), fmt(e.mean_w_se),
                    fmt(e.excess_kurtosis)});
    for (const auto& r : e.rows) trows.push_back({fmt(n), fmt(r.t), fmt(r.var), fmt(r.mean), fmt(r.mean_se)});
    js.push_back({{"n", n}, {"kappa", e.kappa}, {"ci", {e.ci_lo, e.ci_hi}}, {"mean_z", e.mean_z()}});
  }
  out.csv("kappa.csv", {"n", "samples", "kappa", "ci_lo", "ci_hi", "mean_w", "mean_w_se", "excess_kurtosis"}, rows);
  out.csv("kappa_times.csv", {"n", "t", "var", "mean", "mean_se"}, trows);
  m.summary["kappa"] = js;
}

inline void run_key_estimates(RunManifest& m, Artifacts& out, unsigned jobs) {
  const auto& c = m.config;
  std::vector<std::vector<std::string>> rows, brows;
  std::vector<KeyEstimateReport> reps;
  for (int n : c.meshes) {
    record(m, n);
    const auto r = key_estimate_stats(drivings(c, percolation_disk(1.0 / n, c.flowers()), jobs), c.thresholds.s, n, c.kappa);
    rows.push_back({fmt(n), fmt(r.samples), fmt(r.blocks), fmt(r.mean_dw), fmt(r.se_dw), fmt(r.mean_qv), fmt(r.se_qv)});
    for (const auto& b : r.rows)
      brows.push_back({fmt(n), fmt(b.block), fmt(b.count), fmt(b.mean_dw), fmt(b.se_dw), fmt(b.mean_qv), fmt(b.se_qv)});
    reps.push_back(r);
  }
  out.csv("key_estimates.csv", {"n", "samples", "blocks", "mean_dw", "se_dw", "mean_qv", "se_qv"}, rows);
  out.csv("key_blocks.csv", {"n", "block", "count", "mean_dw", "se_dw", "mean_qv", "se_qv"}, brows);
  m.summary["decreasing"] = key_estimates_decrease(reps);
}

inline void run_couple(RunManifest& m, Artifacts& out, unsigned jobs) {
  const auto& c = m.config;
  std::vector<std::vector<std::string>> rows;
  json js = json::array();
  for (int n : c.meshes) {
    record(m, n);
    const auto ens = drivings(c, percolation_disk(1.0 / n, c.flowers()), jobs);
    const auto cs = couple(ens, c.thresholds.s, n, c.kappa, c.seed, true);
    for (std::size_t i = 0; i < ens.size(); ++i) {
      const auto& r = cs.couplings[i];
      const auto& w = ens[i];
      auto& os = out.file(sample_name("pairs", n, i));
      os << "t,W,B\n";
      const auto last = static_cast<std::size_t>(std::llround(r.capacity.back() / w.dt));
      for (std::size_t k = 0; k <= last; ++k)
        os << fmt(w.time(k)) << ',' << fmt(w.values[k] - w.values[0]) << ',' << fmt(r.B.at(c.kappa * w.time(k))) << "\n";
      rows.push_back({fmt(n), fmt(i), fmt(r.M.size() - 1), fmt(r.tau.back()), fmt(c.kappa * r.capacity.back()),
                      fmt(r.sup_distance)});
    }
    js.push_back({{"n", n}, {"mean_sup", cs.mean_sup}, {"se_sup", cs.se_sup}, {"correction", cs.correction},
                  {"bound", cs.bound}, {"blocks", cs.blocks}});
  }
  out.csv("coupling.csv", {"n", "index", "blocks", "tau_end", "kappa_t_end", "sup_distance"}, rows);
  m.summary["coupling"] = js;
}

inline void run_rate_fit(RunManifest& m, Artifacts& out, unsigned jobs) {
  const auto& c = m.config;
  std::vector<double> ns, es, ses;
  std::vector<std::vector<std::string>> rows;
  for (int n : c.meshes) {
    record(m, n);
    const auto cs = couple(drivings(c, percolation_disk(1.0 / n, c.flowers()), jobs), c.thresholds.s, n, c.kappa, c.seed);
    ns.push_back(n);
    es.push_back(cs.mean_sup);
    ses.push_back(cs.se_sup);
    rows.push_back({fmt(n), fmt(cs.mean_sup), fmt(cs.se_sup), fmt(cs.correction)});
  }
  const auto f = rate_fit(ns, es, ses, 2000, c.seed);
  out.csv("rate.csv", {"n", "e", "se", "correction"}, rows);
  m.summary["rate"] = {{"u", f.u}, {"se", f.se}, {"ci", {f.ci_lo, f.ci_hi}}, {"prefactor", f.prefactor}, {"positive", f.positive()}};
}

}  // namespace detail

/// Runs the experiment and writes its artifacts and manifest.json into
/// config.out. A failed run writes only the manifest, marked failed.
inline RunManifest run(const ExperimentConfig& cfg, unsigned jobs = 1) {
  validate(cfg);
  RunManifest m;
  m.config = cfg;
  m.config_hash = config_hash(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  Artifacts out;
  try {
    using Fn = void (*)(RunManifest&, Artifacts&, unsigned);
    static const std::map<std::string, Fn> table = {{"sample-percolation", detail::run_sample_percolation},
                                                    {"extract-driving", detail::run_extract_driving},
                                                    {"generate-sle", detail::run_generate_sle},
                                                    {"estimate-cardy", detail::run_estimate_cardy},
                                                    {"check-ks", detail::run_check_ks},
                                                    {"tip-modulus", detail::run_tip_modulus},
                                                    {"estimate-kappa", detail::run_estimate_kappa},
                                                    {"rate-fit", detail::run_rate_fit},
                                                    {"key-estimates", detail::run_key_estimates},
                                                    {"couple", detail::run_couple}};
    table.at(cfg.kind)(m, out, jobs);
  } catch (const std::exception& e) {
    m.status = "failed";
    m.error = e.what();
    m.summary = json::object();
  }
  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  if (m.ok()) m.outputs = out.commit(dir);
  m.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream(dir / "manifest.json") << to_json(m).dump(2) << "\n";
  return m;
}

// ---------------------------------------------------------------------------
// Plot data

inline const std::vector<std::string>& plot_kinds() {
  static const std::vector<std::string> k = {"rate", "driving-overlay", "ks-table"};
  return k;
}

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw Error("missing artifact " + p.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace detail

/// Whitespace-separated columns for gnuplot, written next to the manifest.
/// rate: n e (one row per mesh); driving-overlay: t W_n(t) B(kappa t) for
/// the first coupled sample; ks-table: ratio p sorted by ratio.
inline std::filesystem::path emit_plotdata(const RunManifest& m, const std::string& kind) {
  const auto& kinds = plot_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) throw Error("emit_plotdata: unknown plot kind '" + kind + "'");
  if (!m.ok()) throw Error("emit_plotdata: manifest is marked failed");
  const std::filesystem::path dir(m.config.out);
  const auto need = [&](const std::string& k) {
    if (m.config.kind != k) throw Error("emit_plotdata: " + kind + " needs a " + k + " run, got " + m.config.kind);
  };
  std::ostringstream os;
  if (kind == "rate") {
    need("rate-fit");
    os << "# n e\n";
    for (const auto& r : detail::read_csv(dir / "rate.csv")) os << r[0] << ' ' << r[1] << "\n";
  } else if (kind == "driving-overlay") {
    need("couple");
    os << "# t W_n B(kappa t)\n";
    const auto rows = detail::read_csv(dir / detail::sample_name("pairs", m.config.meshes.front(), 0));
    for (const auto& r : rows) os << r[0] << ' ' << r[1] << ' ' << r[2] << "\n";
  } else {
    need("check-ks");
    auto rows = detail::read_csv(dir / "ks.csv");
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return std::stod(a[1]) < std::stod(b[1]); });
    os << "# ratio p\n";
    for (const auto& r : rows) os << r[1] << ' ' << r[4] << "\n";
  }
  const auto p = dir / ("plot_" + kind + ".dat");
  std::ofstream(p) << os.str();
  return p;
}

}  // namespace slelab
