#pragma once

// Monte-Carlo experiment runner: independent realizations of every
// algorithm variant on shared data streams, averaged into learning curves.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ggkaf/dictionary.hpp"
#include "ggkaf/filter.hpp"
#include "ggkaf/systems.hpp"

namespace ggkaf {

struct VariantConfig {
  AlgoVariant variant = AlgoVariant::Nmeg;
  Hyperparams hp;
  Matrix z_init = Matrix::Identity(2, 2);  // zeta_init * I for the scalar variants

  FilterState make_filter() const { return FilterState(variant, hp, SymMatrix(z_init)); }
};

struct ExperimentConfig {
  std::string name = "custom";
  SystemKind system = SystemKind::StdGaussToy;
  Matrix a = Matrix::Identity(2, 2);  // gen_gauss_toy only
  double noise_std = kToyNoiseStd;
  std::vector<VariantConfig> variants;
  std::size_t n_iterations = 20000;
  std::size_t n_realizations = 50;
  std::uint64_t base_seed = 1;
  std::string out_dir = "out";
  std::size_t smooth_window = 0;     // 0: no smoothed curve file
  std::size_t tracking_window = 0;   // 0: no tracking files
  std::vector<std::size_t> snapshot_steps;  // dictionary snapshots of realization 0
  bool dump_realizations = false;
  unsigned threads = 0;  // 0: hardware concurrency

  Index input_dim() const { return stream(0).input_dim(); }

  SampleStream stream(std::size_t realization) const {
    SampleStream s;
    s.kind = system;
    s.a = a;
    s.noise_std = noise_std;
    s.seed = realization_seed(base_seed, realization);
    s.length = n_iterations;
    return s;
  }

  void validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
    if (n_realizations < 1) fail("n_realizations must be >= 1");
    if (variants.empty()) fail("at least one variant is required");
    if (system == SystemKind::GenGaussToy) {
      if (a.rows() != 2 || a.cols() != 2) fail("A must be 2x2");
      if (a(0, 1) != a(1, 0)) fail("A must be symmetric");
    }
    if (!(noise_std >= 0.0)) fail("noise_std must be >= 0");
    for (const VariantConfig& v : variants) {
      if (v.z_init.rows() != input_dim() || v.z_init.cols() != input_dim()) {
        fail(std::string(to_string(v.variant)) + ": initial precision must be " +
             std::to_string(input_dim()) + "x" + std::to_string(input_dim()) + " for " +
             std::string(to_string(system)));
      }
      try {
        (void)v.make_filter();
      } catch (const std::invalid_argument& e) {
        fail(std::string(to_string(v.variant)) + ": " + e.what());
      }
    }
    for (std::size_t s : snapshot_steps)
      if (s > n_iterations) fail("snapshot step " + std::to_string(s) + " exceeds n_iterations");
  }
};

struct CurvePoint {
  std::size_t n = 0;
  double mse = 0.0;
  double mean_dict_size = 0.0;
};

struct TrackingRow {
  std::size_t n = 0;
  double d = 0.0;
  double y = 0.0;
};

/// Raw outputs of one variant in one realization.
struct RunTrace {
  std::vector<double> sq_err;
  std::vector<double> dict_size;
  Diagnostics diagnostics;
  std::vector<TrackingRow> tracking;
  std::vector<std::pair<std::size_t, nlohmann::json>> snapshots;
};

struct VariantResult {
  AlgoVariant variant;
  std::vector<CurvePoint> curve;
  Diagnostics diagnostics;  // summed over realizations
  std::vector<TrackingRow> tracking;  // realization 0
  std::vector<std::pair<std::size_t, nlohmann::json>> snapshots;  // realization 0
};

struct ExperimentResult {
  std::vector<VariantResult> variants;
  std::vector<std::vector<RunTrace>> realizations;  // [r][v], kept when dump_realizations
  nlohmann::json metadata;

  const VariantResult& at(AlgoVariant v) const {
    for (const VariantResult& r : variants)
      if (r.variant == v) return r;
    throw std::out_of_range("variant " + std::string(to_string(v)) + " not in result");
  }
};

/// Rows (n, d, y) for the final `window` samples, y from the trained state.
inline std::vector<TrackingRow> tracking_rows(const FilterState& state,
                                              std::span<const Sample> stream, std::size_t window) {
  const std::size_t first = stream.size() > window ? stream.size() - window : 0;
  std::vector<TrackingRow> rows;
  rows.reserve(stream.size() - first);
  for (std::size_t n = first; n < stream.size(); ++n)
    rows.push_back({n, stream[n].d, state.predict(stream[n].u)});
  return rows;
}

namespace detail {

inline RunTrace run_variant(const ExperimentConfig& cfg, const VariantConfig& vc,
                            std::span<const Sample> stream, bool capture_extras) {
  FilterState state = vc.make_filter();
  RunTrace trace;
  trace.sq_err.reserve(stream.size());
  trace.dict_size.reserve(stream.size());
  std::vector<std::size_t> snaps = cfg.snapshot_steps;
  std::sort(snaps.begin(), snaps.end());
  auto next_snap = snaps.begin();
  auto take_snapshots = [&] {
    while (capture_extras && next_snap != snaps.end() && *next_snap == state.step_count()) {
      trace.snapshots.emplace_back(*next_snap, to_json(state.dictionary()));
      ++next_snap;
    }
  };
  take_snapshots();
  for (const Sample& s : stream) {
    const StepRecord rec = state.train_step(s.u, s.d);
    trace.sq_err.push_back(rec.sq_err);
    trace.dict_size.push_back(static_cast<double>(rec.dict_size));
    take_snapshots();
  }
  trace.diagnostics = state.diagnostics();
  if (capture_extras && cfg.tracking_window > 0)
    trace.tracking = tracking_rows(state, stream, cfg.tracking_window);
  return trace;
}

inline std::vector<RunTrace> run_realization(const ExperimentConfig& cfg, std::size_t r) {
  const std::vector<Sample> stream = cfg.stream(r).generate();
  std::vector<RunTrace> traces;
  traces.reserve(cfg.variants.size());
  for (const VariantConfig& vc : cfg.variants) traces.push_back(run_variant(cfg, vc, stream, r == 0));
  return traces;
}

inline nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index k = 0; k < m.rows(); ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (Index l = 0; l < m.cols(); ++l) row.push_back(m(k, l));
    rows.push_back(row);
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw std::invalid_argument("config: empty matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != rows[0].size()) throw std::invalid_argument("config: ragged matrix");
    for (std::size_t l = 0; l < rows[k].size(); ++l)
      m(static_cast<Index>(k), static_cast<Index>(l)) = rows[k][l];
  }
  return m;
}

}  // namespace detail

inline nlohmann::json to_json(const Hyperparams& hp) {
  return {{"mu", hp.mu},       {"rho", hp.rho},     {"lambda", hp.lambda},
          {"beta", hp.beta},   {"eta_c", hp.eta_c}, {"eta_w", hp.eta_w}};
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json variants = nlohmann::json::array();
  for (const VariantConfig& v : cfg.variants) {
    variants.push_back({{"variant", to_string(v.variant)},
                        {"hyperparams", to_json(v.hp)},
                        {"z_init", detail::matrix_json(v.z_init)}});
  }
  return {{"name", cfg.name},
          {"system", to_string(cfg.system)},
          {"A", detail::matrix_json(cfg.a)},
          {"noise_std", cfg.noise_std},
          {"variants", variants},
          {"n_iterations", cfg.n_iterations},
          {"n_realizations", cfg.n_realizations},
          {"base_seed", cfg.base_seed},
          {"out_dir", cfg.out_dir},
          {"smooth_window", cfg.smooth_window},
          {"tracking_window", cfg.tracking_window},
          {"snapshot_steps", cfg.snapshot_steps},
          {"dump_realizations", cfg.dump_realizations},
          {"threads", cfg.threads}};
}

/// Overlays the keys present in `j` onto `cfg`. A variant entry may give
/// "zeta_init" instead of "z_init" for a scalar initial width.
inline void apply_json(ExperimentConfig& cfg, const nlohmann::json& j, Index dim_hint = 0) {
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("name", cfg.name);
  if (j.contains("system")) cfg.system = parse_system(j.at("system").get<std::string>());
  if (j.contains("A")) cfg.a = detail::matrix_from_json(j.at("A"));
  get("noise_std", cfg.noise_std);
  get("n_iterations", cfg.n_iterations);
  get("n_realizations", cfg.n_realizations);
  get("base_seed", cfg.base_seed);
  get("out_dir", cfg.out_dir);
  get("smooth_window", cfg.smooth_window);
  get("tracking_window", cfg.tracking_window);
  get("snapshot_steps", cfg.snapshot_steps);
  get("dump_realizations", cfg.dump_realizations);
  get("threads", cfg.threads);
  if (j.contains("variants")) {
    const Index dim = dim_hint > 0 ? dim_hint : cfg.input_dim();
    cfg.variants.clear();
    for (const auto& jv : j.at("variants")) {
      VariantConfig v;
      v.variant = parse_variant(jv.at("variant").get<std::string>());
      if (jv.contains("hyperparams")) {
        const auto& h = jv.at("hyperparams");
        auto hget = [&h](const char* key, double& field) {
          if (h.contains(key)) field = h.at(key).get<double>();
        };
        hget("mu", v.hp.mu);
        hget("rho", v.hp.rho);
        hget("lambda", v.hp.lambda);
        hget("beta", v.hp.beta);
        hget("eta_c", v.hp.eta_c);
        hget("eta_w", v.hp.eta_w);
      }
      if (jv.contains("z_init")) {
        v.z_init = detail::matrix_from_json(jv.at("z_init"));
      } else {
        v.z_init = Matrix::Identity(dim, dim) * jv.value("zeta_init", 1.0);
      }
      cfg.variants.push_back(std::move(v));
    }
  }
}

/// Runs every realization (in parallel), then reduces in realization order.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<std::vector<RunTrace>> runs(cfg.n_realizations);
  unsigned n_threads = cfg.threads > 0 ? cfg.threads : std::thread::hardware_concurrency();
  n_threads = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(cfg.n_realizations)));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n_threads);
  auto worker = [&](unsigned id) {
    try {
      for (std::size_t r = next++; r < cfg.n_realizations; r = next++) runs[r] = detail::run_realization(cfg, r);
    } catch (...) {
      errors[id] = std::current_exception();
      next = cfg.n_realizations;
    }
  };
  if (n_threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentResult result;
  const double inv_r = 1.0 / static_cast<double>(cfg.n_realizations);
  for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
    VariantResult vr{cfg.variants[v].variant, {}, {}, runs[0][v].tracking, runs[0][v].snapshots};
    vr.curve.resize(cfg.n_iterations);
    for (std::size_t n = 0; n < cfg.n_iterations; ++n) {
      double se = 0.0;
      double ds = 0.0;
      for (std::size_t r = 0; r < cfg.n_realizations; ++r) {
        se += runs[r][v].sq_err[n];
        ds += runs[r][v].dict_size[n];
      }
      vr.curve[n] = {n, se * inv_r, ds * inv_r};
    }
    for (std::size_t r = 0; r < cfg.n_realizations; ++r) vr.diagnostics += runs[r][v].diagnostics;
    result.variants.push_back(std::move(vr));
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json diag = nlohmann::json::object();
  for (const VariantResult& vr : result.variants) {
    diag[std::string(to_string(vr.variant))] = {{"meg_log_failures", vr.diagnostics.meg_log_failures},
                                               {"precision_failures", vr.diagnostics.precision_failures},
                                               {"pruned", vr.diagnostics.pruned}};
  }
  result.metadata = {{"config", to_json(cfg)},
                     {"generator", Rng::kIdentity},
                     {"mse", "pointwise mean of instantaneous squared error over realizations"},
                     {"smoothing", cfg.smooth_window > 0
                                       ? nlohmann::json{{"kind", "trailing moving average of mse"},
                                                        {"window", cfg.smooth_window},
                                                        {"file", "curves_smoothed.csv"}}
                                       : nlohmann::json("none")},
                     {"threads", n_threads},
                     {"wall_time_s", wall},
                     {"diagnostics", diag}};
  if (cfg.dump_realizations) result.realizations = std::move(runs);
  return result;
}

/// Final-window mean of the MSE curve.
inline double tail_mean_mse(const std::vector<CurvePoint>& curve, std::size_t window) {
  const std::size_t first = curve.size() > window ? curve.size() - window : 0;
  double s = 0.0;
  for (std::size_t n = first; n < curve.size(); ++n) s += curve[n].mse;
  return curve.size() > first ? s / static_cast<double>(curve.size() - first) : 0.0;
}

/// Trailing moving average of the mse column over `window` points.
inline std::vector<CurvePoint> smooth_curve(const std::vector<CurvePoint>& curve, std::size_t window) {
  if (window <= 1) return curve;
  std::vector<CurvePoint> out = curve;
  double acc = 0.0;
  for (std::size_t n = 0; n < curve.size(); ++n) {
    acc += curve[n].mse;
    if (n >= window) acc -= curve[n - window].mse;
    out[n].mse = acc / static_cast<double>(std::min(n + 1, window));
  }
  return out;
}

namespace detail {

inline std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return os;
}

inline void finish(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace detail

/// `n,variant,mse,mean_dict_size`, rows ordered by n then variant.
inline void emit_csv(const std::vector<VariantResult>& curves, const std::filesystem::path& path) {
  std::ofstream os = detail::open_out(path);
  os << "n,variant,mse,mean_dict_size\n";
  const std::size_t len = curves.empty() ? 0 : curves.front().curve.size();
  for (std::size_t n = 0; n < len; ++n) {
    for (const VariantResult& v : curves) {
      const CurvePoint& p = v.curve.at(n);
      os << p.n << ',' << to_string(v.variant) << ',' << detail::fmt17(p.mse) << ','
         << detail::fmt17(p.mean_dict_size) << '\n';
    }
  }
  detail::finish(os, path);
}

inline void emit_tracking(const std::vector<TrackingRow>& rows, const std::filesystem::path& path) {
  std::ofstream os = detail::open_out(path);
  os << "n,d,y\n";
  for (const TrackingRow& r : rows)
    os << r.n << ',' << detail::fmt17(r.d) << ',' << detail::fmt17(r.y) << '\n';
  detail::finish(os, path);
}

/// Tracking CSV of a trained state over the final `window` samples.
inline void emit_tracking(const FilterState& state, std::span<const Sample> stream,
                          std::size_t window, const std::filesystem::path& path) {
  emit_tracking(tracking_rows(state, stream, window), path);
}

/// `n,u1..uL,d`
inline void emit_stream_csv(std::span<const Sample> samples, const std::filesystem::path& path) {
  std::ofstream os = detail::open_out(path);
  const Index dim = samples.empty() ? 0 : samples.front().u.size();
  os << 'n';
  for (Index i = 1; i <= dim; ++i) os << ",u" << i;
  os << ",d\n";
  for (std::size_t n = 0; n < samples.size(); ++n) {
    os << n;
    for (Index i = 0; i < dim; ++i) os << ',' << detail::fmt17(samples[n].u(i));
    os << ',' << detail::fmt17(samples[n].d) << '\n';
  }
  detail::finish(os, path);
}

/// `n,variant,sq_err,dict_size` for one realization.
inline void emit_realization_csv(const ExperimentConfig& cfg, const std::vector<RunTrace>& traces,
                                 const std::filesystem::path& path) {
  std::ofstream os = detail::open_out(path);
  os << "n,variant,sq_err,dict_size\n";
  for (std::size_t n = 0; n < cfg.n_iterations; ++n)
    for (std::size_t v = 0; v < traces.size(); ++v)
      os << n << ',' << to_string(cfg.variants[v].variant) << ',' << detail::fmt17(traces[v].sq_err[n])
         << ',' << detail::fmt17(traces[v].dict_size[n]) << '\n';
  detail::finish(os, path);
}

/// Writes curves.csv, metadata.json and whatever optional artifacts the
/// config asks for into cfg.out_dir.
inline void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& res) {
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  emit_csv(res.variants, dir / "curves.csv");
  if (cfg.smooth_window > 0) {
    std::vector<VariantResult> smoothed = res.variants;
    for (VariantResult& v : smoothed) v.curve = smooth_curve(v.curve, cfg.smooth_window);
    emit_csv(smoothed, dir / "curves_smoothed.csv");
  }
  for (const VariantResult& v : res.variants) {
    const std::string tag(to_string(v.variant));
    if (cfg.tracking_window > 0) emit_tracking(v.tracking, dir / ("tracking_" + tag + ".csv"));
    for (const auto& [step, snap] : v.snapshots) {
      std::ofstream os = detail::open_out(dir / ("snapshot_" + tag + "_" + std::to_string(step) + ".json"));
      os << snap.dump(2) << '\n';
    }
  }
  for (std::size_t r = 0; r < res.realizations.size(); ++r)
    emit_realization_csv(cfg, res.realizations[r], dir / ("realization_" + std::to_string(r) + ".csv"));
  std::ofstream meta = detail::open_out(dir / "metadata.json");
  meta << res.metadata.dump(2) << '\n';
  detail::finish(meta, dir / "metadata.json");
}

// Named parameter presets.

inline const char* const kPresetNames[] = {"table1", "table2a", "table2b", "table3"};

inline ExperimentConfig preset(std::string_view name) {
  ExperimentConfig cfg;
  cfg.name = std::string(name);
  auto variants_for = [](Index dim, Hyperparams base, double eta_c, double eta_w) {
    std::vector<VariantConfig> vs;
    for (AlgoVariant v : kAllVariants) {
      VariantConfig vc;
      vc.variant = v;
      vc.hp = base;
      vc.hp.eta_c = adapts_kernels(v) ? eta_c : 0.0;
      vc.hp.eta_w = adapts_kernels(v) ? eta_w : 0.0;
      vc.z_init = Matrix::Identity(dim, dim);  // zeta = zeta_init = 1, Z_init = I
      vs.push_back(vc);
    }
    return vs;
  };
  const Hyperparams toy{0.09, 0.03, 1.0e-3, 0.1, 0.0, 0.0};
  if (name == "table1") {
    cfg.system = SystemKind::StdGaussToy;
    cfg.variants = variants_for(2, toy, 1.0e-3, 0.05);
  } else if (name == "table2a" || name == "table2b") {
    cfg.system = SystemKind::GenGaussToy;
    cfg.a.resize(2, 2);
    if (name == "table2a") {
      cfg.a << 5.0, 0.5, 0.5, 0.2;
    } else {
      cfg.a << 5.0, 0.5, 0.5, 10.0;
    }
    cfg.variants = variants_for(2, toy, 1.0e-3, 0.05);
  } else if (name == "table3") {
    cfg.system = SystemKind::Lorenz;
    cfg.n_iterations = 10000;
    cfg.tracking_window = 500;
    cfg.variants = variants_for(5, Hyperparams{0.5, 0.05, 5.0e-4, 0.1, 0.0, 0.0}, 0.5, 0.1);
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) +
                                "' (expected table1, table2a, table2b or table3)");
  }
  cfg.out_dir = "out/" + cfg.name;
  return cfg;
}

}  // namespace ggkaf
