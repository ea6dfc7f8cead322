// ggkaf: run kernel adaptive filtering experiments and dump their inputs.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ggkaf/ggkaf.hpp"

namespace {

struct CommonOptions {
  std::string preset;
  std::string config_path;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> realizations;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string variants;
  std::optional<unsigned> threads;

  void add_to(CLI::App& app, bool with_out_dir = true) {
    app.add_option("--preset", preset, "Parameter preset: table1, table2a, table2b or table3");
    app.add_option("--config", config_path, "JSON experiment config (overlays the preset)");
    app.add_option("--iterations", iterations, "Samples per realization");
    app.add_option("--realizations", realizations, "Number of independent realizations");
    app.add_option("--seed", seed, "Base seed");
    if (with_out_dir) app.add_option("--out", out, "Output directory");
    app.add_option("--variants", variants, "Comma-separated subset of KNLMS_L1,NMEG_SCALAR,MEG,NMEG");
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  ggkaf::ExperimentConfig build() const {
    if (preset.empty() && config_path.empty()) {
      throw std::invalid_argument("either --preset or --config is required");
    }
    ggkaf::ExperimentConfig cfg = preset.empty() ? ggkaf::ExperimentConfig{} : ggkaf::preset(preset);
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw std::runtime_error("cannot read config file " + config_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(config_path + ": " + e.what());
      }
      ggkaf::apply_json(cfg, j);
    }
    if (iterations) cfg.n_iterations = *iterations;
    if (realizations) cfg.n_realizations = *realizations;
    if (seed) cfg.base_seed = *seed;
    if (out) cfg.out_dir = *out;
    if (threads) cfg.threads = *threads;
    if (!variants.empty()) {
      std::vector<ggkaf::AlgoVariant> wanted;
      std::stringstream ss(variants);
      for (std::string tok; std::getline(ss, tok, ',');)
        if (!tok.empty()) wanted.push_back(ggkaf::parse_variant(tok));
      std::vector<ggkaf::VariantConfig> kept;
      for (const auto& vc : cfg.variants)
        if (std::find(wanted.begin(), wanted.end(), vc.variant) != wanted.end()) kept.push_back(vc);
      cfg.variants = std::move(kept);
    }
    return cfg;
  }
};

void print_summary(const ggkaf::ExperimentConfig& cfg, const ggkaf::ExperimentResult& res) {
  const std::size_t tail = std::min<std::size_t>(1000, cfg.n_iterations);
  std::cout << cfg.name << ": " << cfg.n_realizations << " realizations x " << cfg.n_iterations
            << " iterations -> " << cfg.out_dir << "\n";
  for (const auto& v : res.variants) {
    std::cout << "  " << ggkaf::to_string(v.variant) << ": final-" << tail
              << " MSE " << ggkaf::tail_mean_mse(v.curve, tail) << ", final dict size "
              << (v.curve.empty() ? 0.0 : v.curve.back().mean_dict_size)
              << ", MEG log failures " << v.diagnostics.meg_log_failures << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized Gaussian kernel adaptive filtering experiments"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::size_t smooth = 0;
  std::optional<std::size_t> tracking;
  std::vector<std::size_t> snapshot_at;
  bool dump_realizations = false;
  CLI::App* run = app.add_subcommand("run", "Run a Monte-Carlo experiment and write CSV curves");
  run_opts.add_to(*run);
  run->add_option("--smooth", smooth, "Also write curves smoothed by a trailing moving average of W points");
  run->add_option("--tracking", tracking, "Tracking window (final samples of realization 0)");
  run->add_option("--snapshot-at", snapshot_at, "Dictionary snapshot steps of realization 0");
  run->add_flag("--dump-realizations", dump_realizations, "Write per-realization CSVs");

  CommonOptions dump_opts;
  std::size_t realization = 0;
  std::optional<std::size_t> length;
  std::string stream_out;
  CLI::App* dump = app.add_subcommand("dump-stream", "Write the (u, d) stream of one realization");
  dump_opts.add_to(*dump, false);
  dump->add_option("--realization", realization, "Realization index");
  dump->add_option("--length", length, "Number of samples (default: iterations)");
  dump->add_option("--out", stream_out, "Output CSV path")->required();

  CommonOptions snap_opts;
  std::vector<std::size_t> at;
  CLI::App* snap = app.add_subcommand("snapshot", "Dump dictionary snapshots of realization 0 as JSON");
  snap_opts.add_to(*snap);
  snap->add_option("--at", at, "Step count(s) at which to snapshot")->required();

  std::string show_preset;
  CLI::App* show = app.add_subcommand("show-config", "Print a preset as a JSON config");
  show->add_option("--preset", show_preset, "Preset name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ggkaf::ExperimentConfig cfg = run_opts.build();
      cfg.smooth_window = smooth;
      if (tracking) cfg.tracking_window = *tracking;
      if (!snapshot_at.empty()) cfg.snapshot_steps = snapshot_at;
      cfg.dump_realizations = dump_realizations;
      const ggkaf::ExperimentResult res = ggkaf::run_experiment(cfg);
      ggkaf::write_outputs(cfg, res);
      print_summary(cfg, res);
    } else if (*dump) {
      ggkaf::ExperimentConfig cfg = dump_opts.build();
      if (length) cfg.n_iterations = *length;
      cfg.validate();
      ggkaf::emit_stream_csv(cfg.stream(realization).generate(), stream_out);
    } else if (*snap) {
      ggkaf::ExperimentConfig cfg = snap_opts.build();
      cfg.n_realizations = 1;
      cfg.snapshot_steps = at;
      if (!snap_opts.iterations) cfg.n_iterations = *std::max_element(at.begin(), at.end());
      cfg.tracking_window = 0;
      const ggkaf::ExperimentResult res = ggkaf::run_experiment(cfg);
      std::filesystem::create_directories(cfg.out_dir);
      for (const auto& v : res.variants) {
        for (const auto& [step, json] : v.snapshots) {
          const auto path = std::filesystem::path(cfg.out_dir) /
                            ("snapshot_" + std::string(ggkaf::to_string(v.variant)) + "_" +
                             std::to_string(step) + ".json");
          std::ofstream os(path);
          os << json.dump(2) << '\n';
          if (!os) throw std::runtime_error("write failed: " + path.string());
          std::cout << path.string() << "\n";
        }
      }
    } else if (*show) {
      std::cout << ggkaf::to_json(ggkaf::preset(show_preset)).dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "ggkaf: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
