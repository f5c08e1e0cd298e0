#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "mtcpd/experiment.hpp"
#include "mtcpd/log.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t workers = 1;
  std::string methods;
  std::string snr_list;
  bool paper_scale = false;
};

mtcpd::ExperimentConfig build_config(const CommonOpts& opts) {
  mtcpd::ExperimentConfig cfg =
      opts.paper_scale ? mtcpd::paper_profile() : mtcpd::desk_profile();
  if (!opts.config_path.empty()) cfg = mtcpd::load_config(opts.config_path);
  if (opts.seed_given) cfg.master_seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  if (!opts.methods.empty()) {
    cfg.methods.clear();
    std::istringstream ss(opts.methods);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) cfg.methods.push_back(item);
    }
  }
  if (!opts.snr_list.empty()) {
    cfg.snr_grid_db.clear();
    std::istringstream ss(opts.snr_list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) cfg.snr_grid_db.push_back(std::strtod(item.c_str(), nullptr));
    }
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_workers) {
  cmd->add_option("--config", opts.config_path, "Config file (TOML-style)");
  cmd->add_option("--out", opts.out_dir, "Output base directory (overrides config)");
  cmd->add_option("--seed", opts.seed, "Master seed (overrides config)")
      ->each([&](const std::string&) { opts.seed_given = true; });
  cmd->add_option("--methods", opts.methods, "Comma list: cpd,mtcpd");
  cmd->add_option("--snr", opts.snr_list, "Comma list of uplink SNR values in dB");
  cmd->add_flag("--paper-scale", opts.paper_scale,
                "Start from the full-scale profile (8x8x512, 1200 realizations)");
  if (with_workers) {
    cmd->add_option("--workers", opts.workers, "Worker threads for the sweep");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MTCPD channel estimation benchmark"};
  app.require_subcommand(1);

  CommonOpts gen_opts, sweep_opts;
  std::string report_in, report_out;

  CLI::App* gen = app.add_subcommand("generate", "Draw and persist a channel dataset");
  add_common(gen, gen_opts, false);

  CLI::App* sweep = app.add_subcommand("sweep", "Run estimators over the SNR grid");
  add_common(sweep, sweep_opts, true);

  CLI::App* report = app.add_subcommand("report", "Aggregate sweep records into tables");
  report->add_option("--results", report_in, "Results directory (default <out>/results)");
  report->add_option("--out", report_out, "Output base directory");

  CLI::App* selftest = app.add_subcommand("selftest", "Run the fast invariant suite");
  (void)selftest;

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto cfg = build_config(gen_opts);
      const fs::path base = cfg.output_dir;
      mtcpd::ensure_dir(base);
      mtcpd::generate_dataset(cfg, base / "dataset");
      std::cout << "dataset written to " << (base / "dataset").string() << "\n";
      return 0;
    }
    if (sweep->parsed()) {
      const auto cfg = build_config(sweep_opts);
      const fs::path base = cfg.output_dir;
      mtcpd::ensure_dir(base);
      fs::path dump_dir;
      if (cfg.dump_components) {
        mtcpd::ensure_dir(base / "results");
        dump_dir = base / "results" / "components";
      }
      const auto out = mtcpd::run_sweep(cfg, base / "dataset", sweep_opts.workers, dump_dir);
      mtcpd::write_sweep_output(out, base / "results");
      std::cout << "results written to " << (base / "results").string() << "\n";
      const std::size_t total = cfg.n_realizations * cfg.snr_grid_db.size();
      if (out.failures.size() * 10 > total) {
        std::cerr << "sweep failed: " << out.failures.size() << "/" << total
                  << " tasks failed (budget 10%)\n";
        return 1;
      }
      if (!out.failures.empty()) {
        std::cerr << "warning: " << out.failures.size()
                  << " task(s) failed; see failures.csv\n";
      }
      return 0;
    }
    if (report->parsed()) {
      fs::path results = report_in.empty()
                             ? fs::path(report_out.empty() ? "runs/out" : report_out) / "results"
                             : fs::path(report_in);
      fs::path out_base = report_out.empty() ? results.parent_path() : fs::path(report_out);
      mtcpd::write_report(results, out_base / "report");
      std::cout << "report written to " << (out_base / "report").string() << "\n";
      return 0;
    }
    // selftest
    return mtcpd::run_selftest(std::cout) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
