#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mtcpd/experiment.hpp"
#include "mtcpd/log.hpp"
#include "mtcpd/tensor_io.hpp"
#include "oracles.hpp"

using namespace mtcpd;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mtcpd_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.scenario.x = 2;
  cfg.scenario.y = 2;
  cfg.scenario.n = 2;
  cfg.scenario.k = 8;
  cfg.scenario.n_clusters = 2;
  cfg.scenario.subpaths_per_cluster = 2;
  cfg.n_realizations = 2;
  cfg.snr_grid_db = {kNoiselessSnrDb, 0.0};
  cfg.r_max = 3;
  cfg.fixed_rank = 3;
  cfg.streams_p = {1};
  cfg.master_seed = 77;
  return cfg;
}

}  // namespace

TEST_CASE("config text parses with overrides and defaults") {
  const std::string text = R"(
# comment
master_seed = 42
n_realizations = 3
snr_grid_db = [-10, 0, inf]
methods = ["mtcpd"]
r_max = 5
streams_p = [1, 2]

[scenario]
x = 4
y = 2
k = 16

[als]
tolerance = 1e-5

[plans]
mtcpd = "x=2,2;y=2;k=4,4"
)";
  const ExperimentConfig cfg = parse_config(text);
  CHECK(cfg.master_seed == 42);
  CHECK(cfg.n_realizations == 3);
  CHECK(cfg.snr_grid_db.size() == 3);
  CHECK(std::isinf(cfg.snr_grid_db[2]));
  CHECK(cfg.methods == std::vector<std::string>{"mtcpd"});
  CHECK(cfg.r_max == 5);
  CHECK(cfg.fixed_rank == 5);  // defaults to r_max when absent
  CHECK(cfg.scenario.x == 4);
  CHECK(cfg.scenario.k == 16);
  CHECK(cfg.als.tolerance == 1e-5);
  const auto plan = cfg.plan_for("mtcpd");
  CHECK(plan.factors_x == std::vector<std::size_t>{2, 2});
  CHECK(plan.factors_k == std::vector<std::size_t>{4, 4});
}

TEST_CASE("config errors carry precise messages") {
  CHECK_THROWS_WITH_AS(parse_config("als.tolerance = -1"),
                       doctest::Contains("tolerance"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("unknown_knob = 3"),
                       doctest::Contains("unknown_knob"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("r_max = [1"), doctest::Contains("unterminated"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("methods = [\"svd\"]"), doctest::Contains("svd"),
                       std::invalid_argument);
  CHECK_THROWS_AS(load_config("/nonexistent/mtcpd.toml"), std::runtime_error);
}

TEST_CASE("plan specs resolve and validate") {
  const auto trivial = resolve_plan("trivial", 4, 4, 16);
  CHECK(trivial.is_trivial());
  const auto all2 = resolve_plan("all2", 4, 4, 16);
  CHECK(all2.order() == 8);
  const auto custom = resolve_plan("x=4;y=2,2;k=4,2,2", 4, 4, 16);
  CHECK(custom.factors_y == std::vector<std::size_t>{2, 2});
  CHECK_THROWS_AS(resolve_plan("x=4;y=4", 4, 4, 16), std::invalid_argument);
  CHECK_THROWS_AS(resolve_plan("x=3;y=4;k=16", 4, 4, 16), std::invalid_argument);
}

TEST_CASE("ensure_dir creates one level and rejects missing parents") {
  const fs::path base = scratch_dir("ensure_dir");
  ensure_dir(base / "fresh");
  CHECK(fs::is_directory(base / "fresh"));
  ensure_dir(base / "fresh");  // idempotent
  CHECK_THROWS_AS(ensure_dir(base / "missing_parent" / "child"), std::runtime_error);
}

TEST_CASE("dataset generation is byte-identical across reruns") {
  const auto cfg = tiny_config();
  const fs::path d1 = scratch_dir("gen_a");
  const fs::path d2 = scratch_dir("gen_b");
  generate_dataset(cfg, d1);
  generate_dataset(cfg, d2);
  CHECK(slurp(d1 / "dataset.meta") == slurp(d2 / "dataset.meta"));
  CHECK(slurp(d1 / "real_00000.mtct") == slurp(d2 / "real_00000.mtct"));
  CHECK(slurp(d1 / "real_00001.mtct") == slurp(d2 / "real_00001.mtct"));

  // dataset is re-derivable: stored paths resynthesize the stored tensor
  const DatasetInfo info = read_dataset_meta(d1);
  REQUIRE(info.n_realizations == 2);
  for (std::size_t q = 0; q < 2; ++q) {
    const ComplexTensor stored = load_realization(d1, q);
    const ComplexTensor redo = normalize_channel(synthesize_channel(
        info.paths[q], info.scenario.x, info.scenario.y, info.scenario.n, info.scenario.k));
    ComplexTensor diff = redo;
    diff -= stored;
    CHECK(frobenius_norm(diff) <= 1e-12);
  }
}

TEST_CASE("zero-spread datasets store unit-rank channels") {
  auto cfg = tiny_config();
  cfg.scenario.n_clusters = 1;
  cfg.scenario.subpaths_per_cluster = 3;
  cfg.scenario.angular_spread = 0.0;
  cfg.scenario.delay_spread = 0.0;
  const fs::path dir = scratch_dir("gen_rank1");
  generate_dataset(cfg, dir);
  for (std::size_t q = 0; q < cfg.n_realizations; ++q) {
    const ComplexTensor h = load_realization(dir, q);
    for (std::size_t mode = 0; mode < 3; ++mode) {
      const auto sv = oracle::singular_values(unfold(h, mode));
      CHECK(sv[1] <= 1e-10 * sv[0]);
    }
  }
}

TEST_CASE("sweep covers the configured record grid") {
  const auto cfg = tiny_config();
  const fs::path dir = scratch_dir("sweep_grid");
  generate_dataset(cfg, dir);
  const SweepOutput out = run_sweep(cfg, dir, 1);

  CHECK(out.failures.empty());
  // per (q, snr, slice): methods x rules + baseline + perfect
  const std::size_t expected =
      cfg.n_realizations * cfg.snr_grid_db.size() * cfg.scenario.n *
      (cfg.methods.size() * cfg.rank_rules.size() + 2);
  CHECK(out.records.size() == expected);
  CHECK(!out.config_hash.empty());
  CHECK(out.code_version == std::string(kCodeVersion));

  // components rows: every (q, snr, slice, method) contributes >= 1, <= r_max
  std::size_t with_method = 0;
  for (const auto& c : out.components) {
    CHECK(c.r >= 1);
    CHECK(c.r <= cfg.r_max);
    CHECK(c.sigma_r >= 0.0);
    CHECK(c.sigma_r <= 1.0);
    ++with_method;
  }
  CHECK(with_method >= cfg.n_realizations * cfg.snr_grid_db.size() * cfg.scenario.n *
                           cfg.methods.size());
}

TEST_CASE("noiseless single-path sweep selects rank 1 with tiny error") {
  auto cfg = tiny_config();
  cfg.scenario.n_clusters = 1;
  cfg.scenario.subpaths_per_cluster = 1;
  cfg.scenario.angular_spread = 0.0;
  cfg.scenario.delay_spread = 0.0;
  cfg.snr_grid_db = {kNoiselessSnrDb};
  const fs::path dir = scratch_dir("sweep_clean");
  generate_dataset(cfg, dir);
  const SweepOutput out = run_sweep(cfg, dir, 1);
  CHECK(out.failures.empty());
  for (const auto& r : out.records) {
    if (r.method == "baseline" || r.method == "perfect") continue;
    if (r.rank_rule == "avg") {
      CHECK(r.selected_rank == 1);
      CHECK(r.slice_error <= 1e-6);
    }
  }
}

TEST_CASE("sweep output is byte-identical regardless of worker count") {
  const auto cfg = tiny_config();
  const fs::path dir = scratch_dir("sweep_det");
  generate_dataset(cfg, dir);
  const SweepOutput a = run_sweep(cfg, dir, 1);
  const SweepOutput b = run_sweep(cfg, dir, 3);

  const fs::path ra = scratch_dir("sweep_det_out_a");
  const fs::path rb = scratch_dir("sweep_det_out_b");
  write_sweep_output(a, ra);
  write_sweep_output(b, rb);
  CHECK(slurp(ra / "records.csv") == slurp(rb / "records.csv"));
  CHECK(slurp(ra / "components.csv") == slurp(rb / "components.csv"));
  CHECK(slurp(ra / "failures.csv") == slurp(rb / "failures.csv"));
  CHECK(slurp(ra / "run.meta") == slurp(rb / "run.meta"));
}

TEST_CASE("records csv round trips through the reader") {
  const auto cfg = tiny_config();
  const fs::path dir = scratch_dir("csv_rt");
  generate_dataset(cfg, dir);
  const SweepOutput out = run_sweep(cfg, dir, 1);
  write_sweep_output(out, dir);

  std::vector<std::size_t> streams;
  const auto rows = read_records_csv(dir / "records.csv", streams);
  REQUIRE(rows.size() == out.records.size());
  CHECK(streams == cfg.streams_p);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].realization == out.records[i].realization);
    CHECK(rows[i].method == out.records[i].method);
    CHECK(rows[i].rank_rule == out.records[i].rank_rule);
    CHECK(rows[i].selected_rank == out.records[i].selected_rank);
    CHECK(rows[i].slice_error == out.records[i].slice_error);  // exact round trip
    CHECK(rows[i].full_error == out.records[i].full_error);
    for (std::size_t p = 0; p < streams.size(); ++p) {
      CHECK(rows[i].se_per_p[p] == out.records[i].se_per_p[p]);
    }
  }
}

TEST_CASE("report tables aggregate the records faithfully") {
  const auto cfg = tiny_config();
  const fs::path base = scratch_dir("report");
  const fs::path dataset = base / "dataset";
  const fs::path results = base / "results";
  const fs::path report = base / "report";
  ensure_dir(dataset);
  generate_dataset(cfg, dataset);
  const SweepOutput out = run_sweep(cfg, dataset, 1);
  write_sweep_output(out, results);
  write_report(results, report);

  // (a) rank table: one row per (snr, method, rule), method rows only
  std::size_t rank_rows = 0;
  {
    std::ifstream f(report / "rank_vs_snr.csv");
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("snr_db", 0) == 0) continue;
      ++rank_rows;
      CHECK(line.find("baseline") == std::string::npos);
      CHECK(line.find("perfect") == std::string::npos);
    }
  }
  CHECK(rank_rows == cfg.snr_grid_db.size() * cfg.methods.size() * cfg.rank_rules.size());

  // (b) dB table equals 10*log10 of the median of stored linear errors
  std::vector<std::size_t> streams;
  const auto rows = read_records_csv(results / "records.csv", streams);
  auto median_of = [&](double snr, const std::string& method, const std::string& rule) {
    std::vector<double> vals;
    for (const auto& r : rows) {
      if (r.snr_db == snr && r.method == method && r.rank_rule == rule) {
        vals.push_back(r.slice_error);
      }
    }
    REQUIRE(!vals.empty());
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    return n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
  };
  {
    std::ifstream f(report / "slice_error_db_vs_snr.csv");
    std::string line;
    bool checked_any = false;
    while (std::getline(f, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("snr_db", 0) == 0) continue;
      std::istringstream ss(line);
      std::string snr_s, method, rule, val_s;
      std::getline(ss, snr_s, ',');
      std::getline(ss, method, ',');
      std::getline(ss, rule, ',');
      std::getline(ss, val_s, ',');
      if (method == "perfect") continue;  // exact zero has no finite dB value
      const double snr = std::strtod(snr_s.c_str(), nullptr);
      const double val = std::strtod(val_s.c_str(), nullptr);
      const double want = 10.0 * std::log10(median_of(snr, method, rule));
      if (std::isfinite(want)) {
        CHECK(val == doctest::Approx(want).epsilon(1e-12));
      } else {
        CHECK(val == want);  // a zero median renders as -inf dB
      }
      checked_any = true;
    }
    CHECK(checked_any);
  }

  // (c) the perfect-CSI spectral efficiency row is constant across SNR
  {
    std::ifstream f(report / "se_vs_snr.csv");
    std::string line;
    std::vector<double> perfect_se;
    while (std::getline(f, line)) {
      if (line.find(",perfect,") == std::string::npos) continue;
      const auto last_comma = line.rfind(',');
      perfect_se.push_back(std::strtod(line.substr(last_comma + 1).c_str(), nullptr));
    }
    REQUIRE(perfect_se.size() == cfg.snr_grid_db.size());
    for (double v : perfect_se) CHECK(v == doctest::Approx(perfect_se[0]).epsilon(1e-12));
  }

  CHECK(fs::exists(report / "full_error_vs_snr.csv"));
}

TEST_CASE("sweep can persist per-slice component dumps") {
  auto cfg = tiny_config();
  cfg.dump_components = true;
  const fs::path base = scratch_dir("dump");
  const fs::path dataset = base / "dataset";
  const fs::path dumps = base / "components";
  ensure_dir(dataset);
  generate_dataset(cfg, dataset);
  const SweepOutput out = run_sweep(cfg, dataset, 1, dumps);
  CHECK(out.failures.empty());

  // one dump per (q, snr, slice, method); spot check a round trip
  std::size_t n_idx = 0;
  for (const auto& e : fs::directory_iterator(dumps)) {
    if (e.path().extension() == ".idx") ++n_idx;
  }
  CHECK(n_idx == cfg.n_realizations * cfg.snr_grid_db.size() * cfg.scenario.n *
                     cfg.methods.size());
  const auto comps = read_component_dump(dumps / "comp_q00000_s00_n0_cpd");
  CHECK(!comps.empty());
  for (const auto& c : comps) {
    CHECK(c.coherence.has_value());
    CHECK(c.physical_factors[0].size() == cfg.scenario.x);
    CHECK(c.physical_factors[2].size() == cfg.scenario.k);
  }
}

TEST_CASE("selftest passes and stays fast") {
  const auto start = std::chrono::steady_clock::now();
  std::ostringstream out;
  CHECK(run_selftest(out));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 60.0);
  CHECK(out.str().find("FAIL") == std::string::npos);
}

TEST_CASE("profiles validate and provenance is well formed") {
  const ExperimentConfig desk = desk_profile();
  desk.validate();
  CHECK(desk.scenario.x == 4);
  CHECK(desk.r_max == 16);

  const ExperimentConfig paper = paper_profile();
  paper.validate();
  CHECK(paper.scenario.x == 8);
  CHECK(paper.scenario.k == 512);
  CHECK(paper.r_max == 40);
  CHECK(paper.n_realizations == 1200);
  CHECK(paper.snr_grid_db.front() == -24.0);
  CHECK(paper.snr_grid_db.back() == 4.0);
  CHECK(paper.als.max_iterations == 1000);
  CHECK(paper.als.tolerance == 1e-6);
  // Table-I plan shapes
  const auto cpd_plan = paper.plan_for("cpd");
  CHECK(cpd_plan.is_trivial());
  const auto mt_plan = paper.plan_for("mtcpd");
  CHECK(mt_plan.factors_x == std::vector<std::size_t>{2, 2, 2});
  CHECK(mt_plan.factors_k.size() == 9);

  CHECK(desk.config_hash().size() == 16);
  CHECK(desk.config_hash() != paper.config_hash());
  // hash is stable against an unrelated field (output_dir is not provenance)
  ExperimentConfig moved = desk;
  moved.output_dir = "elsewhere";
  CHECK(moved.config_hash() == desk.config_hash());
}

TEST_CASE("sweep rejects a mismatched dataset") {
  auto cfg = tiny_config();
  const fs::path dir = scratch_dir("sweep_mismatch");
  generate_dataset(cfg, dir);
  cfg.master_seed += 1;
  CHECK_THROWS_AS(run_sweep(cfg, dir, 1), std::runtime_error);
  cfg.master_seed -= 1;
  cfg.scenario.k = 16;
  CHECK_THROWS_AS(run_sweep(cfg, dir, 1), std::runtime_error);
  CHECK_THROWS_AS(run_sweep(tiny_config(), scratch_dir("no_dataset"), 1), std::runtime_error);
}
