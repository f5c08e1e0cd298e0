#include "mtcpd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "mtcpd/link_eval.hpp"
#include "mtcpd/log.hpp"
#include "mtcpd/selection.hpp"
#include "mtcpd/tensor_io.hpp"

namespace mtcpd {

namespace {

namespace fs = std::filesystem;

// Substream purposes, mixed into stream ids.
constexpr std::uint64_t kStreamScenario = 1;
constexpr std::uint64_t kStreamNoise = 2;

std::string realization_filename(std::size_t q) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "real_%05zu.mtct", q);
  return buf;
}

std::uint64_t snr_bits(double snr_db) { return std::bit_cast<std::uint64_t>(snr_db); }

void parallel_for(std::size_t n_tasks, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n_tasks <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const std::size_t count = std::min(workers, n_tasks);
  pool.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n_tasks) break;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

struct SliceMethodData {
  std::vector<Rank1Component> components;
  std::vector<double> cum_errors;
};

struct TaskData {
  bool failed = false;
  std::string error;
  std::vector<std::vector<SliceMethodData>> slices;  // [slice][method]
  std::vector<RecordRow> reference_rows;
};

ComplexTensor slice_tensor(const ComplexTensor& h, std::size_t n, std::size_t x, std::size_t y) {
  return reshape_ura(ue_slice(h, n), x, y);
}

std::vector<double> se_for_estimate(const ComplexTensor& clean, const ComplexTensor& est,
                                    const ExperimentConfig& cfg) {
  std::vector<double> se;
  se.reserve(cfg.streams_p.size());
  for (std::size_t p : cfg.streams_p) {
    se.push_back(evaluate_realization(clean, est, p, cfg.snr_dl_db));
  }
  return se;
}

TaskData process_task(const ExperimentConfig& cfg,
                      const std::vector<TensorizationPlan>& plans,
                      const ChannelRealization& real, std::size_t q) {
  TaskData task;
  const std::size_t x = cfg.scenario.x, y = cfg.scenario.y;
  const std::size_t n_slices = cfg.scenario.n;
  const double snr_db = real.snr_db;
  const ComplexTensor& clean = real.clean;
  const ComplexTensor& noisy = *real.noisy;

  task.slices.resize(n_slices);
  for (std::size_t n = 0; n < n_slices; ++n) {
    const ComplexTensor clean_slice = slice_tensor(clean, n, x, y);
    const ComplexTensor noisy_slice = slice_tensor(noisy, n, x, y);
    task.slices[n].resize(cfg.methods.size());
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      SliceMethodData& data = task.slices[n][m];
      data.components = extract_components(noisy_slice, plans[m], cfg.r_max, cfg.als);
      data.cum_errors.reserve(data.components.size());
      ComplexTensor acc({x, y, cfg.scenario.k});
      for (auto& comp : data.components) {
        component_coherence(comp);
        acc += reconstruct(std::span(&comp, 1), 1);
        data.cum_errors.push_back(reconstruction_error(clean_slice, acc));
      }
    }
  }

  // Reference rows: raw noisy observation and perfect CSI.
  const double full_noise_error = reconstruction_error(clean, noisy);
  const std::vector<double> se_baseline = se_for_estimate(clean, noisy, cfg);
  const std::vector<double> se_perfect = se_for_estimate(clean, clean, cfg);
  for (std::size_t n = 0; n < n_slices; ++n) {
    const ComplexTensor clean_slice = slice_tensor(clean, n, x, y);
    const ComplexTensor noisy_slice = slice_tensor(noisy, n, x, y);
    RecordRow baseline;
    baseline.realization = q;
    baseline.ue_slice = n;
    baseline.snr_db = snr_db;
    baseline.method = "baseline";
    baseline.rank_rule = "none";
    baseline.selected_rank = 0;
    baseline.slice_error = reconstruction_error(clean_slice, noisy_slice);
    baseline.full_error = full_noise_error;
    baseline.se_per_p = se_baseline;
    task.reference_rows.push_back(std::move(baseline));

    RecordRow perfect;
    perfect.realization = q;
    perfect.ue_slice = n;
    perfect.snr_db = snr_db;
    perfect.method = "perfect";
    perfect.rank_rule = "none";
    perfect.selected_rank = 0;
    perfect.slice_error = 0.0;
    perfect.full_error = 0.0;
    perfect.se_per_p = se_perfect;
    task.reference_rows.push_back(std::move(perfect));
  }
  return task;
}

double padded_cum_error(const SliceMethodData& data, std::size_t r, double fallback) {
  if (data.cum_errors.empty()) return fallback;
  const std::size_t idx = std::min(r, data.cum_errors.size()) - 1;
  return data.cum_errors[idx];
}

void write_csv_header(std::ostream& os, const SweepOutput& out) {
  os << "# " << out.code_version << "\n";
  os << "# config_hash " << out.config_hash << "\n";
  os << "# master_seed " << out.master_seed << "\n";
}

}  // namespace

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) {
      throw std::runtime_error("path exists and is not a directory: " + dir.string());
    }
    return;
  }
  // Single-level create: a missing parent is an error, not silently built.
  if (!fs::create_directory(dir, ec) || ec) {
    throw std::runtime_error("cannot create directory " + dir.string() +
                             (ec ? ": " + ec.message() : ""));
  }
}

void generate_dataset(const ExperimentConfig& cfg, const fs::path& dataset_dir) {
  cfg.validate();
  ensure_dir(dataset_dir);

  std::ostringstream meta;
  meta << "# mtcpd dataset\n";
  meta << "format_version = 1\n";
  meta << "code_version = " << kCodeVersion << "\n";
  meta << "master_seed = " << cfg.master_seed << "\n";
  meta << "n_realizations = " << cfg.n_realizations << "\n";
  meta << "scenario.x = " << cfg.scenario.x << "\n";
  meta << "scenario.y = " << cfg.scenario.y << "\n";
  meta << "scenario.n = " << cfg.scenario.n << "\n";
  meta << "scenario.k = " << cfg.scenario.k << "\n";
  meta << "scenario.n_clusters = " << cfg.scenario.n_clusters << "\n";
  meta << "scenario.subpaths_per_cluster = " << cfg.scenario.subpaths_per_cluster << "\n";
  meta << "scenario.angular_spread = " << format_double(cfg.scenario.angular_spread) << "\n";
  meta << "scenario.delay_spread = " << format_double(cfg.scenario.delay_spread) << "\n";
  meta << "scenario.power_decay_db = " << format_double(cfg.scenario.power_decay_db) << "\n";

  RandomStream root(cfg.master_seed);
  for (std::size_t q = 0; q < cfg.n_realizations; ++q) {
    RandomStream stream = root.substream({kStreamScenario, q});
    const auto paths = sample_scenario(cfg.scenario, stream);
    const ComplexTensor clean = normalize_channel(synthesize_channel(
        paths, cfg.scenario.x, cfg.scenario.y, cfg.scenario.n, cfg.scenario.k));
    write_tensor(dataset_dir / realization_filename(q), clean);

    meta << "[realization " << q << "]\n";
    for (const auto& p : paths) {
      meta << "path = " << format_double(p.gain.real()) << " " << format_double(p.gain.imag())
           << " " << format_double(p.alpha) << " " << format_double(p.beta) << " "
           << format_double(p.gamma) << " " << format_double(p.tau) << "\n";
    }
  }

  std::ofstream f(dataset_dir / "dataset.meta", std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write dataset.meta");
  f << meta.str();
}

DatasetInfo read_dataset_meta(const fs::path& dataset_dir) {
  std::ifstream f(dataset_dir / "dataset.meta");
  if (!f) {
    throw std::runtime_error("dataset not found (missing " +
                             (dataset_dir / "dataset.meta").string() + ")");
  }
  DatasetInfo info;
  std::string line;
  long current = -1;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      std::size_t q = 0;
      if (std::sscanf(line.c_str(), "[realization %zu]", &q) != 1) {
        throw std::runtime_error("dataset.meta: bad section '" + line + "'");
      }
      current = static_cast<long>(q);
      if (info.paths.size() <= q) info.paths.resize(q + 1);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string skey = line.substr(0, eq);
    while (!skey.empty() && skey.back() == ' ') skey.pop_back();
    const std::string val = line.substr(eq + 1);
    std::istringstream vs(val);
    if (skey == "master_seed") {
      vs >> info.master_seed;
    } else if (skey == "n_realizations") {
      vs >> info.n_realizations;
    } else if (skey == "scenario.x") {
      vs >> info.scenario.x;
    } else if (skey == "scenario.y") {
      vs >> info.scenario.y;
    } else if (skey == "scenario.n") {
      vs >> info.scenario.n;
    } else if (skey == "scenario.k") {
      vs >> info.scenario.k;
    } else if (skey == "scenario.n_clusters") {
      vs >> info.scenario.n_clusters;
    } else if (skey == "scenario.subpaths_per_cluster") {
      vs >> info.scenario.subpaths_per_cluster;
    } else if (skey == "scenario.angular_spread") {
      vs >> info.scenario.angular_spread;
    } else if (skey == "scenario.delay_spread") {
      vs >> info.scenario.delay_spread;
    } else if (skey == "scenario.power_decay_db") {
      vs >> info.scenario.power_decay_db;
    } else if (skey == "path") {
      if (current < 0) throw std::runtime_error("dataset.meta: path outside a realization");
      PropagationPath p;
      double re = 0.0, im = 0.0;
      vs >> re >> im >> p.alpha >> p.beta >> p.gamma >> p.tau;
      if (!vs) throw std::runtime_error("dataset.meta: malformed path line");
      p.gain = cplx(re, im);
      info.paths[static_cast<std::size_t>(current)].push_back(p);
    }
    // unknown keys (format_version, code_version) are informational
  }
  if (info.n_realizations == 0 || info.paths.size() != info.n_realizations) {
    throw std::runtime_error("dataset.meta: inconsistent realization count");
  }
  return info;
}

ComplexTensor load_realization(const fs::path& dataset_dir, std::size_t q) {
  return read_tensor(dataset_dir / realization_filename(q));
}

SweepOutput run_sweep(const ExperimentConfig& cfg, const fs::path& dataset_dir,
                      std::size_t workers, const fs::path& dump_dir) {
  cfg.validate();
  if (!dump_dir.empty()) ensure_dir(dump_dir);
  const DatasetInfo info = read_dataset_meta(dataset_dir);
  if (info.master_seed != cfg.master_seed) {
    throw std::runtime_error("dataset seed does not match config master_seed");
  }
  if (info.scenario.x != cfg.scenario.x || info.scenario.y != cfg.scenario.y ||
      info.scenario.n != cfg.scenario.n || info.scenario.k != cfg.scenario.k) {
    throw std::runtime_error("dataset scenario dimensions do not match config");
  }
  if (info.n_realizations < cfg.n_realizations) {
    throw std::runtime_error("dataset has fewer realizations than the config requests");
  }

  std::vector<TensorizationPlan> plans;
  plans.reserve(cfg.methods.size());
  for (const auto& m : cfg.methods) plans.push_back(cfg.plan_for(m));

  log_info("loading " + std::to_string(cfg.n_realizations) + " realizations");
  std::vector<ComplexTensor> clean(cfg.n_realizations);
  for (std::size_t q = 0; q < cfg.n_realizations; ++q) {
    clean[q] = load_realization(dataset_dir, q);
  }

  SweepOutput out;
  out.streams_p = cfg.streams_p;
  out.config_hash = cfg.config_hash();
  out.master_seed = cfg.master_seed;
  out.code_version = kCodeVersion;

  const std::size_t x = cfg.scenario.x, y = cfg.scenario.y;

  for (std::size_t s = 0; s < cfg.snr_grid_db.size(); ++s) {
    const double snr_db = cfg.snr_grid_db[s];
    log_info("sweep snr " + format_double(snr_db) + " dB (" + std::to_string(s + 1) + "/" +
             std::to_string(cfg.snr_grid_db.size()) + ")");

    std::vector<TaskData> tasks(cfg.n_realizations);
    parallel_for(cfg.n_realizations, workers, [&](std::size_t q) {
      try {
        ChannelRealization real;
        real.paths = info.paths[q];
        real.clean = clean[q];
        real.snr_db = snr_db;
        real.seed = cfg.master_seed;
        RandomStream noise_stream =
            RandomStream(cfg.master_seed).substream({kStreamNoise, q, snr_bits(snr_db)});
        real.noisy = add_awgn(real.clean, snr_db, noise_stream);
        tasks[q] = process_task(cfg, plans, real, q);
      } catch (const std::exception& e) {
        tasks[q].failed = true;
        tasks[q].error = e.what();
      }
    });

    for (std::size_t q = 0; q < cfg.n_realizations; ++q) {
      if (tasks[q].failed) out.failures.push_back({q, snr_db, tasks[q].error});
    }

    // Dataset-averaged rank per method (rows: successful (q, slice) pairs).
    std::vector<std::size_t> r_avg(cfg.methods.size(), 1);
    const bool need_avg = std::find(cfg.rank_rules.begin(), cfg.rank_rules.end(),
                                    RankRule::avg) != cfg.rank_rules.end();
    if (need_avg) {
      for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        SliceErrorTable table;
        table.r_max = cfg.r_max;
        for (std::size_t q = 0; q < cfg.n_realizations; ++q) {
          if (tasks[q].failed) continue;
          for (std::size_t n = 0; n < cfg.scenario.n; ++n) {
            const SliceMethodData& data = tasks[q].slices[n][m];
            std::vector<double> row(cfg.r_max);
            for (std::size_t r = 1; r <= cfg.r_max; ++r) {
              row[r - 1] = padded_cum_error(data, r, std::numeric_limits<double>::infinity());
            }
            table.errors.push_back(std::move(row));
          }
        }
        if (!table.errors.empty()) r_avg[m] = select_rank_avg(table);
      }
    }

    // Emit component rows and per-rule records.
    for (std::size_t q = 0; q < cfg.n_realizations; ++q) {
      if (tasks[q].failed) continue;
      const TaskData& task = tasks[q];

      for (std::size_t n = 0; n < cfg.scenario.n; ++n) {
        for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
          const SliceMethodData& data = task.slices[n][m];
          for (std::size_t r = 0; r < data.components.size(); ++r) {
            out.components.push_back({q, n, snr_db, cfg.methods[m], r + 1,
                                      data.components[r].coherence.value_or(1.0),
                                      data.cum_errors[r]});
          }
          if (!dump_dir.empty()) {
            char name[96];
            std::snprintf(name, sizeof(name), "comp_q%05zu_s%02zu_n%zu_%s", q, s, n,
                          cfg.methods[m].c_str());
            write_component_dump(dump_dir / name, data.components);
          }
        }
      }

      for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        for (RankRule rule : cfg.rank_rules) {
          // Per-slice estimates under this rule, restacked for full metrics.
          ComplexTensor full_est({x * y, cfg.scenario.n, cfg.scenario.k});
          std::vector<std::size_t> ranks(cfg.scenario.n, 0);
          std::vector<double> slice_errors(cfg.scenario.n, 0.0);
          for (std::size_t n = 0; n < cfg.scenario.n; ++n) {
            const SliceMethodData& data = task.slices[n][m];
            const std::size_t count = data.components.size();
            ComplexTensor est({x, y, cfg.scenario.k});
            std::size_t selected = 0;
            if (count > 0) {
              if (rule == RankRule::pcm) {
                const auto idx = pcm_selection_indices(data.components, cfg.pcm_threshold);
                for (std::size_t i : idx) {
                  est += reconstruct(std::span(&data.components[i], 1), 1);
                }
                selected = idx.size();
              } else {
                const std::size_t want = rule == RankRule::avg ? r_avg[m] : cfg.fixed_rank;
                selected = std::min(want, count);
                est = reconstruct(data.components, selected);
              }
            }
            const ComplexTensor clean_slice = slice_tensor(clean[q], n, x, y);
            slice_errors[n] = reconstruction_error(clean_slice, est);
            ranks[n] = selected;
            set_ue_slice(full_est, n, flatten_ura(est));
          }

          const double full_error = reconstruction_error(clean[q], full_est);
          std::vector<double> se;
          try {
            se = se_for_estimate(clean[q], full_est, cfg);
          } catch (const std::exception& e) {
            out.failures.push_back({q, snr_db, std::string("se evaluation (") +
                                                   cfg.methods[m] + "/" + to_string(rule) +
                                                   "): " + e.what()});
            continue;
          }
          for (std::size_t n = 0; n < cfg.scenario.n; ++n) {
            RecordRow row;
            row.realization = q;
            row.ue_slice = n;
            row.snr_db = snr_db;
            row.method = cfg.methods[m];
            row.rank_rule = to_string(rule);
            row.selected_rank = ranks[n];
            row.slice_error = slice_errors[n];
            row.full_error = full_error;
            row.se_per_p = se;
            out.records.push_back(std::move(row));
          }
        }
      }
      out.records.insert(out.records.end(), task.reference_rows.begin(),
                         task.reference_rows.end());
    }
  }
  return out;
}

void write_sweep_output(const SweepOutput& out, const fs::path& results_dir) {
  ensure_dir(results_dir);

  {
    std::ofstream f(results_dir / "records.csv", std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write records.csv");
    write_csv_header(f, out);
    f << "realization,ue_slice,snr_db,method,rank_rule,selected_rank,slice_error,full_error";
    for (std::size_t p : out.streams_p) f << ",se_p" << p;
    f << "\n";
    for (const auto& r : out.records) {
      f << r.realization << "," << r.ue_slice << "," << format_double(r.snr_db) << ","
        << r.method << "," << r.rank_rule << "," << r.selected_rank << ","
        << format_double(r.slice_error) << "," << format_double(r.full_error);
      for (double se : r.se_per_p) f << "," << format_double(se);
      f << "\n";
    }
  }
  {
    std::ofstream f(results_dir / "components.csv", std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write components.csv");
    write_csv_header(f, out);
    f << "realization,ue_slice,snr_db,method,r,sigma_r,cum_error\n";
    for (const auto& c : out.components) {
      f << c.realization << "," << c.ue_slice << "," << format_double(c.snr_db) << ","
        << c.method << "," << c.r << "," << format_double(c.sigma_r) << ","
        << format_double(c.cum_error) << "\n";
    }
  }
  {
    std::ofstream f(results_dir / "failures.csv", std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write failures.csv");
    write_csv_header(f, out);
    f << "realization,snr_db,message\n";
    for (const auto& fail : out.failures) {
      std::string msg = fail.message;
      for (char& c : msg) {
        if (c == ',' || c == '\n') c = ';';
      }
      f << fail.realization << "," << format_double(fail.snr_db) << "," << msg << "\n";
    }
  }
  {
    std::ofstream f(results_dir / "run.meta", std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write run.meta");
    f << "code_version = " << out.code_version << "\n";
    f << "config_hash = " << out.config_hash << "\n";
    f << "master_seed = " << out.master_seed << "\n";
  }
}

std::vector<RecordRow> read_records_csv(const fs::path& file,
                                        std::vector<std::size_t>& streams_p) {
  std::ifstream f(file);
  if (!f) throw std::runtime_error("cannot open " + file.string());
  std::string line;
  std::vector<RecordRow> rows;
  streams_p.clear();
  bool header_seen = false;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    if (!header_seen) {
      header_seen = true;
      for (const auto& name : fields) {
        if (name.rfind("se_p", 0) == 0) {
          streams_p.push_back(static_cast<std::size_t>(std::stoul(name.substr(4))));
        }
      }
      continue;
    }
    if (fields.size() < 8 + streams_p.size()) {
      throw std::runtime_error("records.csv: short row '" + line + "'");
    }
    RecordRow r;
    r.realization = std::stoul(fields[0]);
    r.ue_slice = std::stoul(fields[1]);
    r.snr_db = std::strtod(fields[2].c_str(), nullptr);
    r.method = fields[3];
    r.rank_rule = fields[4];
    r.selected_rank = std::stoul(fields[5]);
    r.slice_error = std::strtod(fields[6].c_str(), nullptr);
    r.full_error = std::strtod(fields[7].c_str(), nullptr);
    for (std::size_t i = 0; i < streams_p.size(); ++i) {
      r.se_per_p.push_back(std::strtod(fields[8 + i].c_str(), nullptr));
    }
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw std::runtime_error("records.csv: empty file");
  return rows;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void write_report(const fs::path& results_dir, const fs::path& report_dir) {
  std::vector<std::size_t> streams_p;
  const auto rows = read_records_csv(results_dir / "records.csv", streams_p);
  if (rows.empty()) throw std::runtime_error("report: no records");
  ensure_dir(report_dir);

  using Key = std::tuple<double, std::string, std::string>;
  std::map<Key, std::vector<double>> rank_groups;
  std::map<Key, std::vector<double>> slice_groups;
  std::map<Key, std::vector<double>> full_groups;
  std::map<Key, std::vector<std::vector<double>>> se_groups;

  for (const auto& r : rows) {
    const Key key{r.snr_db, r.method, r.rank_rule};
    slice_groups[key].push_back(r.slice_error);
    if (r.method != "baseline" && r.method != "perfect") {
      rank_groups[key].push_back(static_cast<double>(r.selected_rank));
    }
    if (r.ue_slice == 0) {  // full-tensor metrics are per realization
      full_groups[key].push_back(r.full_error);
      se_groups[key].push_back(r.se_per_p);
    }
  }

  {
    std::ofstream f(report_dir / "rank_vs_snr.csv", std::ios::trunc);
    f << "# median selected decomposition rank per (snr, method, rule)\n";
    f << "snr_db,method,rank_rule,median_selected_rank\n";
    for (const auto& [key, vals] : rank_groups) {
      f << format_double(std::get<0>(key)) << "," << std::get<1>(key) << ","
        << std::get<2>(key) << "," << format_double(median(vals)) << "\n";
    }
  }
  {
    std::ofstream f(report_dir / "slice_error_db_vs_snr.csv", std::ios::trunc);
    f << "# median per-antenna-slice reconstruction error, 10*log10 scale\n";
    f << "snr_db,method,rank_rule,median_slice_error_db\n";
    for (const auto& [key, vals] : slice_groups) {
      f << format_double(std::get<0>(key)) << "," << std::get<1>(key) << ","
        << std::get<2>(key) << "," << format_double(10.0 * std::log10(median(vals))) << "\n";
    }
  }
  {
    std::ofstream f(report_dir / "se_vs_snr.csv", std::ios::trunc);
    f << "# median spectral efficiency (bps/Hz) per (snr, method, rule, streams)\n";
    f << "snr_db,method,rank_rule,p,median_se_bps_hz\n";
    for (const auto& [key, vecs] : se_groups) {
      for (std::size_t i = 0; i < streams_p.size(); ++i) {
        std::vector<double> vals;
        vals.reserve(vecs.size());
        for (const auto& v : vecs) vals.push_back(v[i]);
        f << format_double(std::get<0>(key)) << "," << std::get<1>(key) << ","
          << std::get<2>(key) << "," << streams_p[i] << "," << format_double(median(vals))
          << "\n";
      }
    }
  }
  {
    std::ofstream f(report_dir / "full_error_vs_snr.csv", std::ios::trunc);
    f << "# median full-tensor reconstruction error (linear)\n";
    f << "snr_db,method,rank_rule,median_full_error\n";
    for (const auto& [key, vals] : full_groups) {
      f << format_double(std::get<0>(key)) << "," << std::get<1>(key) << ","
        << std::get<2>(key) << "," << format_double(median(vals)) << "\n";
    }
  }
}

bool run_selftest(std::ostream& os) {
  struct Check {
    std::string name;
    bool passed;
  };
  std::vector<Check> checks;
  auto add = [&](const std::string& name, bool ok) { checks.push_back({name, ok}); };
  RandomStream rng(42);

  // tensorize/detensorize and unfold/fold round trips
  {
    bool ok = true;
    for (int trial = 0; trial < 3 && ok; ++trial) {
      auto stream = rng.substream({10, static_cast<std::uint64_t>(trial)});
      ComplexTensor t({4, 4, 8});
      for (auto& v : t.data()) v = stream.complex_gaussian();
      const auto plan = make_all2_plan(4, 4, 8);
      const ComplexTensor back = detensorize(tensorize(t, plan), plan);
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] != back[i]) ok = false;
      }
      for (std::size_t mode = 0; mode < 3 && ok; ++mode) {
        const ComplexTensor folded = fold(unfold(t, mode), mode, t.dims());
        for (std::size_t i = 0; i < t.size(); ++i) {
          if (t[i] != folded[i]) ok = false;
        }
      }
    }
    add("reshape round trips (tensorize, unfold)", ok);
  }

  // steering kronecker identity
  {
    const auto v = steering_vector(8, 0.1);
    std::vector<std::vector<cplx>> parts = {
        steering_vector(2, wrap_frequency(0.1)),
        steering_vector(2, wrap_frequency(0.2)),
        steering_vector(2, wrap_frequency(0.4)),
    };
    const auto chain = kronecker_chain(parts);
    double err = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) err = std::max(err, std::abs(v[i] - chain[i]));
    add("steering vector kronecker factorization", err < 1e-12);
  }

  // tensorized steering vector is rank-1 (all 2x2 minors vanish)
  {
    bool ok = true;
    for (int g = 0; g < 8; ++g) {
      const double alpha = -0.5 + (g + 0.25) / 8.0;
      const auto v = steering_vector(8, alpha);
      ComplexTensor t({2, 2, 2}, std::vector<cplx>(v.begin(), v.end()));
      for (std::size_t mode = 0; mode < 3; ++mode) {
        const ComplexMatrix u = unfold(t, mode);
        for (std::size_t i = 0; i + 1 < u.rows; ++i) {
          for (std::size_t j = 0; j + 1 < u.cols; ++j) {
            for (std::size_t jj = j + 1; jj < u.cols; ++jj) {
              const cplx minor = u(i, j) * u(i + 1, jj) - u(i, jj) * u(i + 1, j);
              if (std::abs(minor) > 1e-12) ok = false;
            }
          }
        }
      }
    }
    add("tensorized steering vectors are rank-1", ok);
  }

  // single-path exact recovery
  {
    std::vector<PropagationPath> paths = {{cplx(1.0, 0.4), 0.13, -0.21, 0.07, 0.31}};
    const ComplexTensor h = normalize_channel(synthesize_channel(paths, 4, 4, 1, 16));
    const ComplexTensor slice = reshape_ura(ue_slice(h, 0), 4, 4);
    const auto comps = extract_components(slice, make_all2_plan(4, 4, 16), 1, AlsSettings{});
    const double err = reconstruction_error(slice, reconstruct(comps, 1));
    add("single-path exact recovery", err <= 1e-8 * frobenius_norm(slice));
  }

  // ALS monotonicity
  {
    bool ok = true;
    for (int trial = 0; trial < 10; ++trial) {
      auto stream = rng.substream({20, static_cast<std::uint64_t>(trial)});
      ComplexTensor t({3, 4, 5});
      for (auto& v : t.data()) v = stream.complex_gaussian();
      const auto res = rank1_als(t, dft_init(t), AlsSettings{});
      for (std::size_t i = 1; i < res.fit_history.size(); ++i) {
        if (res.fit_history[i] > res.fit_history[i - 1] + 1e-12) ok = false;
      }
    }
    add("rank-1 ALS residual monotonicity", ok);
  }

  // phase coherence calibration
  {
    bool ok = true;
    for (int g = 0; g < 8 && ok; ++g) {
      const double alpha = -0.5 + (g + 0.5) / 8.0;
      if (phase_coherence(steering_vector(16, alpha)) > 1e-12) ok = false;
    }
    std::size_t above = 0;
    const int draws = 50;
    for (int d = 0; d < draws; ++d) {
      auto stream = rng.substream({30, static_cast<std::uint64_t>(d)});
      Rank1Component c;
      for (auto& f : c.physical_factors) {
        f.resize(16);
        for (auto& v : f) v = stream.complex_gaussian();
      }
      if (component_coherence(c) > 0.5) ++above;
    }
    if (above < draws * 8 / 10) ok = false;
    add("phase-coherence metric calibration", ok);
  }

  // config validation
  {
    bool ok = false;
    try {
      ExperimentConfig cfg;
      cfg.als.tolerance = -1.0;
      cfg.validate();
    } catch (const std::invalid_argument&) {
      ok = true;
    }
    add("config validation rejects bad tolerance", ok);
  }

  bool all = true;
  for (const auto& c : checks) {
    os << (c.passed ? "  ok   " : " FAIL  ") << c.name << "\n";
    if (!c.passed) all = false;
  }
  os << (all ? "selftest: all checks passed\n" : "selftest: FAILURES present\n");
  return all;
}

}  // namespace mtcpd
