#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mtcpd/config.hpp"

namespace mtcpd {

/// One per-component measurement: sigma_r and the cumulative reconstruction
/// error after keeping components 1..r of this (realization, slice, method).
struct ComponentRow {
  std::size_t realization = 0;
  std::size_t ue_slice = 0;
  double snr_db = 0.0;
  std::string method;
  std::size_t r = 0;
  double sigma_r = 0.0;
  double cum_error = 0.0;
};

/// One sweep record. Methods "baseline" (no denoising) and "perfect"
/// (true channel) are reference rows with rank_rule "none" and rank 0.
struct RecordRow {
  std::size_t realization = 0;
  std::size_t ue_slice = 0;
  double snr_db = 0.0;
  std::string method;
  std::string rank_rule;
  std::size_t selected_rank = 0;
  double slice_error = 0.0;
  double full_error = 0.0;
  std::vector<double> se_per_p;
};

struct FailureRow {
  std::size_t realization = 0;
  double snr_db = 0.0;
  std::string message;
};

struct SweepOutput {
  std::vector<ComponentRow> components;
  std::vector<RecordRow> records;
  std::vector<FailureRow> failures;
  std::vector<std::size_t> streams_p;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::string code_version;
};

struct DatasetInfo {
  ScenarioConfig scenario;
  std::uint64_t master_seed = 0;
  std::size_t n_realizations = 0;
  std::vector<std::vector<PropagationPath>> paths;  // per realization
};

/// Create `dir` (parent must exist) or accept it if already present.
void ensure_dir(const std::filesystem::path& dir);

/// Draw and persist n_realizations clean channels plus the sidecar metadata
/// that makes the dataset re-derivable. Byte-identical for a fixed seed.
void generate_dataset(const ExperimentConfig& cfg, const std::filesystem::path& dataset_dir);

DatasetInfo read_dataset_meta(const std::filesystem::path& dataset_dir);
ComplexTensor load_realization(const std::filesystem::path& dataset_dir, std::size_t q);

/// Run the full sweep: per (realization, snr) task, add seeded noise, run
/// each method per UE slice, then apply the configured rank rules and score
/// errors and spectral efficiency. Output ordering is independent of the
/// worker count. When `dump_dir` is non-empty, every (realization, snr,
/// slice, method) component list is persisted there via write_component_dump.
SweepOutput run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& dataset_dir,
                      std::size_t workers, const std::filesystem::path& dump_dir = {});

/// Persist components.csv, records.csv, failures.csv and run.meta.
void write_sweep_output(const SweepOutput& out, const std::filesystem::path& results_dir);

/// Read records.csv back (used by the report stage).
std::vector<RecordRow> read_records_csv(const std::filesystem::path& file,
                                        std::vector<std::size_t>& streams_p);

/// Emit the report tables (rank vs SNR, slice error in dB, spectral
/// efficiency, full-tensor error) from a results directory.
void write_report(const std::filesystem::path& results_dir,
                  const std::filesystem::path& report_dir);

/// Fast invariant suite; prints one line per check. Returns true iff all pass.
bool run_selftest(std::ostream& os);

}  // namespace mtcpd
