#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "mtcpd/rng.hpp"
#include "mtcpd/tensor.hpp"

namespace mtcpd {

/// One propagation path: complex gain plus normalized spatial frequencies for
/// the horizontal/vertical base-station axes, the user-side axis, and the
/// normalized delay. All frequencies live in [-1/2, 1/2).
struct PropagationPath {
  cplx gain;
  double alpha = 0.0;  // BS horizontal
  double beta = 0.0;   // BS vertical
  double gamma = 0.0;  // UE
  double tau = 0.0;    // normalized delay
};

/// Clustered geometric scenario: n_clusters cluster centers drawn uniformly
/// per frequency axis, each spawning subpaths with Gaussian offsets, cluster
/// powers decaying exponentially in dB.
struct ScenarioConfig {
  std::size_t x = 4;
  std::size_t y = 4;
  std::size_t n = 2;
  std::size_t k = 64;
  std::size_t n_clusters = 4;
  std::size_t subpaths_per_cluster = 4;
  double angular_spread = 0.02;
  double delay_spread = 0.01;
  double power_decay_db = 3.0;

  void validate() const;
  std::size_t total_paths() const { return n_clusters * subpaths_per_cluster; }
  std::size_t bs_antennas() const { return x * y; }
};

struct ChannelRealization {
  std::vector<PropagationPath> paths;
  ComplexTensor clean;                  // M x N x K, unit Frobenius norm
  std::optional<ComplexTensor> noisy;   // same dims when present
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
};

/// Sentinel SNR meaning "no noise".
inline constexpr double kNoiselessSnrDb = std::numeric_limits<double>::infinity();

/// Wrap a frequency into [-1/2, 1/2).
double wrap_frequency(double f);

/// [1, e^{j2pi f}, ..., e^{j2pi (len-1) f}]; element 0 is exactly 1.
/// Rejects frequencies outside [-1/2, 1/2).
std::vector<cplx> steering_vector(std::size_t length, double freq);

/// Sum of per-path rank-1 terms; the BS mode is the Kronecker product of the
/// horizontal and vertical steering vectors (length M = x*y). Not normalized.
ComplexTensor synthesize_channel(std::span<const PropagationPath> paths, std::size_t x,
                                 std::size_t y, std::size_t n, std::size_t k);

/// h / ||h||_F. Rejects the zero tensor.
ComplexTensor normalize_channel(const ComplexTensor& h);

/// h + Z with i.i.d. CN(0, sigma^2) entries, sigma^2 = 10^(-snr/10) / numel,
/// so E||Z||_F^2 = 10^(-snr/10) against a unit-norm h. The infinity sentinel
/// returns h unchanged.
ComplexTensor add_awgn(const ComplexTensor& h, double snr_db, RandomStream& rng);

/// Draw the clustered path set. Deterministic for a given stream.
std::vector<PropagationPath> sample_scenario(const ScenarioConfig& cfg, RandomStream& rng);

/// UE-antenna slice H[:, n, :] of an M x N x K tensor, as an M x K matrix.
ComplexMatrix ue_slice(const ComplexTensor& h, std::size_t n);

/// Write a slice back: H[:, n, :] = s.
void set_ue_slice(ComplexTensor& h, std::size_t n, const ComplexMatrix& s);

/// Subcarrier slice H[:, :, k] as an M x N matrix.
ComplexMatrix subcarrier_slice(const ComplexTensor& h, std::size_t k);

}  // namespace mtcpd
