#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mtcpd/tensor.hpp"

namespace mtcpd {

enum class InitMethod { dft_dominant, random_unit };

struct AlsSettings {
  std::size_t max_iterations = 1000;
  double tolerance = 1e-6;
  InitMethod init = InitMethod::dft_dominant;
  std::uint64_t init_seed = 0;  // used only by random_unit

  void validate() const;
};

/// One extracted rank-1 component. Every factor (virtual and physical) has
/// unit Euclidean norm; the complex scale carries all magnitude and phase.
/// Physical factors are the Kronecker recombination of the virtual ones.
struct Rank1Component {
  std::vector<std::vector<cplx>> virtual_factors;
  cplx scale{0.0, 0.0};
  std::array<std::vector<cplx>, 3> physical_factors;  // u_X, u_Y, u_K
  std::optional<double> coherence;                    // sigma_r, set by selection
  bool degenerate = false;
};

struct Rank1AlsResult {
  std::vector<std::vector<cplx>> factors;  // unit norm, one per mode
  cplx scale{0.0, 0.0};
  std::size_t iterations = 0;              // completed full sweeps
  std::vector<double> fit_history;         // residual norm after each sweep
  bool degenerate = false;
};

/// Per-mode initial factors: the unit-norm DFT column that carries the most
/// energy of the mode-n unfolding, scored by ||d^H X_(n)||_2. Ties break
/// toward the lower DFT index.
std::vector<std::vector<cplx>> dft_init(const ComplexTensor& t);

/// Greedy rank-1 alternating least squares. Each mode update replaces the
/// factor with the normalized contraction of the tensor against the
/// conjugated remaining factors; the optimal scale after an update equals the
/// contraction norm. Stops when the relative change of the residual norm
/// between sweeps drops below the tolerance.
Rank1AlsResult rank1_als(const ComplexTensor& t, std::vector<std::vector<cplx>> init,
                         const AlsSettings& settings);

/// Plan whose tensorize is the identity: factors ((X), (Y), (K)).
TensorizationPlan make_trivial_plan(std::size_t x, std::size_t y, std::size_t k);

/// Split every mode into factors of 2 (an odd remainder, if any, stays as the
/// final sub-dimension).
TensorizationPlan make_all2_plan(std::size_t x, std::size_t y, std::size_t k);

/// Kronecker-recombine virtual factors into the three physical-mode factors
/// (u_X, u_Y, u_K), encapsulating the little-endian chain order.
std::array<std::vector<cplx>, 3> recombine_virtual_factors(
    std::span<const std::vector<cplx>> virtual_factors, const TensorizationPlan& plan);

/// Rank-by-rank extraction: tensorize the residual, initialize, pull one
/// rank-1 component, recombine to physical factors, subtract in physical
/// space, repeat up to r_max times. Stops early only when the residual norm
/// falls below 1e-14 * ||t||_F.
std::vector<Rank1Component> extract_components(const ComplexTensor& t,
                                               const TensorizationPlan& plan,
                                               std::size_t r_max, const AlsSettings& settings);

/// Sum of the first `up_to` components as an X x Y x K tensor.
ComplexTensor reconstruct(std::span<const Rank1Component> components, std::size_t up_to);

/// Persist a component list: factor vectors go to `<base>.bin` as a stream of
/// order-1 tensors in the binary tensor format; `<base>.idx` is a text index
/// with one line per component (r, scale re/im, sigma_r, factor counts).
void write_component_dump(const std::filesystem::path& base,
                          std::span<const Rank1Component> components);

std::vector<Rank1Component> read_component_dump(const std::filesystem::path& base);

/// Free parameters of an r-component model under the plan:
/// r * (sum of all sub-dimensions).
std::size_t parameter_count(const TensorizationPlan& plan, std::size_t r);

/// Parameter count after factor normalization (one unit-norm constraint per
/// factor, one shared scale): r * (sum of sub-dimensions - total modes + 1).
std::size_t normalized_parameter_count(const TensorizationPlan& plan, std::size_t r);

}  // namespace mtcpd
