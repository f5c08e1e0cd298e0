#pragma once

#include <cstddef>
#include <vector>

#include "mtcpd/decomposition.hpp"
#include "mtcpd/tensor.hpp"

namespace mtcpd {

/// Per-slice cumulative reconstruction errors: entry (row, R-1) is the error
/// after keeping the first R components, R in [1, r_max]. Rows typically
/// enumerate (realization, antenna slice) pairs.
struct SliceErrorTable {
  std::vector<std::vector<double>> errors;
  std::size_t r_max = 0;

  void validate() const;
};

/// ||truth - estimate||_F (absolute: inputs are pre-normalized channels).
double reconstruction_error(const ComplexTensor& truth, const ComplexTensor& estimate);

/// Rank minimizing the column-mean error, ties toward the smallest R.
/// Always in [1, r_max].
std::size_t select_rank_avg(const SliceErrorTable& table);

/// Normalized phase ratios between adjacent elements:
/// delta_i = (u_{i+1}/|u_{i+1}|) / (u_i/|u_i|). Ratios involving a zero entry
/// are skipped.
std::vector<cplx> phase_ratios(std::span<const cplx> u);

/// sqrt(1 - |mean(delta)|^2) in [0, 1]: 0 for an exact steering vector,
/// 1 when the phase increments cancel. A vector with no valid ratios (e.g.
/// all zeros) scores 1.
double phase_coherence(std::span<const cplx> u);

/// Mean phase_coherence over the physical factors (modes of length 1 carry
/// no phase progression and are excluded). Stores the value into
/// c.coherence and returns it.
double component_coherence(Rank1Component& c);

/// Indices of components with coherence < threshold, in extraction order;
/// when none qualify, the single best (lowest sigma_r) component is kept.
/// Requires coherence to be computed for all components.
std::vector<std::size_t> pcm_selection_indices(std::span<const Rank1Component> components,
                                               double threshold);

/// Filtered copy of the component list per pcm_selection_indices.
std::vector<Rank1Component> select_by_pcm(std::span<const Rank1Component> components,
                                          double threshold);

}  // namespace mtcpd
