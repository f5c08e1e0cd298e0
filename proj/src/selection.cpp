#include "mtcpd/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mtcpd {

void SliceErrorTable::validate() const {
  if (errors.empty() || r_max < 1) {
    throw std::invalid_argument("slice error table is empty");
  }
  for (const auto& row : errors) {
    if (row.size() != r_max) {
      throw std::invalid_argument("slice error table row length != r_max");
    }
  }
}

double reconstruction_error(const ComplexTensor& truth, const ComplexTensor& estimate) {
  if (truth.dims() != estimate.dims()) {
    throw std::invalid_argument("reconstruction_error: dimension mismatch");
  }
  double s = 0.0;
  const auto a = truth.data();
  const auto b = estimate.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
  return std::sqrt(s);
}

std::size_t select_rank_avg(const SliceErrorTable& table) {
  table.validate();
  std::size_t best_r = 1;
  double best_mean = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < table.r_max; ++r) {
    double mean = 0.0;
    for (const auto& row : table.errors) mean += row[r];
    mean /= static_cast<double>(table.errors.size());
    if (mean < best_mean) {  // strict: ties keep the smaller rank
      best_mean = mean;
      best_r = r + 1;
    }
  }
  return best_r;
}

std::vector<cplx> phase_ratios(std::span<const cplx> u) {
  if (u.size() < 2) throw std::invalid_argument("phase_ratios: need at least two elements");
  std::vector<cplx> deltas;
  deltas.reserve(u.size() - 1);
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    const double m0 = std::abs(u[i]);
    const double m1 = std::abs(u[i + 1]);
    if (m0 == 0.0 || m1 == 0.0) continue;
    deltas.push_back((u[i + 1] / m1) / (u[i] / m0));
  }
  return deltas;
}

double phase_coherence(std::span<const cplx> u) {
  if (u.size() < 2) throw std::invalid_argument("phase_coherence: need at least two elements");
  const std::vector<cplx> deltas = phase_ratios(u);
  if (deltas.empty()) return 1.0;
  // With unit-modulus ratios, 1 - |mean(delta)|^2 equals the mean squared
  // pairwise spread sum_{i<j} |d_i - d_j|^2 / count^2; the pairwise form
  // avoids the catastrophic cancellation near coherent inputs.
  const std::size_t count = deltas.size();
  double spread = 0.0;
  for (std::size_t i = 0; i + 1 < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) {
      spread += std::norm(deltas[i] - deltas[j]);
    }
  }
  const double dev_sq = spread / static_cast<double>(count * count);
  return std::sqrt(std::clamp(dev_sq, 0.0, 1.0));
}

double component_coherence(Rank1Component& c) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& factor : c.physical_factors) {
    if (factor.size() < 2) continue;  // no phase progression to measure
    sum += phase_coherence(factor);
    ++counted;
  }
  if (counted == 0) {
    throw std::invalid_argument("component_coherence: every physical mode has length 1");
  }
  const double sigma = sum / static_cast<double>(counted);
  c.coherence = sigma;
  return sigma;
}

std::vector<std::size_t> pcm_selection_indices(std::span<const Rank1Component> components,
                                               double threshold) {
  std::vector<std::size_t> keep;
  std::size_t best = 0;
  double best_sigma = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (!components[i].coherence.has_value()) {
      throw std::invalid_argument("pcm selection: component " + std::to_string(i) +
                                  " has no coherence value");
    }
    const double sigma = *components[i].coherence;
    if (sigma < threshold) keep.push_back(i);
    if (sigma < best_sigma) {
      best_sigma = sigma;
      best = i;
    }
  }
  if (keep.empty() && !components.empty()) keep.push_back(best);
  return keep;
}

std::vector<Rank1Component> select_by_pcm(std::span<const Rank1Component> components,
                                          double threshold) {
  std::vector<Rank1Component> out;
  for (std::size_t i : pcm_selection_indices(components, threshold)) {
    out.push_back(components[i]);
  }
  return out;
}

}  // namespace mtcpd
