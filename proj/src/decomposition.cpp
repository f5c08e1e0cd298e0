#include "mtcpd/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mtcpd/rng.hpp"
#include "mtcpd/tensor_io.hpp"

namespace mtcpd {

namespace {

constexpr double kDegenerateScale = 1e-14;
constexpr double kResidualFloor = 1e-14;

void normalize_in_place(std::vector<cplx>& v) {
  const double n = vector_norm(v);
  if (n > 0.0) {
    const double inv = 1.0 / n;
    for (cplx& x : v) x *= inv;
  }
}

/// Contract `data` (little-endian, `dims`) against conj(factors[m]) for every
/// mode m != skip; returns the length-dims[skip] fiber. Modes above `skip`
/// are folded away from the top (contiguous columns), modes below from the
/// bottom (contiguous reductions), so each pass touches memory linearly.
std::vector<cplx> contract_all_but(std::span<const cplx> data,
                                   std::span<const std::size_t> dims,
                                   std::span<const std::vector<cplx>> factors, std::size_t skip,
                                   std::vector<cplx>& scratch_a, std::vector<cplx>& scratch_b) {
  std::size_t lo = 0, hi = dims.size();  // active mode range [lo, hi)
  std::size_t n = data.size();
  scratch_a.assign(data.begin(), data.end());
  std::vector<cplx>* cur = &scratch_a;
  std::vector<cplx>* next = &scratch_b;

  while (hi - lo > 1) {
    if (hi - 1 != skip) {
      // Fold the highest remaining mode: out[j] = sum_k cur[j + k*lead] * conj(f[k]).
      const std::size_t d = dims[hi - 1];
      const std::size_t lead = n / d;
      next->assign(lead, cplx(0.0, 0.0));
      const auto& f = factors[hi - 1];
      for (std::size_t k = 0; k < d; ++k) {
        const cplx w = std::conj(f[k]);
        const cplx* col = cur->data() + k * lead;
        cplx* out = next->data();
        for (std::size_t j = 0; j < lead; ++j) out[j] += col[j] * w;
      }
      --hi;
      n = lead;
    } else {
      // Fold the lowest remaining mode: out[j] = sum_i cur[i + j*d] * conj(f[i]).
      const std::size_t d = dims[lo];
      const std::size_t rest = n / d;
      next->resize(rest);
      const auto& f = factors[lo];
      for (std::size_t j = 0; j < rest; ++j) {
        const cplx* col = cur->data() + j * d;
        cplx acc(0.0, 0.0);
        for (std::size_t i = 0; i < d; ++i) acc += col[i] * std::conj(f[i]);
        (*next)[j] = acc;
      }
      ++lo;
      n = rest;
    }
    std::swap(cur, next);
  }
  return *cur;
}

std::vector<std::vector<cplx>> random_unit_init(const ComplexTensor& t, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<std::vector<cplx>> init(t.order());
  for (std::size_t m = 0; m < t.order(); ++m) {
    auto stream = rng.substream({0x1417u, m});
    init[m].resize(t.dim(m));
    for (cplx& v : init[m]) v = stream.complex_gaussian();
    normalize_in_place(init[m]);
  }
  return init;
}

std::vector<std::size_t> factor_into_twos(std::size_t d) {
  std::vector<std::size_t> f;
  while (d % 2 == 0 && d > 1) {
    f.push_back(2);
    d /= 2;
  }
  if (d > 1 || f.empty()) f.push_back(d);
  return f;
}

}  // namespace

void AlsSettings::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("als: max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("als: tolerance must be > 0");
}

std::vector<std::vector<cplx>> dft_init(const ComplexTensor& t) {
  const std::size_t order = t.order();
  std::vector<std::vector<cplx>> init(order);
  for (std::size_t mode = 0; mode < order; ++mode) {
    const std::size_t d = t.dim(mode);
    const ComplexMatrix unf = unfold(t, mode);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    // Unit-norm DFT column k: element i = e^{j2pi ik/d} / sqrt(d).
    std::size_t best_k = 0;
    double best_score = -1.0;
    std::vector<cplx> column(d);
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t i = 0; i < d; ++i) {
        column[i] = std::polar(inv_sqrt_d,
                               2.0 * M_PI * static_cast<double>(i * k % d) / static_cast<double>(d));
      }
      double score = 0.0;
      for (std::size_t j = 0; j < unf.cols; ++j) {
        cplx acc(0.0, 0.0);
        const cplx* col = unf.a.data() + j * d;
        for (std::size_t i = 0; i < d; ++i) acc += std::conj(column[i]) * col[i];
        score += std::norm(acc);
      }
      if (score > best_score) {  // strict: ties keep the lower index
        best_score = score;
        best_k = k;
      }
    }
    init[mode].resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      init[mode][i] = std::polar(
          inv_sqrt_d, 2.0 * M_PI * static_cast<double>(i * best_k % d) / static_cast<double>(d));
    }
  }
  return init;
}

Rank1AlsResult rank1_als(const ComplexTensor& t, std::vector<std::vector<cplx>> init,
                         const AlsSettings& settings) {
  settings.validate();
  if (init.size() != t.order()) {
    throw std::invalid_argument("rank1_als: init factor count != tensor order");
  }
  for (std::size_t m = 0; m < init.size(); ++m) {
    if (init[m].size() != t.dim(m)) {
      throw std::invalid_argument("rank1_als: init factor length mismatch at mode " +
                                  std::to_string(m));
    }
    if (vector_norm(init[m]) == 0.0) {
      throw std::invalid_argument("rank1_als: zero init factor at mode " + std::to_string(m));
    }
  }

  Rank1AlsResult res;
  res.factors = std::move(init);
  for (auto& f : res.factors) normalize_in_place(f);

  const double input_norm = frobenius_norm(t);
  if (input_norm == 0.0) {
    res.degenerate = true;
    res.scale = cplx(0.0, 0.0);
    res.fit_history.push_back(0.0);
    return res;
  }
  const double input_norm_sq = input_norm * input_norm;

  std::vector<cplx> scratch_a, scratch_b;
  scratch_a.reserve(t.size());
  scratch_b.reserve(t.size());

  const std::size_t order = t.order();
  double prev_residual = input_norm;
  double scale_mag = 0.0;

  for (std::size_t sweep = 0; sweep < settings.max_iterations; ++sweep) {
    for (std::size_t mode = 0; mode < order; ++mode) {
      std::vector<cplx> fiber = contract_all_but(t.data(), t.dims(), res.factors, mode,
                                                 scratch_a, scratch_b);
      const double norm = vector_norm(fiber);
      if (norm < kDegenerateScale * input_norm) {
        res.degenerate = true;
        res.scale = cplx(0.0, 0.0);
        res.iterations = sweep;
        return res;
      }
      const double inv = 1.0 / norm;
      for (cplx& v : fiber) v *= inv;
      res.factors[mode] = std::move(fiber);
      scale_mag = norm;  // = |<t, unit rank-1>| with the fresh factor
    }
    res.iterations = sweep + 1;

    const double residual =
        std::sqrt(std::max(0.0, input_norm_sq - scale_mag * scale_mag));
    res.fit_history.push_back(residual);

    if (residual < kResidualFloor * input_norm) break;
    const double rel_change = std::abs(prev_residual - residual) / std::max(prev_residual, 1e-300);
    if (rel_change < settings.tolerance) break;
    prev_residual = residual;
  }

  res.scale = cplx(scale_mag, 0.0);
  return res;
}

TensorizationPlan make_trivial_plan(std::size_t x, std::size_t y, std::size_t k) {
  TensorizationPlan plan;
  plan.physical_dims = {x, y, k};
  plan.factors_x = {x};
  plan.factors_y = {y};
  plan.factors_k = {k};
  plan.validate();
  return plan;
}

TensorizationPlan make_all2_plan(std::size_t x, std::size_t y, std::size_t k) {
  TensorizationPlan plan;
  plan.physical_dims = {x, y, k};
  plan.factors_x = factor_into_twos(x);
  plan.factors_y = factor_into_twos(y);
  plan.factors_k = factor_into_twos(k);
  plan.validate();
  return plan;
}

std::array<std::vector<cplx>, 3> recombine_virtual_factors(
    std::span<const std::vector<cplx>> virtual_factors, const TensorizationPlan& plan) {
  plan.validate();
  const std::size_t a = plan.factors_x.size();
  const std::size_t b = plan.factors_y.size();
  const std::size_t c = plan.factors_k.size();
  if (virtual_factors.size() != a + b + c) {
    throw std::invalid_argument("recombine: virtual factor count != plan order");
  }
  const auto vdims = plan.virtual_dims();
  for (std::size_t i = 0; i < virtual_factors.size(); ++i) {
    if (virtual_factors[i].size() != vdims[i]) {
      throw std::invalid_argument("recombine: factor length mismatch at virtual mode " +
                                  std::to_string(i));
    }
  }
  std::array<std::vector<cplx>, 3> out;
  out[0] = kronecker_chain(virtual_factors.subspan(0, a));
  out[1] = kronecker_chain(virtual_factors.subspan(a, b));
  out[2] = kronecker_chain(virtual_factors.subspan(a + b, c));
  return out;
}

std::vector<Rank1Component> extract_components(const ComplexTensor& t,
                                               const TensorizationPlan& plan,
                                               std::size_t r_max, const AlsSettings& settings) {
  if (r_max < 1) throw std::invalid_argument("extract_components: r_max must be >= 1");
  plan.validate();
  settings.validate();

  const double input_norm = frobenius_norm(t);
  ComplexTensor residual = t;
  std::vector<Rank1Component> components;
  components.reserve(r_max);

  for (std::size_t r = 0; r < r_max; ++r) {
    if (frobenius_norm(residual) < kResidualFloor * input_norm) break;

    ComplexTensor virt = tensorize(residual, plan);
    std::vector<std::vector<cplx>> init =
        settings.init == InitMethod::dft_dominant
            ? dft_init(virt)
            : random_unit_init(virt, settings.init_seed + r);
    Rank1AlsResult als = rank1_als(virt, std::move(init), settings);

    Rank1Component comp;
    comp.virtual_factors = std::move(als.factors);
    comp.scale = als.scale;
    comp.degenerate = als.degenerate;
    comp.physical_factors = recombine_virtual_factors(comp.virtual_factors, plan);
    if (!comp.degenerate) {
      // Deflate in physical space.
      const std::size_t x = plan.physical_dims[0];
      const std::size_t y = plan.physical_dims[1];
      const auto& ux = comp.physical_factors[0];
      const auto& uy = comp.physical_factors[1];
      const auto& uk = comp.physical_factors[2];
      auto res_data = residual.data();
      for (std::size_t kk = 0; kk < plan.physical_dims[2]; ++kk) {
        const cplx sk = comp.scale * uk[kk];
        for (std::size_t iy = 0; iy < y; ++iy) {
          const cplx syk = sk * uy[iy];
          cplx* row = res_data.data() + x * (iy + y * kk);
          for (std::size_t ix = 0; ix < x; ++ix) row[ix] -= ux[ix] * syk;
        }
      }
    }
    components.push_back(std::move(comp));
  }
  return components;
}

ComplexTensor reconstruct(std::span<const Rank1Component> components, std::size_t up_to) {
  if (components.empty() || up_to < 1 || up_to > components.size()) {
    throw std::invalid_argument("reconstruct: up_to out of range");
  }
  const auto& first = components[0].physical_factors;
  ComplexTensor out({first[0].size(), first[1].size(), first[2].size()});
  auto data = out.data();
  for (std::size_t r = 0; r < up_to; ++r) {
    const auto& pf = components[r].physical_factors;
    const auto& ux = pf[0];
    const auto& uy = pf[1];
    const auto& uk = pf[2];
    const cplx scale = components[r].scale;
    if (ux.size() != out.dim(0) || uy.size() != out.dim(1) || uk.size() != out.dim(2)) {
      throw std::invalid_argument("reconstruct: inconsistent factor lengths across components");
    }
    for (std::size_t kk = 0; kk < uk.size(); ++kk) {
      const cplx sk = scale * uk[kk];
      for (std::size_t iy = 0; iy < uy.size(); ++iy) {
        const cplx syk = sk * uy[iy];
        cplx* row = data.data() + ux.size() * (iy + uy.size() * kk);
        for (std::size_t ix = 0; ix < ux.size(); ++ix) row[ix] += ux[ix] * syk;
      }
    }
  }
  return out;
}

void write_component_dump(const std::filesystem::path& base,
                          std::span<const Rank1Component> components) {
  std::ofstream bin(base.string() + ".bin", std::ios::binary | std::ios::trunc);
  std::ofstream idx(base.string() + ".idx", std::ios::trunc);
  if (!bin || !idx) {
    throw std::runtime_error("cannot open component dump files at " + base.string());
  }
  idx << "# r scale_re scale_im sigma_r degenerate n_virtual n_physical\n";
  char num[64];
  auto put = [&num](std::ofstream& os, double v) {
    std::snprintf(num, sizeof(num), "%.17g", v);
    os << num;
  };
  for (std::size_t r = 0; r < components.size(); ++r) {
    const Rank1Component& c = components[r];
    idx << (r + 1) << " ";
    put(idx, c.scale.real());
    idx << " ";
    put(idx, c.scale.imag());
    idx << " ";
    put(idx, c.coherence.value_or(-1.0));
    idx << " " << (c.degenerate ? 1 : 0) << " " << c.virtual_factors.size() << " "
        << c.physical_factors.size() << "\n";
    for (const auto& f : c.virtual_factors) {
      write_tensor(bin, ComplexTensor({f.size()}, f));
    }
    for (const auto& f : c.physical_factors) {
      write_tensor(bin, ComplexTensor({f.size()}, f));
    }
  }
}

std::vector<Rank1Component> read_component_dump(const std::filesystem::path& base) {
  std::ifstream bin(base.string() + ".bin", std::ios::binary);
  std::ifstream idx(base.string() + ".idx");
  if (!bin || !idx) {
    throw std::runtime_error("cannot open component dump files at " + base.string());
  }
  std::vector<Rank1Component> components;
  std::string line;
  while (std::getline(idx, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::size_t r = 0, n_virtual = 0, n_physical = 0;
    double scale_re = 0.0, scale_im = 0.0, sigma = -1.0;
    int degenerate = 0;
    ss >> r >> scale_re >> scale_im >> sigma >> degenerate >> n_virtual >> n_physical;
    if (!ss || n_physical != 3) {
      throw std::runtime_error("component dump: malformed index line '" + line + "'");
    }
    Rank1Component c;
    c.scale = cplx(scale_re, scale_im);
    if (sigma >= 0.0) c.coherence = sigma;
    c.degenerate = degenerate != 0;
    for (std::size_t v = 0; v < n_virtual; ++v) {
      const ComplexTensor t = read_tensor(bin);
      c.virtual_factors.emplace_back(t.data().begin(), t.data().end());
    }
    for (std::size_t p = 0; p < 3; ++p) {
      const ComplexTensor t = read_tensor(bin);
      c.physical_factors[p].assign(t.data().begin(), t.data().end());
    }
    components.push_back(std::move(c));
  }
  return components;
}

std::size_t parameter_count(const TensorizationPlan& plan, std::size_t r) {
  if (r < 1) throw std::invalid_argument("parameter_count: r must be >= 1");
  std::size_t sum = 0;
  for (std::size_t d : plan.factors_x) sum += d;
  for (std::size_t d : plan.factors_y) sum += d;
  for (std::size_t d : plan.factors_k) sum += d;
  return r * sum;
}

std::size_t normalized_parameter_count(const TensorizationPlan& plan, std::size_t r) {
  if (r < 1) throw std::invalid_argument("normalized_parameter_count: r must be >= 1");
  // Each sub-dimension >= 1, so the sum is never below the mode count.
  return r * (parameter_count(plan, 1) - plan.order() + 1);
}

}  // namespace mtcpd
