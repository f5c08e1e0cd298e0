#include "mtcpd/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace mtcpd {

void ScenarioConfig::validate() const {
  if (x < 1 || y < 1 || n < 1 || k < 1) {
    throw std::invalid_argument("scenario: all dimensions must be >= 1");
  }
  if (n_clusters < 1 || subpaths_per_cluster < 1) {
    throw std::invalid_argument("scenario: need at least one cluster and one subpath");
  }
  if (angular_spread < 0.0 || delay_spread < 0.0) {
    throw std::invalid_argument("scenario: spreads must be >= 0");
  }
}

double wrap_frequency(double f) {
  double w = f - std::floor(f + 0.5);
  if (w >= 0.5) w -= 1.0;  // guards the f + 0.5 rounding edge
  return w;
}

std::vector<cplx> steering_vector(std::size_t length, double freq) {
  if (length < 1) throw std::invalid_argument("steering_vector: length must be >= 1");
  if (freq < -0.5 || freq >= 0.5) {
    throw std::domain_error("steering_vector: frequency " + std::to_string(freq) +
                            " outside [-1/2, 1/2)");
  }
  std::vector<cplx> v(length);
  for (std::size_t i = 0; i < length; ++i) {
    v[i] = std::polar(1.0, 2.0 * M_PI * static_cast<double>(i) * freq);
  }
  return v;
}

ComplexTensor synthesize_channel(std::span<const PropagationPath> paths, std::size_t x,
                                 std::size_t y, std::size_t n, std::size_t k) {
  if (paths.empty()) throw std::invalid_argument("synthesize_channel: empty path list");
  const std::size_t m = x * y;
  ComplexTensor h({m, n, k});
  for (const PropagationPath& p : paths) {
    const auto a_x = steering_vector(x, p.alpha);
    const auto a_y = steering_vector(y, p.beta);
    const auto a_bs = kronecker(a_x, a_y);  // length M, index i_x*y + i_y
    const auto a_ue = steering_vector(n, p.gamma);
    const auto g = steering_vector(k, p.tau);
    for (std::size_t kk = 0; kk < k; ++kk) {
      const cplx gk = p.gain * g[kk];
      for (std::size_t nn = 0; nn < n; ++nn) {
        const cplx gnk = gk * a_ue[nn];
        cplx* slab = h.data().data() + m * (nn + n * kk);
        for (std::size_t mm = 0; mm < m; ++mm) {
          slab[mm] += a_bs[mm] * gnk;
        }
      }
    }
  }
  return h;
}

ComplexTensor normalize_channel(const ComplexTensor& h) {
  const double norm = frobenius_norm(h);
  if (norm <= 0.0) throw std::invalid_argument("normalize_channel: zero tensor");
  ComplexTensor out = h;
  out *= cplx(1.0 / norm, 0.0);
  return out;
}

ComplexTensor add_awgn(const ComplexTensor& h, double snr_db, RandomStream& rng) {
  if (std::isinf(snr_db) && snr_db > 0.0) return h;
  const double noise_energy = std::pow(10.0, -snr_db / 10.0);
  const double sigma = std::sqrt(noise_energy / static_cast<double>(h.size()));
  ComplexTensor out = h;
  for (cplx& v : out.data()) {
    v += sigma * rng.complex_gaussian();
  }
  return out;
}

std::vector<PropagationPath> sample_scenario(const ScenarioConfig& cfg, RandomStream& rng) {
  cfg.validate();
  // Exponential power profile across clusters, normalized to unit total.
  std::vector<double> cluster_power(cfg.n_clusters);
  double total = 0.0;
  for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
    cluster_power[c] = std::pow(10.0, -cfg.power_decay_db * static_cast<double>(c) / 10.0);
    total += cluster_power[c];
  }
  for (double& p : cluster_power) p /= total;

  std::vector<PropagationPath> paths;
  paths.reserve(cfg.total_paths());
  for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
    const double ca = rng.uniform() - 0.5;
    const double cb = rng.uniform() - 0.5;
    const double cg = rng.uniform() - 0.5;
    const double ct = rng.uniform() - 0.5;
    const double amp = std::sqrt(cluster_power[c] /
                                 static_cast<double>(cfg.subpaths_per_cluster));
    for (std::size_t s = 0; s < cfg.subpaths_per_cluster; ++s) {
      PropagationPath p;
      p.alpha = wrap_frequency(ca + cfg.angular_spread * rng.gaussian());
      p.beta = wrap_frequency(cb + cfg.angular_spread * rng.gaussian());
      p.gamma = wrap_frequency(cg + cfg.angular_spread * rng.gaussian());
      p.tau = wrap_frequency(ct + cfg.delay_spread * rng.gaussian());
      p.gain = std::polar(amp, 2.0 * M_PI * rng.uniform());
      paths.push_back(p);
    }
  }
  return paths;
}

ComplexMatrix ue_slice(const ComplexTensor& h, std::size_t n) {
  if (h.order() != 3) throw std::invalid_argument("ue_slice expects an order-3 tensor");
  if (n >= h.dim(1)) throw std::out_of_range("ue_slice: antenna index out of range");
  const std::size_t m = h.dim(0), nu = h.dim(1), k = h.dim(2);
  ComplexMatrix s(m, k);
  for (std::size_t kk = 0; kk < k; ++kk) {
    const cplx* src = h.data().data() + m * (n + nu * kk);
    cplx* dst = s.a.data() + m * kk;
    for (std::size_t mm = 0; mm < m; ++mm) dst[mm] = src[mm];
  }
  return s;
}

void set_ue_slice(ComplexTensor& h, std::size_t n, const ComplexMatrix& s) {
  if (h.order() != 3) throw std::invalid_argument("set_ue_slice expects an order-3 tensor");
  if (n >= h.dim(1)) throw std::out_of_range("set_ue_slice: antenna index out of range");
  if (s.rows != h.dim(0) || s.cols != h.dim(2)) {
    throw std::invalid_argument("set_ue_slice: slice shape mismatch");
  }
  const std::size_t m = h.dim(0), nu = h.dim(1), k = h.dim(2);
  for (std::size_t kk = 0; kk < k; ++kk) {
    cplx* dst = h.data().data() + m * (n + nu * kk);
    const cplx* src = s.a.data() + m * kk;
    for (std::size_t mm = 0; mm < m; ++mm) dst[mm] = src[mm];
  }
}

ComplexMatrix subcarrier_slice(const ComplexTensor& h, std::size_t k) {
  if (h.order() != 3) throw std::invalid_argument("subcarrier_slice expects an order-3 tensor");
  if (k >= h.dim(2)) throw std::out_of_range("subcarrier_slice: index out of range");
  const std::size_t m = h.dim(0), nu = h.dim(1);
  ComplexMatrix s(m, nu);
  const cplx* src = h.data().data() + m * nu * k;
  for (std::size_t i = 0; i < m * nu; ++i) s.a[i] = src[i];
  return s;
}

}  // namespace mtcpd
