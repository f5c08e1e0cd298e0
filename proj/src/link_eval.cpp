#include "mtcpd/link_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mtcpd/channel.hpp"

namespace mtcpd {

namespace {

// B = A^H A
ComplexMatrix gram(const ComplexMatrix& a) {
  ComplexMatrix g(a.cols, a.cols);
  for (std::size_t i = 0; i < a.cols; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) {
      cplx s(0.0, 0.0);
      for (std::size_t r = 0; r < a.rows; ++r) s += std::conj(a(r, i)) * a(r, j);
      g(i, j) = s;
    }
  }
  return g;
}

std::vector<cplx> matvec(const ComplexMatrix& a, std::span<const cplx> x) {
  std::vector<cplx> y(a.rows, cplx(0.0, 0.0));
  for (std::size_t j = 0; j < a.cols; ++j) {
    const cplx xj = x[j];
    for (std::size_t i = 0; i < a.rows; ++i) y[i] += a(i, j) * xj;
  }
  return y;
}

}  // namespace

std::vector<std::pair<double, std::vector<cplx>>> hermitian_eigen_desc(const ComplexMatrix& a) {
  if (a.rows != a.cols) throw std::invalid_argument("hermitian_eigen: matrix not square");
  const std::size_t n = a.rows;
  ComplexMatrix m = a;
  ComplexMatrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double scale = 0.0;
  for (const cplx& x : m.a) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) scale = 1.0;

  // Cyclic Jacobi with complex Givens rotations.
  constexpr int kMaxSweeps = 60;
  constexpr double kTol = 1e-15;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += std::abs(m(p, q));
    }
    if (off <= kTol * scale) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = m(p, q);
        const double d = std::abs(apq);
        if (d <= kTol * scale) continue;
        const double app = m(p, p).real();
        const double aqq = m(q, q).real();
        const cplx phase = apq / d;  // e^{i phi}

        // tan(2 theta) = 2d / (app - aqq), Rutishauser form.
        const double tau = (app - aqq) / (2.0 * d);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const cplx sp = s * phase;

        // M <- G^H M G with G(p,p)=G(q,q)=c, G(p,q)=-sp, G(q,p)=conj(sp);
        // this zeroes M(p,q) and keeps the diagonal real.
        for (std::size_t i = 0; i < n; ++i) {
          const cplx mip = m(i, p);
          const cplx miq = m(i, q);
          m(i, p) = c * mip + std::conj(sp) * miq;
          m(i, q) = -sp * mip + c * miq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const cplx mpj = m(p, j);
          const cplx mqj = m(q, j);
          m(p, j) = c * mpj + sp * mqj;
          m(q, j) = -std::conj(sp) * mpj + c * mqj;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const cplx vip = v(i, p);
          const cplx viq = v(i, q);
          v(i, p) = c * vip + std::conj(sp) * viq;
          v(i, q) = -sp * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::pair<double, std::vector<cplx>>> pairs(n);
  for (std::size_t j = 0; j < n; ++j) {
    pairs[j].first = m(j, j).real();
    pairs[j].second.resize(n);
    for (std::size_t i = 0; i < n; ++i) pairs[j].second[i] = v(i, j);
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& l, const auto& r) { return l.first > r.first; });
  return pairs;
}

Precoder svd_precoder(const ComplexMatrix& h_hat, std::size_t p) {
  if (p < 1 || p > std::min(h_hat.rows, h_hat.cols)) {
    throw std::invalid_argument("svd_precoder: p must satisfy 1 <= p <= min(M, N)");
  }
  const double norm = frobenius_norm(h_hat);
  if (norm == 0.0) throw std::invalid_argument("svd_precoder: all-zero channel estimate");

  const auto eig = hermitian_eigen_desc(gram(h_hat));
  const double sigma_max = std::sqrt(std::max(eig[0].first, 0.0));
  const double rank_tol = 1e-12 * sigma_max;

  Precoder out;
  out.streams = p;
  out.w = ComplexMatrix(h_hat.rows, p);

  std::vector<std::vector<cplx>> columns;
  for (std::size_t i = 0; i < p; ++i) {
    const double sigma = std::sqrt(std::max(eig[i].first, 0.0));
    if (sigma > rank_tol) {
      std::vector<cplx> u = matvec(h_hat, eig[i].second);
      const double inv = 1.0 / sigma;
      for (cplx& x : u) x *= inv;
      columns.push_back(std::move(u));
    } else {
      out.rank_deficient = true;
      columns.emplace_back();  // fill below
    }
  }

  // Fill deficient columns with an orthonormal complement (Gram-Schmidt over
  // the canonical basis).
  for (auto& col : columns) {
    if (!col.empty()) continue;
    for (std::size_t e = 0; e < h_hat.rows; ++e) {
      std::vector<cplx> cand(h_hat.rows, cplx(0.0, 0.0));
      cand[e] = 1.0;
      for (const auto& prev : columns) {
        if (prev.empty()) continue;
        const cplx proj = inner_product(cand, prev);
        for (std::size_t i = 0; i < cand.size(); ++i) cand[i] -= proj * prev[i];
      }
      const double nrm = vector_norm(cand);
      if (nrm > 1e-8) {
        for (cplx& x : cand) x /= nrm;
        col = std::move(cand);
        break;
      }
    }
    if (col.empty()) {
      throw std::runtime_error("svd_precoder: failed to build orthonormal complement");
    }
  }

  const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(p));
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < h_hat.rows; ++i) out.w(i, j) = columns[j][i] * inv_sqrt_p;
  }
  return out;
}

double spectral_efficiency(const ComplexMatrix& h_true, const Precoder& w, double sigma_dl_sq) {
  if (w.w.rows != h_true.rows) {
    throw std::invalid_argument("spectral_efficiency: precoder/channel row mismatch");
  }
  if (!(sigma_dl_sq > 0.0)) {
    throw std::invalid_argument("spectral_efficiency: sigma_dl_sq must be > 0");
  }
  for (const cplx& x : h_true.a) {
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) {
      throw std::invalid_argument("spectral_efficiency: non-finite channel entry");
    }
  }
  const std::size_t p = w.w.cols;
  // A = W^H H (P x N); the Gram A A^H / sigma^2 is Hermitian PSD.
  ComplexMatrix a(p, h_true.cols);
  for (std::size_t j = 0; j < h_true.cols; ++j) {
    for (std::size_t i = 0; i < p; ++i) {
      cplx s(0.0, 0.0);
      for (std::size_t r = 0; r < h_true.rows; ++r) s += std::conj(w.w(r, i)) * h_true(r, j);
      a(i, j) = s;
    }
  }
  ComplexMatrix g(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      cplx s(0.0, 0.0);
      for (std::size_t r = 0; r < a.cols; ++r) s += a(i, r) * std::conj(a(j, r));
      g(i, j) = s / sigma_dl_sq;
    }
  }
  double c = 0.0;
  for (const auto& [lambda, vec] : hermitian_eigen_desc(g)) {
    (void)vec;
    c += std::log2(1.0 + std::max(lambda, 0.0));
  }
  return c;
}

double downlink_noise_power(const ComplexTensor& truth, double snr_dl_db) {
  const double norm = frobenius_norm(truth);
  const double mean_subcarrier_power =
      norm * norm / static_cast<double>(truth.dim(2));
  return mean_subcarrier_power * std::pow(10.0, -snr_dl_db / 10.0) /
         static_cast<double>(truth.dim(1));
}

double evaluate_realization(const ComplexTensor& truth, const ComplexTensor& estimate,
                            std::size_t p, double snr_dl_db) {
  if (truth.dims() != estimate.dims()) {
    throw std::invalid_argument("evaluate_realization: dimension mismatch");
  }
  const std::size_t k = truth.dim(2);
  const double sigma_dl_sq = downlink_noise_power(truth, snr_dl_db);
  double mean_se = 0.0;
  for (std::size_t kk = 0; kk < k; ++kk) {
    Precoder w = svd_precoder(subcarrier_slice(estimate, kk), p);
    w.subcarrier = static_cast<long>(kk);
    mean_se += spectral_efficiency(subcarrier_slice(truth, kk), w, sigma_dl_sq);
  }
  return mean_se / static_cast<double>(k);
}

}  // namespace mtcpd
