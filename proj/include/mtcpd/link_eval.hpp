#pragma once

#include <utility>
#include <vector>

#include "mtcpd/tensor.hpp"

namespace mtcpd {

/// SVD-based precoder for one subcarrier: columns are the top left singular
/// vectors of the channel estimate, each scaled by 1/sqrt(P), so
/// w^H w = I / P.
struct Precoder {
  ComplexMatrix w;          // M x P
  long subcarrier = -1;
  std::size_t streams = 0;  // P
  bool rank_deficient = false;
};

/// Eigen-pairs of a Hermitian matrix, eigenvalues descending, eigenvectors
/// orthonormal (cyclic Jacobi; intended for small matrices).
std::vector<std::pair<double, std::vector<cplx>>> hermitian_eigen_desc(const ComplexMatrix& a);

/// Top-p left singular vectors of h_hat via eigendecomposition of the small
/// Gram matrix h_hat^H h_hat (u_i = h_hat v_i / s_i). Rank-deficient inputs
/// get the missing columns filled with an orthonormal complement and the
/// precoder flagged; the all-zero matrix is rejected.
Precoder svd_precoder(const ComplexMatrix& h_hat, std::size_t p);

/// log2 det(I + w^H H H^H w / sigma_dl_sq), in bits/s/Hz.
double spectral_efficiency(const ComplexMatrix& h_true, const Precoder& w, double sigma_dl_sq);

/// Downlink noise power for a target SNR against the average per-subcarrier
/// power of the true channel: mean_k ||H_k||_F^2 * 10^(-snr/10) / N.
double downlink_noise_power(const ComplexTensor& truth, double snr_dl_db);

/// Mean over subcarriers of the spectral efficiency obtained by precoding on
/// the estimate and evaluating on the true channel.
double evaluate_realization(const ComplexTensor& truth, const ComplexTensor& estimate,
                            std::size_t p, double snr_dl_db);

}  // namespace mtcpd
