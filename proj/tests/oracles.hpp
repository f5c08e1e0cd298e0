// Test-only oracles, deliberately independent of the library's own linear
// algebra: Eigen's two-sided Jacobi SVD provides reference singular values
// and vectors.
#pragma once

#include <Eigen/Dense>

#include <vector>

#include "mtcpd/rng.hpp"
#include "mtcpd/tensor.hpp"

namespace oracle {

inline Eigen::MatrixXcd to_eigen(const mtcpd::ComplexMatrix& m) {
  Eigen::MatrixXcd out(m.rows, m.cols);
  for (std::size_t j = 0; j < m.cols; ++j) {
    for (std::size_t i = 0; i < m.rows; ++i) out(static_cast<long>(i), static_cast<long>(j)) = m(i, j);
  }
  return out;
}

inline std::vector<double> singular_values(const mtcpd::ComplexMatrix& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(m));
  std::vector<double> s(svd.singularValues().data(),
                        svd.singularValues().data() + svd.singularValues().size());
  return s;
}

inline Eigen::MatrixXcd left_singular_vectors(const mtcpd::ComplexMatrix& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(m), Eigen::ComputeThinU);
  return svd.matrixU();
}

inline mtcpd::ComplexTensor random_tensor(std::vector<std::size_t> dims,
                                          mtcpd::RandomStream& stream) {
  mtcpd::ComplexTensor t(std::move(dims));
  for (auto& v : t.data()) v = stream.complex_gaussian();
  return t;
}

/// Largest 2x2 minor magnitude over every unfolding, normalized by the
/// squared largest entry magnitude; ~0 iff the tensor is rank-1 in every
/// unfolding.
inline double max_rank1_minor_violation(const mtcpd::ComplexTensor& t) {
  double max_entry = 0.0;
  for (const auto& v : t.data()) max_entry = std::max(max_entry, std::abs(v));
  if (max_entry == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t mode = 0; mode < t.order(); ++mode) {
    const mtcpd::ComplexMatrix u = mtcpd::unfold(t, mode);
    for (std::size_t i = 0; i + 1 < u.rows; ++i) {
      for (std::size_t i2 = i + 1; i2 < u.rows; ++i2) {
        for (std::size_t j = 0; j + 1 < u.cols; ++j) {
          for (std::size_t j2 = j + 1; j2 < u.cols; ++j2) {
            const mtcpd::cplx minor = u(i, j) * u(i2, j2) - u(i, j2) * u(i2, j);
            worst = std::max(worst, std::abs(minor));
          }
        }
      }
    }
  }
  return worst / (max_entry * max_entry);
}

}  // namespace oracle
