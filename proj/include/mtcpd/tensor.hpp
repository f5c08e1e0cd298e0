#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace mtcpd {

using cplx = std::complex<double>;

/// Dense complex matrix, column-major.
struct ComplexMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<cplx> a;

  ComplexMatrix() = default;
  ComplexMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c) {}

  cplx& operator()(std::size_t i, std::size_t j) { return a[i + j * rows]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return a[i + j * rows]; }
};

/// Dense complex tensor of arbitrary order.
///
/// Linearization is little-endian mixed-radix: the flat offset of index
/// (i_0, ..., i_{P-1}) is i_0 + i_1*d_0 + i_2*d_0*d_1 + ..., i.e. the first
/// mode varies fastest. All reshaping operators in this library share this
/// convention.
class ComplexTensor {
public:
  ComplexTensor() = default;

  /// Zero tensor with the given mode sizes.
  explicit ComplexTensor(std::vector<std::size_t> dims);

  /// Adopts `data`; its length must equal the product of `dims`.
  ComplexTensor(std::vector<std::size_t> dims, std::vector<cplx> data);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  std::size_t dim(std::size_t mode) const { return dims_[mode]; }
  std::size_t size() const { return data_.size(); }

  std::span<const cplx> data() const { return data_; }
  std::span<cplx> data() { return data_; }

  cplx& operator[](std::size_t flat) { return data_[flat]; }
  const cplx& operator[](std::size_t flat) const { return data_[flat]; }

  cplx& at(std::span<const std::size_t> idx) { return data_[flat_index(idx)]; }
  const cplx& at(std::span<const std::size_t> idx) const { return data_[flat_index(idx)]; }

  std::size_t flat_index(std::span<const std::size_t> idx) const;

  ComplexTensor& operator+=(const ComplexTensor& rhs);
  ComplexTensor& operator-=(const ComplexTensor& rhs);
  ComplexTensor& operator*=(cplx scale);

private:
  std::vector<std::size_t> dims_;
  std::vector<cplx> data_;
};

/// Factorization of the three physical modes (X, Y, K) into sub-dimensions.
/// Each factor list must multiply back to its physical dimension; entries
/// must be >= 2 unless the list is the trivial single-entry one.
struct TensorizationPlan {
  std::array<std::size_t, 3> physical_dims{};  // X, Y, K
  std::vector<std::size_t> factors_x;
  std::vector<std::size_t> factors_y;
  std::vector<std::size_t> factors_k;

  /// Throws std::invalid_argument when any invariant is violated.
  void validate() const;

  /// Concatenated sub-dimensions (X_1..X_A, Y_1..Y_B, K_1..K_C).
  std::vector<std::size_t> virtual_dims() const;

  /// Total virtual order A + B + C.
  std::size_t order() const { return factors_x.size() + factors_y.size() + factors_k.size(); }

  bool is_trivial() const {
    return factors_x.size() == 1 && factors_y.size() == 1 && factors_k.size() == 1;
  }
};

/// Reshape an M x K antenna-by-subcarrier matrix into an X x Y x K tensor.
/// Antenna index convention: m = i_x * Y + i_y (horizontal-major), matching
/// the Kronecker order of the array response a_X (x) a_Y.
ComplexTensor reshape_ura(const ComplexMatrix& h_slice, std::size_t x, std::size_t y);

/// Inverse of reshape_ura: X x Y x K tensor back to the M x K matrix.
ComplexMatrix flatten_ura(const ComplexTensor& t);

/// Mode-n unfolding: rows indexed by mode n, columns by the remaining modes
/// in linearization order.
ComplexMatrix unfold(const ComplexTensor& t, std::size_t mode);

/// Inverse of unfold.
ComplexTensor fold(const ComplexMatrix& m, std::size_t mode, std::vector<std::size_t> dims);

/// Kronecker product: out[i*|b| + j] = a[i] * b[j].
std::vector<cplx> kronecker(std::span<const cplx> a, std::span<const cplx> b);

/// Kronecker chain for little-endian digit order: factors[0] addresses the
/// fastest-varying (stride-1) digit, so the chain is evaluated with the
/// highest-stride factor leftmost. out[sum_c i_c * stride_c] = prod_c f_c[i_c].
std::vector<cplx> kronecker_chain(std::span<const std::vector<cplx>> factors);

/// Split the three physical modes into the plan's virtual modes. With the
/// shared little-endian convention this relabels indices without moving data.
ComplexTensor tensorize(const ComplexTensor& t, const TensorizationPlan& plan);

/// Exact inverse of tensorize.
ComplexTensor detensorize(const ComplexTensor& t, const TensorizationPlan& plan);

/// Outer product u_1 o u_2 o ... o u_P of at least two factors.
ComplexTensor rank1_tensor(std::span<const std::vector<cplx>> factors);

double frobenius_norm(const ComplexTensor& t);
double frobenius_norm(const ComplexMatrix& m);

/// <a, b> = sum a_i * conj(b_i).
cplx inner_product(std::span<const cplx> a, std::span<const cplx> b);

double vector_norm(std::span<const cplx> v);

}  // namespace mtcpd
