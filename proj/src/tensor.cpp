#include "mtcpd/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mtcpd {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d < 1) throw std::invalid_argument("tensor mode size must be >= 1");
    n *= d;
  }
  return n;
}

void check_factors(const std::vector<std::size_t>& factors, std::size_t physical,
                   const char* label) {
  if (factors.empty()) {
    throw std::invalid_argument(std::string("plan factors for mode ") + label + " are empty");
  }
  std::size_t prod = 1;
  for (std::size_t f : factors) {
    if (f < 1) throw std::invalid_argument("plan sub-dimension must be >= 1");
    if (f < 2 && factors.size() > 1) {
      throw std::invalid_argument(std::string("plan sub-dimensions for mode ") + label +
                                  " must be >= 2 unless the factorization is trivial");
    }
    prod *= f;
  }
  if (prod != physical) {
    throw std::invalid_argument(std::string("plan sub-dimensions for mode ") + label +
                                " do not multiply to the physical size (" +
                                std::to_string(prod) + " != " + std::to_string(physical) + ")");
  }
}

}  // namespace

ComplexTensor::ComplexTensor(std::vector<std::size_t> dims)
    : dims_(std::move(dims)), data_(checked_product(dims_)) {}

ComplexTensor::ComplexTensor(std::vector<std::size_t> dims, std::vector<cplx> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (data_.size() != checked_product(dims_)) {
    throw std::invalid_argument("tensor data length does not match product of dims");
  }
}

std::size_t ComplexTensor::flat_index(std::span<const std::size_t> idx) const {
  if (idx.size() != dims_.size()) {
    throw std::invalid_argument("index order does not match tensor order");
  }
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (std::size_t m = 0; m < dims_.size(); ++m) {
    if (idx[m] >= dims_[m]) throw std::out_of_range("tensor index out of range");
    flat += idx[m] * stride;
    stride *= dims_[m];
  }
  return flat;
}

ComplexTensor& ComplexTensor::operator+=(const ComplexTensor& rhs) {
  if (dims_ != rhs.dims_) throw std::invalid_argument("tensor dims mismatch in +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
  return *this;
}

ComplexTensor& ComplexTensor::operator-=(const ComplexTensor& rhs) {
  if (dims_ != rhs.dims_) throw std::invalid_argument("tensor dims mismatch in -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
  return *this;
}

ComplexTensor& ComplexTensor::operator*=(cplx scale) {
  for (auto& v : data_) v *= scale;
  return *this;
}

void TensorizationPlan::validate() const {
  check_factors(factors_x, physical_dims[0], "X");
  check_factors(factors_y, physical_dims[1], "Y");
  check_factors(factors_k, physical_dims[2], "K");
}

std::vector<std::size_t> TensorizationPlan::virtual_dims() const {
  std::vector<std::size_t> dims;
  dims.reserve(order());
  dims.insert(dims.end(), factors_x.begin(), factors_x.end());
  dims.insert(dims.end(), factors_y.begin(), factors_y.end());
  dims.insert(dims.end(), factors_k.begin(), factors_k.end());
  return dims;
}

ComplexTensor reshape_ura(const ComplexMatrix& h_slice, std::size_t x, std::size_t y) {
  if (h_slice.rows != x * y) {
    throw std::invalid_argument("reshape_ura: matrix rows (" + std::to_string(h_slice.rows) +
                                ") != x*y (" + std::to_string(x * y) + ")");
  }
  const std::size_t k = h_slice.cols;
  ComplexTensor t({x, y, k});
  for (std::size_t kk = 0; kk < k; ++kk) {
    for (std::size_t ix = 0; ix < x; ++ix) {
      for (std::size_t iy = 0; iy < y; ++iy) {
        t[ix + x * iy + x * y * kk] = h_slice(ix * y + iy, kk);
      }
    }
  }
  return t;
}

ComplexMatrix flatten_ura(const ComplexTensor& t) {
  if (t.order() != 3) throw std::invalid_argument("flatten_ura expects an order-3 tensor");
  const std::size_t x = t.dim(0), y = t.dim(1), k = t.dim(2);
  ComplexMatrix h(x * y, k);
  for (std::size_t kk = 0; kk < k; ++kk) {
    for (std::size_t ix = 0; ix < x; ++ix) {
      for (std::size_t iy = 0; iy < y; ++iy) {
        h(ix * y + iy, kk) = t[ix + x * iy + x * y * kk];
      }
    }
  }
  return h;
}

ComplexMatrix unfold(const ComplexTensor& t, std::size_t mode) {
  if (mode >= t.order()) throw std::invalid_argument("unfold: mode out of range");
  const std::size_t rows = t.dim(mode);
  const std::size_t cols = t.size() / rows;
  ComplexMatrix m(rows, cols);

  std::size_t stride_below = 1;  // product of dims before `mode`
  for (std::size_t i = 0; i < mode; ++i) stride_below *= t.dim(i);
  const std::size_t stride_mode = stride_below * rows;

  // Column index = (below-part) + (above-part) * stride_below, both in
  // linearization order with mode removed.
  const auto data = t.data();
  for (std::size_t flat = 0; flat < data.size(); ++flat) {
    const std::size_t below = flat % stride_below;
    const std::size_t i = (flat / stride_below) % rows;
    const std::size_t above = flat / stride_mode;
    m(i, below + above * stride_below) = data[flat];
  }
  return m;
}

ComplexTensor fold(const ComplexMatrix& m, std::size_t mode, std::vector<std::size_t> dims) {
  if (mode >= dims.size()) throw std::invalid_argument("fold: mode out of range");
  ComplexTensor t(std::move(dims));
  if (m.rows != t.dim(mode) || m.rows * m.cols != t.size()) {
    throw std::invalid_argument("fold: matrix shape does not match target dims");
  }
  std::size_t stride_below = 1;
  for (std::size_t i = 0; i < mode; ++i) stride_below *= t.dim(i);
  const std::size_t stride_mode = stride_below * m.rows;

  for (std::size_t flat = 0; flat < t.size(); ++flat) {
    const std::size_t below = flat % stride_below;
    const std::size_t i = (flat / stride_below) % m.rows;
    const std::size_t above = flat / stride_mode;
    t[flat] = m(i, below + above * stride_below);
  }
  return t;
}

std::vector<cplx> kronecker(std::span<const cplx> a, std::span<const cplx> b) {
  std::vector<cplx> out(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      out[i * b.size() + j] = a[i] * b[j];
    }
  }
  return out;
}

std::vector<cplx> kronecker_chain(std::span<const std::vector<cplx>> factors) {
  if (factors.empty()) throw std::invalid_argument("kronecker_chain: empty factor list");
  std::vector<cplx> acc = factors[0];
  for (std::size_t i = 1; i < factors.size(); ++i) {
    acc = kronecker(factors[i], acc);
  }
  return acc;
}

ComplexTensor tensorize(const ComplexTensor& t, const TensorizationPlan& plan) {
  plan.validate();
  if (t.order() != 3 || t.dim(0) != plan.physical_dims[0] || t.dim(1) != plan.physical_dims[1] ||
      t.dim(2) != plan.physical_dims[2]) {
    throw std::invalid_argument("tensorize: tensor dims do not match plan physical dims");
  }
  // Little-endian digits per mode plus little-endian linearization: the flat
  // offset of every element is unchanged, so this is a relabeling.
  const auto d = t.data();
  return ComplexTensor(plan.virtual_dims(), std::vector<cplx>(d.begin(), d.end()));
}

ComplexTensor detensorize(const ComplexTensor& t, const TensorizationPlan& plan) {
  plan.validate();
  if (t.dims() != plan.virtual_dims()) {
    throw std::invalid_argument("detensorize: tensor dims do not match plan virtual dims");
  }
  const auto d = t.data();
  return ComplexTensor(
      {plan.physical_dims[0], plan.physical_dims[1], plan.physical_dims[2]},
      std::vector<cplx>(d.begin(), d.end()));
}

ComplexTensor rank1_tensor(std::span<const std::vector<cplx>> factors) {
  if (factors.size() < 2) {
    throw std::invalid_argument("rank1_tensor needs at least two factors");
  }
  std::vector<std::size_t> dims;
  dims.reserve(factors.size());
  for (const auto& f : factors) {
    if (f.empty()) throw std::invalid_argument("rank1_tensor: empty factor");
    dims.push_back(f.size());
  }
  // The little-endian outer product coincides with the kronecker chain.
  return ComplexTensor(std::move(dims), kronecker_chain(factors));
}

double frobenius_norm(const ComplexTensor& t) {
  double s = 0.0;
  for (const cplx& v : t.data()) s += std::norm(v);
  return std::sqrt(s);
}

double frobenius_norm(const ComplexMatrix& m) {
  double s = 0.0;
  for (const cplx& v : m.a) s += std::norm(v);
  return std::sqrt(s);
}

cplx inner_product(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw std::invalid_argument("inner_product: length mismatch");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
  return s;
}

double vector_norm(std::span<const cplx> v) {
  double s = 0.0;
  for (const cplx& x : v) s += std::norm(x);
  return std::sqrt(s);
}

}  // namespace mtcpd
