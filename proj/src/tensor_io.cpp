#include "mtcpd/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace mtcpd {

namespace {

constexpr char kMagic[4] = {'M', 'T', 'C', 'T'};
constexpr std::uint16_t kFormatVersion = 1;

template <typename T>
void put_le(std::ostream& os, T value) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint64_t>;
  U bits;
  if constexpr (std::is_floating_point_v<T>) {
    bits = std::bit_cast<U>(value);
  } else {
    bits = static_cast<U>(value);
  }
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  }
  os.write(bytes, sizeof(U));
}

template <typename T>
T get_le(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint64_t>;
  char bytes[sizeof(U)];
  is.read(bytes, sizeof(U));
  if (!is) throw std::runtime_error("tensor read: unexpected end of stream");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits |= static_cast<U>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  if constexpr (std::is_floating_point_v<T>) {
    return std::bit_cast<T>(bits);
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace

void write_tensor(std::ostream& os, const ComplexTensor& t) {
  os.write(kMagic, 4);
  put_le<std::uint16_t>(os, kFormatVersion);
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(t.order()));
  for (std::size_t d : t.dims()) put_le<std::uint64_t>(os, d);
  for (const cplx& v : t.data()) {
    put_le<double>(os, v.real());
    put_le<double>(os, v.imag());
  }
  if (!os) throw std::runtime_error("tensor write failed");
}

void write_tensor(const std::filesystem::path& path, const ComplexTensor& t) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  write_tensor(f, t);
}

ComplexTensor read_tensor(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || magic[0] != 'M' || magic[1] != 'T' || magic[2] != 'C' || magic[3] != 'T') {
    throw std::runtime_error("tensor read: bad magic");
  }
  const auto version = get_le<std::uint16_t>(is);
  if (version != kFormatVersion) {
    throw std::runtime_error("tensor read: unsupported format version " +
                             std::to_string(version));
  }
  const auto order = get_le<std::uint16_t>(is);
  std::vector<std::size_t> dims(order);
  std::size_t n = 1;
  for (auto& d : dims) {
    d = static_cast<std::size_t>(get_le<std::uint64_t>(is));
    if (d < 1) throw std::runtime_error("tensor read: invalid mode size");
    n *= d;
  }
  std::vector<cplx> data(n);
  for (auto& v : data) {
    const double re = get_le<double>(is);
    const double im = get_le<double>(is);
    v = cplx(re, im);
  }
  return ComplexTensor(std::move(dims), std::move(data));
}

ComplexTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
  return read_tensor(f);
}

}  // namespace mtcpd
