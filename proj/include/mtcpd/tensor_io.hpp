#pragma once

#include <filesystem>
#include <iosfwd>

#include "mtcpd/tensor.hpp"

namespace mtcpd {

/// Binary tensor format: magic "MTCT", u16 format version, u16 order, dims as
/// u64 list, then interleaved (real, imag) little-endian 64-bit floats in
/// linearization order.
void write_tensor(std::ostream& os, const ComplexTensor& t);
void write_tensor(const std::filesystem::path& path, const ComplexTensor& t);

ComplexTensor read_tensor(std::istream& is);
ComplexTensor read_tensor(const std::filesystem::path& path);

}  // namespace mtcpd
