#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>

namespace mtcpd {

/// Counter-based pseudo-random stream (philox4x32-10).
///
/// A stream is addressed by (master seed, 64-bit stream id); draws advance a
/// 64-bit block counter. Substreams are derived by hashing a path of labels
/// into a fresh stream id, so independent tasks can pull from disjoint
/// streams in any order and still reproduce the exact same values.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  /// Derive an independent stream from this one. The path labels are mixed
  /// into the stream id; the master seed is shared.
  RandomStream substream(std::initializer_list<std::uint64_t> path) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();

  /// Standard normal N(0, 1).
  double gaussian();

  /// Circularly-symmetric complex Gaussian CN(0, 1), i.e. E|z|^2 = 1.
  std::complex<double> complex_gaussian();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

private:
  void refill();

  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t block_ = 0;
  std::uint32_t buf_[4] = {0, 0, 0, 0};
  int pos_ = 4;
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

}  // namespace mtcpd
