#pragma once

#include <array>
#include <cstdint>

namespace rvlab {

// Source of uniform variates on (0, 1]. Every sampler in the library draws
// through this interface so tests can script the exact sequence of draws.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual double uniform() = 0;

  // Standard normal via Box-Muller; consumes two uniforms.
  double normal();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * (1.0 - uniform()); }
  // Index in [0, n).
  std::uint64_t index(std::uint64_t n);
};

std::uint64_t splitmix64(std::uint64_t x);

// Raw Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

// Counter-based Philox4x32-10 stream. A stream is identified by
// (seed, stream id); split(i) derives a child stream whose id depends only on
// the parent id and i, so substreams are reproducible regardless of the order
// or thread in which they are consumed.
class Stream final : public RandomSource {
 public:
  explicit Stream(std::uint64_t seed, std::uint64_t id = 0);

  double uniform() override;
  using RandomSource::uniform;
  std::uint64_t next_u64();

  Stream split(std::uint64_t index) const;
  // Child stream keyed by a draw from this one; advances this stream.
  Stream fork();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t id() const { return id_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int position_ = 4;
};

}  // namespace rvlab
