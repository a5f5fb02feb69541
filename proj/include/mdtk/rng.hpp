#pragma once

#include <array>
#include <cstdint>

namespace mdtk {

// Philox4x32-10 counter-based generator (Salmon, Moraes, Dror, Shaw 2011).
// A block is a pure function of (key, counter): any (rep, draw) pair can be
// produced without sequencing, which is what makes lane splitting and
// lane-count-independent reproducibility possible.
namespace philox {

std::array<uint32_t, 4> block(uint32_t k0, uint32_t k1, uint32_t c0, uint32_t c1,
                              uint32_t c2, uint32_t c3) noexcept;

}  // namespace philox

// Uniform draw stream for one Monte Carlo repetition. Draw j of rep r comes
// from philox(key=seed, counter=(r, j/2)), word pair j%2, so the values a rep
// sees depend only on (seed, r) and never on which lane executed it.
class RepDraws {
 public:
  RepDraws(uint64_t seed, uint64_t rep) noexcept : seed_(seed), rep_(rep) {}

  uint64_t next_u64() noexcept {
    if (buffered_ == 0) refill();
    return buffer_[2 - buffered_--];
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  uint64_t rep() const noexcept { return rep_; }

 private:
  void refill() noexcept;

  uint64_t seed_;
  uint64_t rep_;
  uint64_t block_index_ = 0;
  uint64_t buffer_[2] = {0, 0};
  int buffered_ = 0;
};

// Rep indices at and above this base are reserved for auxiliary streams
// (bootstrap resampling and similar); sample reps use [0, kAuxStreamBase).
inline constexpr uint64_t kAuxStreamBase = uint64_t{1} << 62;

}  // namespace mdtk
