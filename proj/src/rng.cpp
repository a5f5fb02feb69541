#include "mdtk/rng.hpp"

namespace mdtk {
namespace philox {

namespace {
constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;
}  // namespace

std::array<uint32_t, 4> block(uint32_t k0, uint32_t k1, uint32_t c0, uint32_t c1,
                              uint32_t c2, uint32_t c3) noexcept {
  for (int round = 0; round < 10; ++round) {
    const uint64_t p0 = static_cast<uint64_t>(kMul0) * c0;
    const uint64_t p1 = static_cast<uint64_t>(kMul1) * c2;
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return {c0, c1, c2, c3};
}

}  // namespace philox

void RepDraws::refill() noexcept {
  const auto words = philox::block(static_cast<uint32_t>(seed_), static_cast<uint32_t>(seed_ >> 32),
                                   static_cast<uint32_t>(block_index_),
                                   static_cast<uint32_t>(block_index_ >> 32),
                                   static_cast<uint32_t>(rep_), static_cast<uint32_t>(rep_ >> 32));
  buffer_[0] = static_cast<uint64_t>(words[0]) | (static_cast<uint64_t>(words[1]) << 32);
  buffer_[1] = static_cast<uint64_t>(words[2]) | (static_cast<uint64_t>(words[3]) << 32);
  buffered_ = 2;
  ++block_index_;
}

}  // namespace mdtk
