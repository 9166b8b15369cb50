#pragma once

#include <array>
#include <cstdint>

namespace rfx {

// Philox4x32-10 block function.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block encrypt(Block ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }
};

// Stream tags; the low 28 bits carry a query or candidate index.
inline constexpr std::uint32_t kStreamStage1 = 0x00000000u;
inline constexpr std::uint32_t kStreamTopUp = 0x10000000u;
inline constexpr std::uint32_t kStreamPair = 0x20000000u;
inline constexpr std::uint32_t kStreamMinimize = 0x30000000u;

// Random words for one (seed, stream, index) triple. Every sampling
// iteration gets its own generator, so results never depend on which worker
// ran the iteration.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t stream, std::uint64_t index)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{0, static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream} {}

  std::uint32_t next() {
    if (used_ == 4) {
      buffer_ = Philox4x32::encrypt(ctr_, key_);
      ++ctr_[0];
      used_ = 0;
    }
    return buffer_[used_++];
  }

  // Unbiased draw from [0, n), n >= 1 (Lemire's multiply-and-reject).
  std::uint32_t uniform(std::uint32_t n) {
    std::uint64_t m = std::uint64_t{next()} * n;
    auto low = static_cast<std::uint32_t>(m);
    if (low < n) {
      std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
      while (low < threshold) {
        m = std::uint64_t{next()} * n;
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

 private:
  Philox4x32::Key key_;
  Philox4x32::Block ctr_;
  Philox4x32::Block buffer_{};
  int used_ = 4;
};

}  // namespace rfx
