#pragma once

#include <array>
#include <cstdint>

namespace qkd {

// Philox4x32-10 counter-based generator.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      ctr = Counter{static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                    static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

  static Key key_from_seed(std::uint64_t seed) {
    return Key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }

  // 53-bit uniform in [0, 1) from two words.
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57;
  static constexpr std::uint32_t kW0 = 0x9E3779B9;
  static constexpr std::uint32_t kW1 = 0xBB67AE85;
};

// Uniforms addressed by (seed, stream, slot). Slot s lives in block s/2, so
// a value does not depend on which other slots were drawn or in what order.
class SlotStream {
 public:
  SlotStream(Philox4x32::Key key, std::uint64_t stream) : key_(key), stream_(stream) {}

  double operator()(std::uint32_t slot) {
    const std::uint32_t b = slot >> 1;
    if (b != cached_) {
      words_ = Philox4x32::block(
          {static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32), b, 0}, key_);
      cached_ = b;
    }
    return (slot & 1) ? Philox4x32::to_unit(words_[2], words_[3]) : Philox4x32::to_unit(words_[0], words_[1]);
  }

 private:
  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint32_t cached_ = UINT32_MAX;
  Philox4x32::Counter words_{};
};

}  // namespace qkd
