#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace espn {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Output is a pure function of (key, counter), so any stream position can be
/// produced independently. This is what lets a population row be regenerated
/// on whichever worker owns it.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) noexcept;
};

/// Sequential stream over Philox blocks. Counter words 2/3 carry a stream id
/// so distinct streams under one key never overlap.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;
  double normal() noexcept;

 private:
  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buf_{};
  int pos_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Fills `out` with N(0, sigma^2) draws that depend only on (key, counter
/// word 1..3). Used for population rows.
void fill_gaussian(std::uint64_t key, std::uint32_t tag, float sigma,
                   std::span<float> out) noexcept;

/// Derives an independent 64-bit seed from a parent seed, a label and up to
/// two indices (labeled sub-streams for the seed ledger).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label,
                          std::uint64_t a = 0, std::uint64_t b = 0) noexcept;

}  // namespace espn
