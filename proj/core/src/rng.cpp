#include "espn/rng.hpp"

#include <cmath>
#include <numbers>

namespace espn {
namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline Philox4x32::Key split_key(std::uint64_t k) noexcept {
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

// (0,1): never returns 0, so log() below is safe.
inline double to_open_unit(std::uint32_t x) noexcept {
  return (static_cast<double>(x) + 0.5) * (1.0 / 4294967296.0);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(split_key(seed)), stream_(stream) {}

std::uint32_t CounterRng::next_u32() noexcept {
  if (pos_ == 4) {
    buf_ = Philox4x32::generate(
        {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
         static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
        key_);
    ++block_;
    pos_ = 0;
  }
  return buf_[pos_++];
}

std::uint64_t CounterRng::next_u64() noexcept {
  const std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double CounterRng::uniform() noexcept { return to_open_unit(next_u32()); }

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
  // Reject the low 2^64 mod bound values.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double CounterRng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

void fill_gaussian(std::uint64_t key, std::uint32_t tag, float sigma,
                   std::span<float> out) noexcept {
  const Philox4x32::Key k = split_key(key);
  const std::size_t n = out.size();
  std::uint64_t block = 0;
  for (std::size_t j = 0; j < n; j += 4, ++block) {
    const auto x = Philox4x32::generate(
        {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32), tag,
         0x45535045u},
        k);
    double z[4];
    for (int p = 0; p < 2; ++p) {
      const double r = std::sqrt(-2.0 * std::log(to_open_unit(x[2 * p])));
      const double theta = 2.0 * std::numbers::pi * to_open_unit(x[2 * p + 1]);
      z[2 * p] = r * std::cos(theta);
      z[2 * p + 1] = r * std::sin(theta);
    }
    for (std::size_t q = 0; q < 4 && j + q < n; ++q) {
      out[j + q] = static_cast<float>(sigma * z[q]);
    }
  }
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t a,
                          std::uint64_t b) noexcept {
  // FNV-1a over the label, then splitmix rounds folding in each input.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  std::uint64_t x = splitmix64(parent ^ 0x5851F42D4C957F2Dull);
  x = splitmix64(x ^ h);
  x = splitmix64(x ^ a);
  x = splitmix64(x ^ (b + 0x632BE59BD9B4E019ull));
  return x;
}

}  // namespace espn
