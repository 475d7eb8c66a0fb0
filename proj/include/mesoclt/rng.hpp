#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace mesoclt {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Every output block is a pure function of (key, counter), so draws can be
/// addressed directly by (seed, stream, index) without any sequential state.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit constexpr Philox4x32(std::uint64_t key) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  [[nodiscard]] constexpr Block operator()(std::uint64_t hi, std::uint64_t lo) const noexcept {
    Block ctr{static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(lo >> 32),
              static_cast<std::uint32_t>(hi), static_cast<std::uint32_t>(hi >> 32)};
    std::array<std::uint32_t, 2> k = key_;
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  std::array<std::uint32_t, 2> key_;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Domain tags keep independent consumers of one master seed apart.
enum class RngDomain : std::uint64_t {
  matrix_entries = 0x6d6174726978ull,
  gp_series = 0x67705f79ull,
  gp_field = 0x67705f7aull,
  test_draws = 0x74657374ull,
};

/// Two 64-bit words addressed by (seed, domain, stream, index).
struct RandomWords {
  std::uint64_t first;
  std::uint64_t second;
};

inline RandomWords random_words(std::uint64_t seed, RngDomain domain, std::uint64_t stream,
                                std::uint64_t index) noexcept {
  const Philox4x32 gen(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(domain))));
  const auto b = gen(stream, index);
  return {(std::uint64_t{b[1]} << 32) | b[0], (std::uint64_t{b[3]} << 32) | b[2]};
}

/// Uniform on (0, 1]; never returns 0 so it is safe under log().
constexpr double to_unit_open_closed(std::uint64_t w) noexcept {
  return static_cast<double>((w >> 11) + 1) * 0x1.0p-53;
}

/// Box-Muller: two independent standard normals from two words.
inline std::pair<double, double> box_muller(RandomWords w) noexcept {
  const double r = std::sqrt(-2.0 * std::log(to_unit_open_closed(w.first)));
  const double theta = 2.0 * std::numbers::pi * to_unit_open_closed(w.second);
  return {r * std::cos(theta), r * std::sin(theta)};
}

/// Sequential view over one (seed, domain, stream).
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, RngDomain domain, std::uint64_t stream) noexcept
      : seed_(seed), domain_(domain), stream_(stream) {}

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    auto [a, b] = box_muller(random_words(seed_, domain_, stream_, next_++));
    spare_ = b;
    has_spare_ = true;
    return a;
  }

  RandomWords words() noexcept { return random_words(seed_, domain_, stream_, next_++); }

 private:
  std::uint64_t seed_;
  RngDomain domain_;
  std::uint64_t stream_;
  std::uint64_t next_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mesoclt
