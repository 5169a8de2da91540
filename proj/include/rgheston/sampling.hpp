#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <boost/random/normal_distribution.hpp>

#include "rgheston/errors.hpp"

namespace rgheston {

namespace detail {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds (Salmon et al., SC'11).
inline PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) noexcept {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based random stream. The draws are a pure function of
// (seed, stream_id, substream, position), so a Monte Carlo sample index maps
// to the same numbers whatever thread or order it is simulated in.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t substream = 0) noexcept {
    const std::uint64_t k = detail::splitmix64(seed);
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    ctr_ = {static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32), substream, 0u};
  }

  // Independent stream sharing the key and stream id, with its own counter.
  [[nodiscard]] RngStream substream(std::uint32_t id) const noexcept {
    RngStream s = *this;
    s.ctr_[2] = id;
    s.ctr_[3] = 0;
    s.avail_ = 0;
    return s;
  }

  [[nodiscard]] std::uint64_t stream_id() const noexcept {
    return static_cast<std::uint64_t>(ctr_[1]) << 32 | ctr_[0];
  }

  std::uint64_t next_u64() noexcept {
    if (avail_ == 0) {
      buf_ = detail::philox4x32_10(ctr_, key_);
      ++ctr_[3];
      avail_ = 2;
    }
    const int i = 2 - avail_--;
    return static_cast<std::uint64_t>(buf_[2 * i + 1]) << 32 | buf_[2 * i];
  }

  // Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  // Standard normal (ziggurat); usually consumes a single 64-bit draw.
  double normal() noexcept {
    Engine eng{this};
    return boost::random::normal_distribution<double>()(eng);
  }

  bool bernoulli_half() noexcept { return (next_u64() >> 63) != 0; }

private:
  struct Engine {
    RngStream* stream;
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() noexcept { return stream->next_u64(); }
  };

  detail::PhiloxKey key_{};
  detail::PhiloxBlock ctr_{};
  detail::PhiloxBlock buf_{};
  int avail_ = 0;
};

inline double draw_normal(RngStream& stream) noexcept { return stream.normal(); }

// Gamma(shape, scale); Marsaglia-Tsang for shape >= 1, boosted for shape < 1.
double draw_gamma(double shape, double scale, RngStream& stream);

// Poisson(mean); multiplication method below 10, PTRS (Hoermann 1993) above.
std::uint64_t draw_poisson(double mean, RngStream& stream);

// psi_b(t) = (1 - e^{-bt}) / b, continuous at b = 0 where it equals t.
[[nodiscard]] inline double psi_b(double b, double t) noexcept {
  const double bt = b * t;
  if (bt == 0.0) return t;
  return -std::expm1(-bt) / b;
}

// Law of Y_t for dY = (a - bY)dt + sigma sqrt(Y) dW started at y0:
// c * chi^2_d(lambda) with the fields below.
struct CirTransitionParams {
  double y0 = 0.0;
  double t = 0.0;
  double a = 0.0;
  double b = 0.0;
  double sigma = 1.0;

  [[nodiscard]] double dof() const noexcept { return 4.0 * a / (sigma * sigma); }
  [[nodiscard]] double scale() const noexcept { return sigma * sigma * psi_b(b, t) / 4.0; }
  [[nodiscard]] double noncentrality() const noexcept { return y0 * std::exp(-b * t) / scale(); }
};

// Precomputed constants of the exact CIR transition for a fixed step.
struct CirStep {
  double scale = 0.0;      // c = sigma^2 psi_b(t) / 4
  double decay = 1.0;      // e^{-bt}
  double half_dof = 0.0;   // d / 2 = 2a / sigma^2

  CirStep() = default;
  CirStep(double t, double a, double b, double sigma)
      : scale(0.25 * sigma * sigma * psi_b(b, t)), decay(std::exp(-b * t)), half_dof(2.0 * a / (sigma * sigma)) {}

  double draw(double y, RngStream& stream) const {
    const double shape = half_dof + static_cast<double>(draw_poisson(0.5 * y * decay / scale, stream));
    return shape == 0.0 ? 0.0 : 2.0 * scale * draw_gamma(shape, 1.0, stream);
  }
};

// Exact CIR transition: c * 2 * Gamma(d/2 + Poisson(lambda/2), 1).
double cir_exact_transition(const CirTransitionParams& p, RngStream& stream);

}  // namespace rgheston
