//
// Copyright 2026 The dpalloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Counter-based random streams.
//
// Every draw is a pure function of (key, stream, substream, position), computed
// with Philox4x64-10. Two streams with the same coordinates produce the same
// sequence on every platform, and streams for different trials can be
// generated in any order or on any thread.
//
#ifndef DPALLOC_RNG_HPP_
#define DPALLOC_RNG_HPP_

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>

#include "dpalloc/error.hpp"

namespace dpalloc {

namespace philox {

using Counter = std::array<std::uint64_t, 4>;
using Key = std::array<std::uint64_t, 2>;

inline constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
inline constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
inline constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;

inline constexpr void MulHiLo(std::uint64_t a, std::uint64_t b,
                              std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

// Philox4x64 with 10 rounds (Salmon et al., SC'11).
inline constexpr Counter Philox4x64_10(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    std::uint64_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
    MulHiLo(kM0, ctr[0], hi0, lo0);
    MulHiLo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

}  // namespace philox

// Maps a 64-bit word to a double strictly inside (0, 1).
inline constexpr double ToOpenUnit(std::uint64_t bits) {
  // 52 bits so that the largest value, 1 - 2^-53, is representable.
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1p-52;
}

template <typename R>
concept UniformSource = requires(R& r) {
  { r.uniform() } -> std::convertible_to<double>;
};

// Inverse-CDF Laplace draw from a single uniform u in (0,1):
//   x = -b * sgn(u - 1/2) * ln(1 - 2|u - 1/2|)
inline double LaplaceFromUniform(double u, double scale) {
  const double d = u - 0.5;
  if (d == 0.0) return 0.0;
  const double mag = -scale * std::log1p(-2.0 * std::fabs(d));
  return d > 0 ? mag : -mag;
}

template <UniformSource R>
double SampleLaplace(double scale, R& rng) {
  if (!(scale > 0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kNonPositiveScale, "Laplace scale must be > 0");
  }
  return LaplaceFromUniform(rng.uniform(), scale);
}

template <UniformSource R>
double SampleExponential(double scale, R& rng) {
  return -scale * std::log(rng.uniform());
}

// Box-Muller; uses two uniforms per call and discards the second normal so the
// number of words consumed per draw is fixed.
template <UniformSource R>
double SampleStandardNormal(R& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

class RngStream {
 public:
  using Key = philox::Key;

  RngStream() = default;
  RngStream(Key key, std::uint64_t stream, std::uint64_t substream = 0)
      : key_(key), stream_(stream), substream_(substream) {}

  static RngStream FromSeed(std::uint64_t seed, std::uint64_t domain = 0) {
    return RngStream(Key{seed, domain}, 0);
  }

  std::uint64_t next_u64() {
    const std::uint64_t block = position_ >> 2;
    if (!cached_ || block != cached_block_) {
      buffer_ = philox::Philox4x64_10({stream_, substream_, block, 0}, key_);
      cached_block_ = block;
      cached_ = true;
    }
    return buffer_[position_++ & 3];
  }

  double uniform() { return ToOpenUnit(next_u64()); }

  double laplace(double scale) { return SampleLaplace(scale, *this); }

  // Independent child stream. Children of distinct indices never overlap each
  // other or the parent. Only root streams may be forked.
  RngStream fork(std::uint64_t index) const {
    if (substream_ != 0) {
      throw Error(ErrorCode::kInvalidConfig, "cannot fork a forked stream");
    }
    if (index == UINT64_MAX) {
      throw Error(ErrorCode::kDomainError, "fork index out of range");
    }
    return RngStream(key_, stream_, index + 1);
  }

  const Key& key() const noexcept { return key_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t substream() const noexcept { return substream_; }
  std::uint64_t position() const noexcept { return position_; }

  // Seed record kept on noisy releases.
  std::uint64_t seed_record() const noexcept {
    return key_[0] ^ (key_[1] * philox::kW0) ^ (stream_ * philox::kW1);
  }

  friend bool operator==(const RngStream& a, const RngStream& b) {
    return a.key_ == b.key_ && a.stream_ == b.stream_ &&
           a.substream_ == b.substream_ && a.position_ == b.position_;
  }

 private:
  Key key_{0, 0};
  std::uint64_t stream_ = 0;
  std::uint64_t substream_ = 0;
  std::uint64_t position_ = 0;
  std::uint64_t cached_block_ = 0;
  bool cached_ = false;
  philox::Counter buffer_{};
};

// Injective: (base, epsilon index, trial) -> distinct (key, stream) material.
inline RngStream DeriveTrialStream(std::uint64_t base_seed,
                                   std::uint64_t epsilon_index,
                                   std::uint64_t trial_index) {
  return RngStream(RngStream::Key{base_seed, epsilon_index}, trial_index);
}

// Anything that yields mean-zero Laplace noise of a requested scale.
template <typename N>
concept NoiseSource = requires(N& n, double scale) {
  { n.laplace(scale) } -> std::convertible_to<double>;
};

// Noise source that always returns zero; stands in for a mechanism in
// "no noise" baselines and tests.
struct ZeroNoise {
  double laplace(double scale) const {
    if (!(scale > 0)) {
      throw Error(ErrorCode::kNonPositiveScale, "Laplace scale must be > 0");
    }
    return 0.0;
  }
  double uniform() const { return 0.5; }
  std::uint64_t seed_record() const { return 0; }
};

template <typename N>
std::uint64_t SeedRecordOf(const N& n) {
  if constexpr (requires { n.seed_record(); }) {
    return n.seed_record();
  } else {
    return 0;
  }
}

}  // namespace dpalloc

#endif  // DPALLOC_RNG_HPP_
