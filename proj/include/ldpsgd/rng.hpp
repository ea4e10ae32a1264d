// Copyright 2026 The ldpsgd Authors
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

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldpsgd {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer. Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Stream-id salts for the fixed roles a run derives from one handle.
// Values are > 2^40 so they can never collide with loop indices.
namespace streams {
inline constexpr std::uint64_t kData = 0x00000100000000D1ULL;
inline constexpr std::uint64_t kNoise = 0x00000100000000A7ULL;
inline constexpr std::uint64_t kBudget = 0x00000100000000B5ULL;
inline constexpr std::uint64_t kInit = 0x000001000000001FULL;
inline constexpr std::uint64_t kHoldout = 0x00000100000000E3ULL;
inline constexpr std::uint64_t kPermute = 0x00000100000000F9ULL;
}  // namespace streams

/**
 * Counter-based splittable random generator.
 *
 * A handle is fully determined by (seed, stream): equal pairs produce
 * bit-identical sequences, and substream() derives statistically
 * independent child streams. Replication r / individual i get their own
 * streams via substream chaining, so parallel replications never share
 * state and results do not depend on execution order.
 */
class RngHandle {
 public:
  explicit RngHandle(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed),
        stream_(stream),
        base_(mix64(mix64(seed + kGoldenGamma) ^ mix64(stream))),
        ctr_(0),
        has_spare_(false),
        spare_(0.0) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Derives an independent child stream keyed by `id`. Pure: does not
  // advance this handle.
  RngHandle substream(std::uint64_t id) const {
    return RngHandle(seed_, mix64(stream_ ^ mix64(id + kGoldenGamma)));
  }

  std::uint64_t next_u64() { return mix64(base_ + (++ctr_) * kGoldenGamma); }

  // Uniform on the open interval (0, 1); never returns an endpoint, so
  // logs of the result are always finite.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal deviate via Box-Muller; the second deviate of each
  // pair is cached on the handle.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Laplace(0, scale) deviate by CDF inversion.
  double next_laplace(double scale) {
    const double u = next_unit();
    return u < 0.5 ? scale * std::log(2.0 * u) : -scale * std::log(2.0 * (1.0 - u));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t base_;
  std::uint64_t ctr_;
  bool has_spare_;
  double spare_;
};

// d iid draws from the unit normal.
inline std::vector<double> standard_gaussian(RngHandle& rng, int d) {
  if (d < 1) throw std::domain_error("standard_gaussian: d must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(d));
  for (auto& x : v) x = rng.next_gaussian();
  return v;
}

// d iid draws from Laplace(0, scale).
inline std::vector<double> standard_laplace(RngHandle& rng, int d, double scale) {
  if (d < 1) throw std::domain_error("standard_laplace: d must be >= 1");
  if (!(scale > 0.0)) throw std::domain_error("standard_laplace: scale must be > 0");
  std::vector<double> v(static_cast<std::size_t>(d));
  for (auto& x : v) x = rng.next_laplace(scale);
  return v;
}

// FNV-1a, used to key RNG substreams by cell identity strings.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace ldpsgd
