// Copyright (c) 2026 gffwalk contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace gffwalk {

// Splittable, counter-based seeding. Every random quantity in the project is
// keyed by a 64-bit seed derived from (master seed, structural coordinates),
// never by draw order, so lazy evaluation and parallel execution cannot change
// results.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// SplitMix64 finalizer (Vigna / Steele-Lea-Flood). Bijective on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derive a child seed from a parent seed and a branch label.
constexpr std::uint64_t derive_seed(std::uint64_t key, std::uint64_t label) {
  return mix64(key + kGolden * (label + 1));
}

// Stream labels used to keep unrelated consumers of the same master seed on
// disjoint streams.
namespace seed_tag {
inline constexpr std::uint64_t root = 0x726f6f74;       // arena root noise
inline constexpr std::uint64_t walk = 0x77616c6b;       // SRW steps
inline constexpr std::uint64_t trial = 0x7472696c;      // nested MC trials
inline constexpr std::uint64_t attempt = 0x61747074;    // rejection sampling
inline constexpr std::uint64_t synthetic = 0x73796e74;  // synthetic data
}  // namespace seed_tag

// Sequential SplitMix64 stream. Cheap to construct, one per consumer.
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in (0, 1]; safe as a log() argument.
  double next_double_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Unbiased uniform integer in [0, n).
  std::uint32_t next_below(std::uint32_t n) {
    const std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= lim) x = next_u64();
    return static_cast<std::uint32_t>(x % n);
  }

  // Standard normal via Box-Muller (cosine branch only).
  double next_normal() {
    const double u = next_double_pos();
    const double v = next_double();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }

 private:
  std::uint64_t state_;
};

// Deterministic noise seed for the vertex addressed by `path`, a sequence of
// child indices from the root. The chain over path digits makes sibling and
// prefix seeds distinct by construction.
inline std::uint64_t vertex_seed(std::uint64_t master_seed,
                                 std::span<const std::uint8_t> path) {
  std::uint64_t s = derive_seed(master_seed, seed_tag::root);
  for (std::uint8_t c : path) s = derive_seed(s, c);
  return s;
}

}  // namespace gffwalk
