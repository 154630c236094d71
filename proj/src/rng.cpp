// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#include "codial/rng.hpp"

#include <cmath>
#include <numbers>

#include "codial/errors.hpp"

namespace codial {

namespace {

// splitmix64 step; used to mix the four stream-id fields into one seed.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_stream_id(std::uint64_t seed, std::uint64_t epoch,
                            std::uint64_t index, std::uint64_t purpose) {
  std::uint64_t state = seed;
  std::uint64_t h = splitmix64(state);
  state ^= epoch + 0x9e3779b97f4a7c15ULL;
  h ^= splitmix64(state);
  state ^= index + 0xc2b2ae3d27d4eb4fULL;
  h ^= splitmix64(state);
  state ^= purpose + 0x165667b19e3779f9ULL;
  h ^= splitmix64(state);
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t epoch,
                     std::uint64_t index, Purpose purpose)
    : engine_(mix_stream_id(seed, epoch, index,
                            static_cast<std::uint64_t>(purpose))) {}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  if (!(lo <= hi)) throw ConfigError("uniform: lo > hi");
  double u = lo + (hi - lo) * uniform01();
  CODIAL_CHECK(u >= lo && u <= hi, "uniform draw outside [lo, hi]");
  return u;
}

double RngStream::log_uniform(double lo, double hi) {
  if (!(lo > 0.0 && lo <= hi)) throw ConfigError("log_uniform: need 0 < lo <= hi");
  double u = std::exp(uniform(std::log(lo), std::log(hi)));
  if (u < lo) u = lo;
  if (u > hi) u = hi;
  return u;
}

double RngStream::normal() {
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - uniform01();
  double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::uniform_int(std::uint64_t bound) {
  if (bound == 0) throw ConfigError("uniform_int: bound must be positive");
  // Rejection-free unbiased mapping via 128-bit multiply (Lemire).
  unsigned __int128 m =
      static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(bound);
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    std::uint64_t threshold = (0ULL - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(bound);
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace codial
