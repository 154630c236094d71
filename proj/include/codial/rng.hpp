// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace codial {

// Consumers of randomness. The purpose tag is part of the stream id so that
// adding draws to one consumer never shifts another consumer's sequence.
enum class Purpose : std::uint64_t {
  kInit = 1,       // parameter initialization
  kShuffle = 2,    // epoch-level dataset ordering
  kViews = 3,      // per-image view generation (aux + primary transforms)
  kPairs = 4,      // per-image view-pair subset selection
  kNegatives = 5,  // per-image cross-image negative draws
  kNoise = 6,      // reparameterization noise
  kEvalViews = 7,  // held-out pretext evaluation views (fixed across epochs)
  kData = 8,       // synthetic dataset generation
  kProbe = 9,      // linear probe initialization
  kOracle = 10,    // test oracles / synthetic MI sampling
};

// Deterministic, independently seedable random stream. The engine is
// std::mt19937_64 (sequence fixed by the standard); all value mappings are
// implemented here because the std distributions are not portable.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t index,
            Purpose purpose);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();

  // Uniform on [lo, hi). Requires lo <= hi.
  double uniform(double lo, double hi);

  // exp(uniform(log lo, log hi)); requires 0 < lo <= hi.
  double log_uniform(double lo, double hi);

  // Standard normal via Box-Muller (one value per call, no cached spare).
  double normal();

  // Uniform integer on [0, bound); bound must be positive.
  std::uint64_t uniform_int(std::uint64_t bound);

  // Fisher-Yates; identical ordering for identical stream ids.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace codial
