// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lineocr {

/// Derives an independent seed for a named substream of a master seed.
/// Every source of randomness in the pipeline is keyed this way, so changing
/// one axis (say augmentation) never perturbs another (say weight init).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index = 0);

/// Seeded random source. The engine is mt19937_64; the conversions to
/// real/integer/normal variates are implemented here rather than via the
/// <random> distributions, whose outputs are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, std::string_view stream, std::uint64_t index = 0)
      : engine_(derive_seed(master, stream, index)) {}

  std::uint64_t next_u64() { return engine_(); }
  // [0, 1)
  double uniform();
  // [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // inclusive range [lo, hi]
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();
  bool bernoulli(double p) { return p > 0.0 && uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lineocr
