// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lineocr/charset.hpp"

namespace lineocr::testkit {

struct OracleResult {
  int cases = 0;
  int mismatches = 0;
  double worst_abs_error = 0.0;
  std::string first_mismatch;
};

/// Random T <= 8, L <= 4, K <= 5 instances: exp(-loss) against the
/// brute-force path sum.
OracleResult ctc_oracle_suite(int cases, std::uint64_t seed);

/// Decoding of random argmax paths against a run-length based reference.
OracleResult greedy_oracle_suite(int cases, std::uint64_t seed);

/// Plain exponential recursion over the three edit operations.
int edit_distance_recursive(const std::u32string& a, const std::u32string& b);

/// Every string over `alphabet` up to `max_len`, shortest first.
std::vector<std::u32string> enumerate_strings(std::u32string_view alphabet, int max_len);

/// All pairs from enumerate_strings against the same three-way recursion,
/// memoized over suffix pairs; also checks every edit script replays.
OracleResult levenshtein_exhaustive_suite(std::u32string_view alphabet, int max_len);

/// Symmetry, identity and the triangle inequality on random pairs/triples.
OracleResult levenshtein_axiom_suite(int cases, std::uint64_t seed);

}  // namespace lineocr::testkit
