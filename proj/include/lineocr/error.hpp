// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lineocr {

enum class ErrorCode {
  // charset
  EmptyCharset,
  DuplicateSymbol,
  UnknownSymbol,
  InvalidLabel,
  // synthgen
  CorpusExhausted,
  MissingGlyph,
  ManifestParseError,
  BitmapFormatError,
  MetricInvariantViolation,
  SinkWriteError,
  // augment
  DimensionMismatch,
  UnknownScenario,
  InvalidConfig,
  // linepipe
  DegenerateGeometry,
  SampleTooNarrow,
  // nncore / ctc
  ShapeMismatch,
  InfeasibleLabel,
  CapExceeded,
  // models
  SpecInvalid,
  ChecksumMismatch,
  VersionMismatch,
  CorruptCheckpoint,
  // generic
  IoError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Exception type used across the library. `index()` carries a character
/// position or a sample index when the error refers to one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace lineocr
