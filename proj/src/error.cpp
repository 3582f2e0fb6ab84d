// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/error.hpp"

namespace lineocr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCharset: return "EmptyCharset";
    case ErrorCode::DuplicateSymbol: return "DuplicateSymbol";
    case ErrorCode::UnknownSymbol: return "UnknownSymbol";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::CorpusExhausted: return "CorpusExhausted";
    case ErrorCode::MissingGlyph: return "MissingGlyph";
    case ErrorCode::ManifestParseError: return "ManifestParseError";
    case ErrorCode::BitmapFormatError: return "BitmapFormatError";
    case ErrorCode::MetricInvariantViolation: return "MetricInvariantViolation";
    case ErrorCode::SinkWriteError: return "SinkWriteError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::SampleTooNarrow: return "SampleTooNarrow";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InfeasibleLabel: return "InfeasibleLabel";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace lineocr
