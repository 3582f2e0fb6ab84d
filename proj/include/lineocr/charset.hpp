// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lineocr {

using Label = int;
using LabelSeq = std::vector<Label>;

/// Symbol inventory of the recognizer. Label 0 is the CTC blank; symbol i
/// (in construction order) maps to label i + 1. Immutable once built.
class Charset {
 public:
  static constexpr Label kBlank = 0;

  /// Throws EmptyCharset or DuplicateSymbol.
  static Charset build(std::u32string_view symbols);
  static Charset build_utf8(std::string_view symbols);
  /// Reads a UTF-8 charset file. Newlines are ignored; a literal "\n" escape
  /// adds a newline symbol and "\\" a backslash.
  static Charset load(const std::filesystem::path& path);

  const std::u32string& symbols() const { return symbols_; }
  int num_classes() const { return static_cast<int>(symbols_.size()) + 1; }
  Label blank_index() const { return kBlank; }
  bool contains(char32_t c) const { return index_.contains(c); }
  /// Throws UnknownSymbol when c is not a member.
  Label label(char32_t c) const;
  char32_t symbol(Label label) const;

  LabelSeq encode(std::u32string_view text) const;
  LabelSeq encode_utf8(std::string_view text) const;
  std::u32string decode(std::span<const Label> labels) const;
  std::string decode_utf8(std::span<const Label> labels) const;

  /// Content hash of the symbol list (hex), stored in checkpoints.
  std::string fingerprint() const;

  /// Serialized form accepted by `load` (escapes newline and backslash).
  std::string to_file_text() const;

 private:
  std::u32string symbols_;
  std::unordered_map<char32_t, Label> index_;
};

/// 64-bit FNV-1a over raw bytes; shared by fingerprints and checksums.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t seed = 0xCBF29CE484222325ULL);

}  // namespace lineocr
