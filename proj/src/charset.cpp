// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/charset.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include "lineocr/error.hpp"
#include "lineocr/utf8.hpp"

namespace lineocr {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Charset Charset::build(std::u32string_view symbols) {
  if (symbols.empty()) throw Error(ErrorCode::EmptyCharset, "charset has no symbols");
  Charset cs;
  cs.symbols_.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const char32_t c = symbols[i];
    if (!cs.index_.emplace(c, static_cast<Label>(i + 1)).second) {
      throw Error(ErrorCode::DuplicateSymbol,
                  "symbol '" + utf8::encode(c) + "' appears more than once", i);
    }
    cs.symbols_.push_back(c);
  }
  return cs;
}

Charset Charset::build_utf8(std::string_view symbols) { return build(utf8::decode(symbols)); }

Charset Charset::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open charset file " + path.string());
  const std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::u32string text = utf8::decode(raw);
  std::u32string symbols;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char32_t c = text[i];
    if (c == U'\n' || c == U'\r') continue;
    if (c == U'\\' && i + 1 < text.size()) {
      if (text[i + 1] == U'n') {
        symbols.push_back(U'\n');
        ++i;
        continue;
      }
      if (text[i + 1] == U'\\') {
        symbols.push_back(U'\\');
        ++i;
        continue;
      }
    }
    symbols.push_back(c);
  }
  return build(symbols);
}

Label Charset::label(char32_t c) const {
  const auto it = index_.find(c);
  if (it == index_.end()) {
    throw Error(ErrorCode::UnknownSymbol, "symbol '" + utf8::encode(c) + "' not in charset");
  }
  return it->second;
}

char32_t Charset::symbol(Label label) const {
  if (label < 1 || label >= num_classes()) {
    throw Error(ErrorCode::InvalidLabel, "label " + std::to_string(label) + " out of range");
  }
  return symbols_[static_cast<std::size_t>(label - 1)];
}

LabelSeq Charset::encode(std::u32string_view text) const {
  LabelSeq out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto it = index_.find(text[i]);
    if (it == index_.end()) {
      throw Error(ErrorCode::UnknownSymbol,
                  "symbol '" + utf8::encode(text[i]) + "' at position " + std::to_string(i) +
                      " not in charset",
                  i);
    }
    out.push_back(it->second);
  }
  return out;
}

LabelSeq Charset::encode_utf8(std::string_view text) const { return encode(utf8::decode(text)); }

std::u32string Charset::decode(std::span<const Label> labels) const {
  std::u32string out;
  out.reserve(labels.size());
  for (Label l : labels) out.push_back(symbol(l));
  return out;
}

std::string Charset::decode_utf8(std::span<const Label> labels) const {
  return utf8::encode(decode(labels));
}

std::string Charset::fingerprint() const {
  const std::string bytes = utf8::encode(symbols_);
  const std::uint64_t h = fnv1a64(
      {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string Charset::to_file_text() const {
  std::string out;
  for (char32_t c : symbols_) {
    if (c == U'\n') {
      out += "\\n";
    } else if (c == U'\\') {
      out += "\\\\";
    } else {
      out += utf8::encode(c);
    }
  }
  out += '\n';
  return out;
}

}  // namespace lineocr
