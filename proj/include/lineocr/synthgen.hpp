// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lineocr/charset.hpp"
#include "lineocr/image.hpp"
#include "lineocr/rng.hpp"

namespace lineocr {

struct GlyphBitmap {
  GrayImage pixels;  // may be empty (space)
  int advance = 0;
  int bearing_x = 0;
  int bearing_y = 0;  // top edge of the bitmap above the baseline
};

struct LineMetrics {
  int ascent = 0;
  int descent = 0;
  int x_height = 0;
};

struct GlyphAtlas {
  std::string name;
  LineMetrics metrics;
  std::map<char32_t, GlyphBitmap> glyphs;

  /// Throws MetricInvariantViolation.
  void validate() const;
  bool has(char32_t c) const { return glyphs.contains(c); }
};

/// Reads `atlas.json` plus the per-glyph PGM files it names.
GlyphAtlas load_glyph_atlas(const std::filesystem::path& dir);
void write_glyph_atlas(const GlyphAtlas& atlas, const std::filesystem::path& dir);

struct Baseline {
  double y_left = 0.0;
  double y_right = 0.0;
};

struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

struct TextLineSample {
  GrayImage image;
  std::string transcript;  // UTF-8
  Baseline baseline;
  double x_height = 0.0;
  BBox bbox;
};

/// Per-symbol occurrence counts over one charset.
class CharCounter {
 public:
  CharCounter(const Charset& charset, std::int64_t target_min);

  void add(std::u32string_view text);
  std::int64_t count(char32_t c) const;
  std::int64_t target_min() const { return target_min_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  const Charset& charset() const { return charset_; }
  bool satisfied() const;
  std::int64_t min_count() const;
  std::int64_t max_count() const;
  double median() const;
  /// Labels that are below target and strictly below the median.
  std::vector<bool> rare_mask() const;

 private:
  Charset charset_;
  std::int64_t target_min_;
  std::vector<std::int64_t> counts_;  // index = label - 1
};

/// Plain-text source cut into candidate pieces. A piece is a verbatim
/// substring of a maximal charset-representable run, starting at a word
/// start and extended to the longest whitespace-bounded length that fits;
/// words longer than the limit contribute hard-cut windows at every offset.
class Corpus {
 public:
  Corpus(std::string name, std::u32string text, const Charset& charset, int max_len);
  static Corpus from_utf8(std::string name, std::string_view text, const Charset& charset,
                          int max_len);
  static Corpus load(const std::filesystem::path& path, const Charset& charset, int max_len);

  const std::string& name() const { return name_; }
  int max_len() const { return max_len_; }
  std::size_t size() const { return pieces_.size(); }
  std::u32string_view piece(std::size_t i) const;
  /// True when piece i contains a label flagged in `mask`.
  bool contains_any(std::size_t i, const std::vector<bool>& mask) const;

 private:
  struct Piece {
    std::size_t offset;
    std::size_t length;
  };
  std::string name_;
  std::u32string text_;
  int max_len_;
  std::vector<Piece> pieces_;
  std::size_t words_ = 1;
  std::vector<std::uint64_t> masks_;  // words_ per piece
};

struct PieceChoice {
  std::u32string text;
  std::size_t index = 0;
};

/// Rarity-guided choice of a corpus piece. A first cycle from a random start
/// returns the first piece containing a rare symbol (see CharCounter::rare_mask);
/// a second cycle accepts each piece with probability `fallback_prob`, and the
/// starting piece is taken if that also fails. `used` pieces are skipped.
/// Throws CorpusExhausted when no piece is available.
PieceChoice sample_text(const Corpus& corpus, const CharCounter& counter, Rng& rng,
                        const std::vector<bool>* used = nullptr, double fallback_prob = 0.1);

/// Composes glyphs left to right on a baseline at y = ascent. Throws MissingGlyph.
TextLineSample render_line(std::u32string_view text, const GlyphAtlas& atlas);
/// Renders with an atlas drawn uniformly from `atlases`.
TextLineSample render_line(std::u32string_view text, std::span<const GlyphAtlas> atlases, Rng& rng);

enum class Termination { Coverage, CorpusExhausted, LineCap };
std::string to_string(Termination t);

struct GenerationOptions {
  std::int64_t max_lines = 0;  // 0: unlimited
  double fallback_prob = 0.1;
};

struct GenerationReport {
  std::int64_t lines = 0;
  std::int64_t characters = 0;
  Termination termination = Termination::Coverage;
  std::vector<std::pair<char32_t, std::int64_t>> counts;
  std::int64_t min_count = 0;
  std::int64_t max_count = 0;

  std::string to_json() const;
};

class DatasetWriter {
 public:
  /// Creates `dir/lines`; an existing manifest is replaced.
  explicit DatasetWriter(const std::filesystem::path& dir);
  void write(const TextLineSample& sample);
  void finish(const GenerationReport& report);
  std::int64_t written() const { return next_id_; }

 private:
  std::filesystem::path dir_;
  std::string manifest_;
  std::int64_t next_id_ = 0;
};

/// Samples and renders lines until every symbol reaches the counter's target,
/// all corpora run out of unused pieces, or the line cap is hit. Pieces are
/// drawn without replacement within one run.
GenerationReport generate_dataset(std::span<const Corpus> corpora,
                                  std::span<const GlyphAtlas> atlases, CharCounter& counter,
                                  DatasetWriter& sink, std::uint64_t seed,
                                  const GenerationOptions& options = {});

struct DatasetEntry {
  std::int64_t id = 0;
  std::string file;
  TextLineSample sample;
};

/// Reads `manifest.jsonl` and the referenced images.
std::vector<DatasetEntry> load_dataset(const std::filesystem::path& dir);

}  // namespace lineocr
