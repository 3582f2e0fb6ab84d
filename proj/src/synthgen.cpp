// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/synthgen.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lineocr/error.hpp"
#include "lineocr/utf8.hpp"

namespace lineocr {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---- atlas -----------------------------------------------------------------

void GlyphAtlas::validate() const {
  const auto& m = metrics;
  if (m.x_height <= 0) throw Error(ErrorCode::MetricInvariantViolation, "x_height must be positive");
  if (m.ascent < m.x_height) {
    throw Error(ErrorCode::MetricInvariantViolation, "ascent must be at least x_height");
  }
  if (m.descent < 0) throw Error(ErrorCode::MetricInvariantViolation, "descent must be non-negative");
  for (const auto& [c, g] : glyphs) {
    if (g.advance <= 0) {
      throw Error(ErrorCode::MetricInvariantViolation,
                  "glyph '" + utf8::encode(c) + "' has non-positive advance");
    }
  }
}

namespace {

std::string glyph_file_name(char32_t c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u%04X.pgm", static_cast<unsigned>(c));
  return buf;
}

}  // namespace

GlyphAtlas load_glyph_atlas(const fs::path& dir) {
  const fs::path manifest = dir / "atlas.json";
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::ManifestParseError, "missing atlas manifest " + manifest.string());
  GlyphAtlas atlas;
  atlas.name = dir.filename().string();
  try {
    const auto j = ordered_json::parse(in);
    atlas.metrics.ascent = j.at("ascent").get<int>();
    atlas.metrics.descent = j.at("descent").get<int>();
    atlas.metrics.x_height = j.at("x_height").get<int>();
    if (j.contains("name")) atlas.name = j.at("name").get<std::string>();
    for (const auto& g : j.at("glyphs")) {
      const std::u32string ch = utf8::decode(g.at("char").get<std::string>());
      if (ch.size() != 1) throw Error(ErrorCode::ManifestParseError, "glyph char must be one symbol");
      GlyphBitmap bmp;
      bmp.advance = g.at("advance").get<int>();
      bmp.bearing_x = g.at("bearing_x").get<int>();
      bmp.bearing_y = g.at("bearing_y").get<int>();
      const std::string file = g.at("file").get<std::string>();
      if (!file.empty()) {
        try {
          bmp.pixels = read_pgm(dir / file);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::BitmapFormatError) throw;
          throw Error(ErrorCode::BitmapFormatError, "cannot read glyph bitmap " + file);
        }
      }
      if (!atlas.glyphs.emplace(ch[0], std::move(bmp)).second) {
        throw Error(ErrorCode::ManifestParseError, "duplicate glyph '" + utf8::encode(ch) + "'");
      }
    }
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::ManifestParseError, std::string("atlas manifest: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) {
      throw Error(ErrorCode::ManifestParseError, std::string("atlas manifest: ") + e.what());
    }
    throw;
  }
  atlas.validate();
  return atlas;
}

void write_glyph_atlas(const GlyphAtlas& atlas, const fs::path& dir) {
  atlas.validate();
  fs::create_directories(dir);
  ordered_json j;
  j["name"] = atlas.name;
  j["ascent"] = atlas.metrics.ascent;
  j["descent"] = atlas.metrics.descent;
  j["x_height"] = atlas.metrics.x_height;
  j["glyphs"] = ordered_json::array();
  for (const auto& [c, g] : atlas.glyphs) {
    std::string file;
    if (!g.pixels.empty()) {
      file = glyph_file_name(c);
      write_pgm(dir / file, g.pixels);
    }
    j["glyphs"].push_back({{"char", utf8::encode(c)},
                           {"file", file},
                           {"advance", g.advance},
                           {"bearing_x", g.bearing_x},
                           {"bearing_y", g.bearing_y}});
  }
  std::ofstream out(dir / "atlas.json");
  out << j.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "cannot write atlas manifest in " + dir.string());
}

// ---- counter ---------------------------------------------------------------

CharCounter::CharCounter(const Charset& charset, std::int64_t target_min)
    : charset_(charset), target_min_(target_min), counts_(charset.symbols().size(), 0) {
  if (target_min <= 0) throw Error(ErrorCode::InvalidConfig, "target_min must be positive");
}

void CharCounter::add(std::u32string_view text) {
  for (char32_t c : text) ++counts_[static_cast<std::size_t>(charset_.label(c) - 1)];
}

std::int64_t CharCounter::count(char32_t c) const {
  return counts_[static_cast<std::size_t>(charset_.label(c) - 1)];
}

bool CharCounter::satisfied() const { return min_count() >= target_min_; }

std::int64_t CharCounter::min_count() const { return *std::min_element(counts_.begin(), counts_.end()); }

std::int64_t CharCounter::max_count() const { return *std::max_element(counts_.begin(), counts_.end()); }

double CharCounter::median() const {
  std::vector<std::int64_t> v = counts_;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? static_cast<double>(v[n / 2]) : 0.5 * static_cast<double>(v[n / 2 - 1] + v[n / 2]);
}

std::vector<bool> CharCounter::rare_mask() const {
  const double med = median();
  std::vector<bool> mask(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    mask[i] = counts_[i] < target_min_ && static_cast<double>(counts_[i]) < med;
  }
  return mask;
}

// ---- corpus ----------------------------------------------------------------

namespace {

bool is_space(char32_t c) { return c == U' ' || c == U'\t'; }

}  // namespace

Corpus::Corpus(std::string name, std::u32string text, const Charset& charset, int max_len)
    : name_(std::move(name)), text_(std::move(text)), max_len_(max_len) {
  if (max_len < 1) throw Error(ErrorCode::InvalidConfig, "max_len must be at least 1");
  words_ = (charset.symbols().size() + 63) / 64;
  const std::size_t n = text_.size();
  const auto limit = static_cast<std::size_t>(max_len);
  std::size_t i = 0;
  while (i < n) {
    if (!charset.contains(text_[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < n && charset.contains(text_[end])) ++end;
    // [i, end) is a representable run; trim edge whitespace.
    std::size_t a = i, b = end;
    while (a < b && is_space(text_[a])) ++a;
    while (b > a && is_space(text_[b - 1])) --b;
    std::size_t w = a;
    while (w < b) {
      std::size_t word_end = w;
      while (word_end < b && !is_space(text_[word_end])) ++word_end;
      if (word_end - w > limit) {
        for (std::size_t o = w; o + limit <= word_end; ++o) pieces_.push_back({o, limit});
      } else {
        // Longest whitespace-bounded extension within the limit.
        std::size_t best = word_end, e = word_end;
        while (e < b) {
          std::size_t next = e;
          while (next < b && is_space(text_[next])) ++next;
          std::size_t next_end = next;
          while (next_end < b && !is_space(text_[next_end])) ++next_end;
          if (next_end - w > limit) break;
          best = e = next_end;
        }
        pieces_.push_back({w, best - w});
      }
      w = word_end;
      while (w < b && is_space(text_[w])) ++w;
    }
    i = end;
  }
  masks_.assign(pieces_.size() * words_, 0);
  for (std::size_t p = 0; p < pieces_.size(); ++p) {
    for (std::size_t k = 0; k < pieces_[p].length; ++k) {
      const auto bit = static_cast<std::size_t>(charset.label(text_[pieces_[p].offset + k]) - 1);
      masks_[p * words_ + bit / 64] |= std::uint64_t{1} << (bit % 64);
    }
  }
}

Corpus Corpus::from_utf8(std::string name, std::string_view text, const Charset& charset,
                         int max_len) {
  return Corpus(std::move(name), utf8::decode(text), charset, max_len);
}

Corpus Corpus::load(const fs::path& path, const Charset& charset, int max_len) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open corpus " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_utf8(path.filename().string(), ss.str(), charset, max_len);
}

std::u32string_view Corpus::piece(std::size_t i) const {
  return std::u32string_view(text_).substr(pieces_[i].offset, pieces_[i].length);
}

bool Corpus::contains_any(std::size_t i, const std::vector<bool>& mask) const {
  for (std::size_t bit = 0; bit < mask.size(); ++bit) {
    if (mask[bit] && (masks_[i * words_ + bit / 64] >> (bit % 64) & 1u)) return true;
  }
  return false;
}

PieceChoice sample_text(const Corpus& corpus, const CharCounter& counter, Rng& rng,
                        const std::vector<bool>* used, double fallback_prob) {
  const std::size_t n = corpus.size();
  auto available = [&](std::size_t i) { return !used || !(*used)[i]; };
  std::size_t free_count = 0;
  for (std::size_t i = 0; i < n; ++i) free_count += available(i) ? 1 : 0;
  if (free_count == 0) {
    throw Error(ErrorCode::CorpusExhausted, "corpus '" + corpus.name() + "' has no usable piece");
  }
  const auto start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
  auto pick = [&](std::size_t i) { return PieceChoice{std::u32string(corpus.piece(i)), i}; };
  const std::vector<bool> rare = counter.rare_mask();
  if (std::find(rare.begin(), rare.end(), true) != rare.end()) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (start + k) % n;
      if (available(i) && corpus.contains_any(i, rare)) return pick(i);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = (start + k) % n;
    if (available(i) && rng.bernoulli(fallback_prob)) return pick(i);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = (start + k) % n;
    if (available(i)) return pick(i);
  }
  throw Error(ErrorCode::CorpusExhausted, "corpus '" + corpus.name() + "' has no usable piece");
}

// ---- rendering -------------------------------------------------------------

TextLineSample render_line(std::u32string_view text, const GlyphAtlas& atlas) {
  const LineMetrics& m = atlas.metrics;
  std::vector<const GlyphBitmap*> glyphs;
  glyphs.reserve(text.size());
  int pen = 0, width = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto it = atlas.glyphs.find(text[i]);
    if (it == atlas.glyphs.end()) {
      throw Error(ErrorCode::MissingGlyph, "no glyph for '" + utf8::encode(text[i]) + "'", i);
    }
    glyphs.push_back(&it->second);
    width = std::max(width, pen + it->second.bearing_x + it->second.pixels.width);
    pen += it->second.advance;
  }
  width = std::max({width, pen, 1});
  TextLineSample s;
  s.image = GrayImage(width, m.ascent + m.descent);
  pen = 0;
  for (const GlyphBitmap* g : glyphs) {
    const int ox = pen + g->bearing_x, oy = m.ascent - g->bearing_y;
    for (int y = 0; y < g->pixels.height; ++y) {
      const int ty = oy + y;
      if (ty < 0 || ty >= s.image.height) continue;
      for (int x = 0; x < g->pixels.width; ++x) {
        const int tx = ox + x;
        if (tx < 0 || tx >= width) continue;
        auto& dst = s.image.at(tx, ty);
        dst = std::min(dst, g->pixels.at(x, y));
      }
    }
    pen += g->advance;
  }
  s.transcript = utf8::encode(text);
  s.baseline = {static_cast<double>(m.ascent), static_cast<double>(m.ascent)};
  s.x_height = m.x_height;
  int lo = width, hi = -1;
  for (int y = 0; y < s.image.height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (s.image.at(x, y) < 255) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
  }
  s.bbox = hi < 0 ? BBox{0, 0, width, s.image.height} : BBox{lo, 0, hi - lo + 1, s.image.height};
  return s;
}

TextLineSample render_line(std::u32string_view text, std::span<const GlyphAtlas> atlases, Rng& rng) {
  if (atlases.empty()) throw Error(ErrorCode::InvalidConfig, "no glyph atlas configured");
  const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(atlases.size()) - 1));
  return render_line(text, atlases[k]);
}

// ---- dataset generation ----------------------------------------------------

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Coverage: return "coverage";
    case Termination::CorpusExhausted: return "corpus_exhausted";
    case Termination::LineCap: return "line_cap";
  }
  return "unknown";
}

std::string GenerationReport::to_json() const {
  ordered_json j;
  j["lines"] = lines;
  j["characters"] = characters;
  j["termination"] = to_string(termination);
  j["min_count"] = min_count;
  j["max_count"] = max_count;
  ordered_json c = ordered_json::object();
  for (const auto& [ch, n] : counts) c[utf8::encode(ch)] = n;
  j["counts"] = c;
  return j.dump(1);
}

DatasetWriter::DatasetWriter(const fs::path& dir) : dir_(dir) {
  std::error_code ec;
  fs::create_directories(dir_ / "lines", ec);
  if (ec) throw Error(ErrorCode::SinkWriteError, "cannot create " + (dir_ / "lines").string());
}

void DatasetWriter::write(const TextLineSample& sample) {
  char name[32];
  std::snprintf(name, sizeof name, "lines/%08lld.pgm", static_cast<long long>(next_id_));
  try {
    write_pgm(dir_ / name, sample.image);
  } catch (const Error& e) {
    throw Error(ErrorCode::SinkWriteError, e.what());
  }
  ordered_json j;
  j["id"] = next_id_;
  j["file"] = name;
  j["transcript"] = sample.transcript;
  j["baseline_y_left"] = sample.baseline.y_left;
  j["baseline_y_right"] = sample.baseline.y_right;
  j["x_height"] = sample.x_height;
  j["bbox"] = {sample.bbox.x, sample.bbox.y, sample.bbox.w, sample.bbox.h};
  manifest_ += j.dump();
  manifest_ += '\n';
  ++next_id_;
}

void DatasetWriter::finish(const GenerationReport& report) {
  std::ofstream m(dir_ / "manifest.jsonl", std::ios::binary | std::ios::trunc);
  m << manifest_;
  std::ofstream r(dir_ / "report.json", std::ios::binary | std::ios::trunc);
  r << report.to_json() << '\n';
  if (!m || !r) throw Error(ErrorCode::SinkWriteError, "cannot write manifest in " + dir_.string());
}

GenerationReport generate_dataset(std::span<const Corpus> corpora,
                                  std::span<const GlyphAtlas> atlases, CharCounter& counter,
                                  DatasetWriter& sink, std::uint64_t seed,
                                  const GenerationOptions& options) {
  if (corpora.empty()) throw Error(ErrorCode::InvalidConfig, "no corpus configured");
  if (atlases.empty()) throw Error(ErrorCode::InvalidConfig, "no glyph atlas configured");
  for (const auto& atlas : atlases) {
    for (char32_t c : counter.charset().symbols()) {
      if (!atlas.has(c)) {
        throw Error(ErrorCode::MissingGlyph,
                    "atlas '" + atlas.name + "' lacks glyph '" + utf8::encode(c) + "'");
      }
    }
  }
  Rng rng(seed, "generation");
  std::vector<std::vector<bool>> used;
  std::vector<std::size_t> remaining;
  for (const auto& c : corpora) {
    used.emplace_back(c.size(), false);
    remaining.push_back(c.size());
  }
  GenerationReport report;
  while (true) {
    if (counter.satisfied()) {
      report.termination = Termination::Coverage;
      break;
    }
    if (options.max_lines > 0 && report.lines >= options.max_lines) {
      report.termination = Termination::LineCap;
      break;
    }
    std::vector<std::size_t> open;
    for (std::size_t k = 0; k < corpora.size(); ++k) {
      if (remaining[k] > 0) open.push_back(k);
    }
    if (open.empty()) {
      report.termination = Termination::CorpusExhausted;
      break;
    }
    const std::size_t k = open[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(open.size()) - 1))];
    const PieceChoice piece = sample_text(corpora[k], counter, rng, &used[k], options.fallback_prob);
    used[k][piece.index] = true;
    --remaining[k];
    const TextLineSample sample = render_line(piece.text, atlases, rng);
    counter.add(piece.text);
    sink.write(sample);
    ++report.lines;
    report.characters += static_cast<std::int64_t>(piece.text.size());
  }
  for (char32_t c : counter.charset().symbols()) report.counts.emplace_back(c, counter.count(c));
  report.min_count = counter.min_count();
  report.max_count = counter.max_count();
  sink.finish(report);
  return report;
}

std::vector<DatasetEntry> load_dataset(const fs::path& dir) {
  std::ifstream in(dir / "manifest.jsonl");
  if (!in) throw Error(ErrorCode::ManifestParseError, "missing manifest in " + dir.string());
  std::vector<DatasetEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    DatasetEntry e;
    try {
      const auto j = ordered_json::parse(line);
      e.id = j.at("id").get<std::int64_t>();
      e.file = j.at("file").get<std::string>();
      e.sample.transcript = j.at("transcript").get<std::string>();
      e.sample.baseline = {j.at("baseline_y_left").get<double>(), j.at("baseline_y_right").get<double>()};
      e.sample.x_height = j.at("x_height").get<double>();
      const auto& b = j.at("bbox");
      e.sample.bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
    } catch (const ordered_json::exception& ex) {
      throw Error(ErrorCode::ManifestParseError, std::string("manifest: ") + ex.what(), line_no);
    }
    e.sample.image = read_pgm(dir / e.file);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace lineocr
