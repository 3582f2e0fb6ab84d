// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/toy_assets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "json.hpp"
#include "lineocr/rng.hpp"

namespace lineocr::toy {

namespace fs = std::filesystem;

Charset charset() { return Charset::build_utf8(kSymbols); }

namespace {

struct Point {
  double x;
  double y;
};
using Polyline = std::vector<Point>;

// Coordinates in x-height units, y up from the baseline.
Polyline arc(double cx, double cy, double rx, double ry, double deg0, double deg1, int steps = 24) {
  Polyline p;
  for (int i = 0; i <= steps; ++i) {
    const double a = (deg0 + (deg1 - deg0) * i / steps) * std::numbers::pi / 180.0;
    p.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return p;
}

Polyline line(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y1}}; }

struct Outline {
  double width;
  std::vector<Polyline> strokes;
};

Outline outline(char c) {
  constexpr double asc = 1.42;
  switch (c) {
    case 'a': {
      Polyline bowl{{0.56, 0.5}, {0.28, 0.5}};
      const Polyline lower = arc(0.29, 0.25, 0.26, 0.25, 90, 330);
      bowl.insert(bowl.end(), lower.begin(), lower.end());
      return {0.62, {arc(0.31, 0.7, 0.24, 0.28, 165, 0), line(0.56, 0.7, 0.56, 0.0), bowl}};
    }
    case 'd': return {0.66, {arc(0.3, 0.5, 0.29, 0.5, 0, 360, 32), line(0.6, 0.0, 0.6, asc)}};
    case 'e': return {0.64, {line(0.03, 0.5, 0.62, 0.5), arc(0.32, 0.5, 0.3, 0.5, 0, 315, 32)}};
    case 'h':
      return {0.62, {line(0.04, 0.0, 0.04, asc), arc(0.31, 0.58, 0.27, 0.4, 180, 0),
                     line(0.58, 0.58, 0.58, 0.0)}};
    case 'i': return {0.18, {line(0.09, 0.0, 0.09, 1.0), line(0.09, 1.28, 0.09, 1.36)}};
    case 'l': return {0.18, {line(0.09, 0.0, 0.09, asc)}};
    case 'n':
      return {0.62, {line(0.04, 0.0, 0.04, 1.0), arc(0.31, 0.58, 0.27, 0.4, 180, 0),
                     line(0.58, 0.58, 0.58, 0.0)}};
    case 'o': return {0.66, {arc(0.33, 0.5, 0.31, 0.5, 0, 360, 32)}};
    case 'r': return {0.44, {line(0.04, 0.0, 0.04, 1.0), arc(0.38, 0.55, 0.34, 0.42, 180, 55)}};
    case 's': {
      Polyline s = arc(0.27, 0.74, 0.22, 0.24, 20, 270);
      const Polyline lower = arc(0.27, 0.26, 0.24, 0.26, 90, -160);
      s.insert(s.end(), lower.begin(), lower.end());
      return {0.54, {s}};
    }
    case 't': {
      Polyline stem{{0.18, 1.3}, {0.18, 0.18}};
      const Polyline hook = arc(0.36, 0.18, 0.18, 0.18, 180, 300, 8);
      stem.insert(stem.end(), hook.begin(), hook.end());
      return {0.48, {stem, line(0.0, 1.0, 0.44, 1.0)}};
    }
    default: return {0.45, {}};
  }
}

double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y;
  return std::sqrt(ex * ex + ey * ey);
}

struct StyleParams {
  double x_scale;
  double half_width;
  double slant;
  bool serifs;
  int spacing;
};

StyleParams style_params(FontStyle style) {
  if (style == FontStyle::Plain) return {0.78, 0.9, 0.0, false, 1};
  return {0.95, 1.4, 0.25, true, 2};
}

// Horizontal feet on the ends of vertical stems.
void add_serifs(std::vector<Polyline>& strokes) {
  std::vector<Polyline> extra;
  for (const auto& s : strokes) {
    if (s.size() != 2 || std::abs(s[0].x - s[1].x) > 1e-9) continue;
    for (const Point& p : s) {
      if (p.y <= 0.0 || p.y >= 1.0) extra.push_back(line(p.x - 0.13, p.y, p.x + 0.13, p.y));
    }
  }
  strokes.insert(strokes.end(), extra.begin(), extra.end());
}

}  // namespace

GlyphAtlas stroke_atlas(FontStyle style) {
  const StyleParams sp = style_params(style);
  GlyphAtlas atlas;
  atlas.name = style == FontStyle::Plain ? "plain" : "serif";
  atlas.metrics = {24, 8, 16};
  const double xh = atlas.metrics.x_height;
  const int height = atlas.metrics.ascent + atlas.metrics.descent;
  for (char c : std::string(kSymbols)) {
    Outline o = outline(c);
    if (sp.serifs) add_serifs(o.strokes);
    GlyphBitmap g;
    const int body = static_cast<int>(std::lround(o.width * xh * sp.x_scale));
    g.advance = body + static_cast<int>(std::ceil(2 * sp.half_width)) + sp.spacing;
    if (o.strokes.empty()) {
      atlas.glyphs.emplace(static_cast<char32_t>(c), std::move(g));
      continue;
    }
    const int pad = static_cast<int>(std::ceil(sp.half_width)) + 1;
    const int slant_px = static_cast<int>(std::ceil(sp.slant * 1.5 * xh));
    g.bearing_x = 0;
    g.bearing_y = atlas.metrics.ascent;
    g.pixels = GrayImage(body + 2 * pad + slant_px, height);
    // Pixel-space polylines.
    std::vector<Polyline> strokes;
    for (const auto& s : o.strokes) {
      Polyline ps;
      for (const Point& p : s) {
        ps.push_back({pad + p.x * xh * sp.x_scale + sp.slant * p.y * xh,
                      atlas.metrics.ascent - p.y * xh});
      }
      strokes.push_back(std::move(ps));
    }
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < g.pixels.width; ++x) {
        const Point centre{x + 0.5, y + 0.5};
        double d = 1e9;
        for (const auto& s : strokes) {
          for (std::size_t k = 0; k + 1 < s.size(); ++k) d = std::min(d, segment_distance(centre, s[k], s[k + 1]));
          if (s.size() == 1) d = std::min(d, segment_distance(centre, s[0], s[0]));
        }
        const double ink = std::clamp(sp.half_width + 0.5 - d, 0.0, 1.0);
        g.pixels.at(x, y) = clamp_to_u8(255.0 * (1.0 - ink));
      }
    }
    atlas.glyphs.emplace(static_cast<char32_t>(c), std::move(g));
  }
  return atlas;
}

namespace {

// Bilinear value noise on a coarse lattice.
double value_noise(const std::vector<double>& lattice, int lw, int lh, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  auto at = [&](int i, int j) {
    i = ((i % lw) + lw) % lw;
    j = ((j % lh) + lh) % lh;
    return lattice[static_cast<std::size_t>(j) * lw + i];
  };
  const double sx = fx * fx * (3 - 2 * fx), sy = fy * fy * (3 - 2 * fy);
  const double top = at(x0, y0) * (1 - sx) + at(x0 + 1, y0) * sx;
  const double bottom = at(x0, y0 + 1) * (1 - sx) + at(x0 + 1, y0 + 1) * sx;
  return top * (1 - sy) + bottom * sy;
}

GrayImage make_texture(Rng& rng, int width, int height) {
  FloatImage f(width, height, 0.0f);
  const int family = static_cast<int>(rng.uniform_int(0, 3));
  if (family == 0) {
    // multi-octave noise
    double amp = 1.0;
    double cell = rng.uniform(12.0, 40.0);
    for (int octave = 0; octave < 4; ++octave) {
      const int lw = static_cast<int>(std::ceil(width / cell)) + 2;
      const int lh = static_cast<int>(std::ceil(height / cell)) + 2;
      std::vector<double> lattice(static_cast<std::size_t>(lw) * lh);
      for (auto& v : lattice) v = rng.uniform(-1.0, 1.0);
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) f.at(x, y) += static_cast<float>(amp * value_noise(lattice, lw, lh, x / cell, y / cell));
      }
      amp *= 0.5;
      cell = std::max(2.0, cell / 2.0);
    }
  } else if (family == 1) {
    // gratings
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double period = rng.uniform(4.0, 24.0);
    const double phase = rng.uniform(0.0, 2 * std::numbers::pi);
    const double c = std::cos(angle), s = std::sin(angle);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        f.at(x, y) = static_cast<float>(std::sin(2 * std::numbers::pi * (c * x + s * y) / period + phase) +
                                        0.3 * rng.uniform(-1.0, 1.0));
      }
    }
  } else if (family == 2) {
    // blotches
    const int blobs = static_cast<int>(rng.uniform_int(6, 20));
    for (int b = 0; b < blobs; ++b) {
      const double cx = rng.uniform(0, width), cy = rng.uniform(0, height);
      const double r = rng.uniform(4.0, 20.0), sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const double d2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (r * r);
          f.at(x, y) += static_cast<float>(sign * std::exp(-d2));
        }
      }
    }
  } else {
    // fibres: random short strokes over grain
    for (auto& v : f.values) v = static_cast<float>(0.25 * rng.uniform(-1.0, 1.0));
    const int fibres = static_cast<int>(rng.uniform_int(20, 60));
    for (int k = 0; k < fibres; ++k) {
      double x = rng.uniform(0, width), y = rng.uniform(0, height);
      const double a = rng.uniform(0, 2 * std::numbers::pi);
      const int len = static_cast<int>(rng.uniform_int(8, 40));
      const float v = static_cast<float>(rng.uniform(-1.0, 1.0));
      for (int t = 0; t < len; ++t) {
        const int xi = static_cast<int>(x), yi = static_cast<int>(y);
        if (xi >= 0 && xi < width && yi >= 0 && yi < height) f.at(xi, yi) += v;
        x += std::cos(a);
        y += std::sin(a);
      }
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(f.values.begin(), f.values.end());
  const double lo = *lo_it, span = std::max(1e-9, static_cast<double>(*hi_it) - lo);
  const double contrast = rng.uniform(40.0, 140.0);
  const double base = rng.uniform(90.0 + contrast / 2, 250.0 - contrast / 2);
  GrayImage img(width, height);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const double t = (f.values[i] - lo) / span - 0.5;
    img.pixels[i] = clamp_to_u8(base + contrast * t);
  }
  return img;
}

}  // namespace

std::vector<GrayImage> textures(const std::string& split, int count, std::uint64_t seed, int width,
                                int height) {
  std::vector<GrayImage> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(seed, "texture." + split, static_cast<std::uint64_t>(i));
    out.push_back(make_texture(rng, width, height));
  }
  return out;
}

const std::vector<std::string>& words() {
  static const std::vector<std::string> list = {
      "a", "ad", "add", "ado", "aid", "ail", "air", "aisle", "alert", "alias", "also", "alter",
      "and", "are", "area", "arid", "art", "as", "aside", "aster", "at", "dare", "darn", "dart",
      "date", "dead", "deal", "dealt", "dear", "delta", "den", "dent", "desert", "detail", "diet",
      "dine", "dinner", "dirt", "dish", "do", "doe", "doll", "done", "door", "dose", "dot",
      "drain", "dress", "drill", "ear", "earth", "east", "eat", "edit", "else", "end", "era",
      "hail", "hair", "hall", "halt", "hand", "hard", "hare", "has", "hat", "hate", "head", "heal",
      "hear", "heard", "heart", "heat", "held", "hen", "her", "herd", "here", "hero", "hid",
      "hide", "hill", "hint", "his", "hit", "hold", "hole", "horse", "host", "hot", "hotel", "i",
      "idea", "ideal", "idle", "in", "inert", "inside", "into", "iron", "island", "it", "its",
      "lad", "laid", "lain", "land", "lane", "last", "late", "later", "lead", "lean", "learn",
      "least", "led", "lend", "lens", "less", "let", "liar", "lid", "lie", "line", "linen", "lion",
      "list", "listen", "load", "loan", "lord", "lose", "loss", "lost", "lot", "nail", "near",
      "neat", "need", "nest", "net", "nod", "noise", "none", "nor", "north", "nose", "not", "note",
      "oar", "oil", "old", "on", "one", "or", "order", "other", "rail", "rain", "raise", "rat",
      "rate", "read", "real", "red", "rest", "rid", "ride", "riot", "rise", "road", "roast", "rod",
      "role", "roll", "rose", "rot", "said", "sail", "salt", "sand", "sat", "sea", "seal", "seat",
      "see", "seed", "send", "sent", "set", "shade", "she", "shed", "shield", "shine", "shirt",
      "shore", "short", "shot", "side", "silent", "sir", "sit", "site", "slate", "sled", "slide",
      "slit", "slot", "snail", "snore", "so", "sold", "sole", "solid", "son", "sore", "sort",
      "stain", "stair", "stand", "star", "start", "state", "steal", "steel", "stern", "still",
      "stone", "store", "strand", "street", "tail", "tale", "tall", "tan", "tea", "tear", "tend",
      "tennis", "tent", "than", "that", "the", "their", "then", "there", "these", "thin", "this",
      "those", "thread", "three", "tide", "tie", "tin", "tire", "to", "toad", "toe", "toil",
      "told", "tone", "too", "tool", "toss", "total", "trade", "trail", "train", "trash", "tree",
      "trend", "trial", "tried", "trio", "trot"};
  return list;
}

std::string corpus_text(std::uint64_t seed, int word_count) {
  const auto& list = words();
  Rng rng(seed, "corpus");
  // Random rank order, Zipf-like weights 1 / (rank + 2).
  std::vector<std::size_t> order(list.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }
  std::vector<double> cumulative(list.size());
  double total = 0.0;
  for (std::size_t r = 0; r < list.size(); ++r) cumulative[r] = (total += 1.0 / (r + 2.0));
  std::string text;
  for (int w = 0; w < word_count; ++w) {
    const double u = rng.uniform() * total;
    const auto r = static_cast<std::size_t>(std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    if (!text.empty()) text += (w % 12 == 0) ? '\n' : ' ';
    text += list[order[std::min(r, list.size() - 1)]];
  }
  text += '\n';
  return text;
}

void write_assets(const fs::path& dir, std::uint64_t seed) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "charset.txt", std::ios::binary);
    out << charset().to_file_text();
  }
  write_glyph_atlas(stroke_atlas(FontStyle::Plain), dir / "atlases" / "plain");
  write_glyph_atlas(stroke_atlas(FontStyle::SlantedSerif), dir / "atlases" / "serif");
  for (const char* split : {"train", "test"}) {
    const auto bank = textures(split, std::string(split) == "train" ? 40 : 20, seed);
    const fs::path tdir = dir / "textures" / split;
    fs::create_directories(tdir);
    for (std::size_t i = 0; i < bank.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "%s_%03zu.pgm", split, i);
      write_pgm(tdir / name, bank[i]);
    }
  }
  fs::create_directories(dir / "corpus");
  std::ofstream(dir / "corpus" / "train.txt", std::ios::binary) << corpus_text(derive_seed(seed, "corpus.train"), 60000);
  std::ofstream(dir / "corpus" / "val.txt", std::ios::binary) << corpus_text(derive_seed(seed, "corpus.val"), 10000);
  std::ofstream(dir / "corpus" / "test.txt", std::ios::binary) << corpus_text(derive_seed(seed, "corpus.test"), 10000);
  std::ofstream(dir / "config.json", std::ios::binary) << run_config(seed, 4000);
}

std::string run_config(std::uint64_t seed, std::int64_t iterations) {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["charset"] = "charset.txt";
  j["atlases"] = {"atlases/plain", "atlases/serif"};
  j["textures"] = {{"train", "textures/train"}, {"test", "textures/test"}};
  j["max_len"] = 12;
  auto ds = [](const char* name, const char* corpus, int min_count) {
    return nlohmann::ordered_json{{"name", name},
                                  {"corpora", {std::string("corpus/") + corpus}},
                                  {"min_count", min_count},
                                  {"out", std::string("data/") + name}};
  };
  j["datasets"] = {ds("train", "train.txt", 500), ds("val", "val.txt", 100), ds("test", "test.txt", 100)};
  j["model"] = {{"kind", "hybrid"}};
  j["train"] = {{"train_set", "data/train"},   {"val_set", "data/val"},
                {"iterations", iterations},    {"batch_size", 16},
                {"checkpoint_every", 1000},    {"validate_every", 1000},
                {"augment", "type3"},          {"val_scenario", "type3"},
                {"val_repeats", 1},            {"out_dir", "runs/train"}};
  j["eval"] = {{"test_set", "data/test"},
               {"scenarios", {"type1", "type3"}},
               {"repeats", 30},
               {"batch_size", 16},
               {"out_dir", "runs/eval"}};
  j["bench"] = {{"dataset", "data/test"},
                {"scenarios", {"type1"}},
                {"batch_size", 4},
                {"trials", 10},
                {"out_dir", "runs/bench"}};
  return j.dump(2) + "\n";
}

}  // namespace lineocr::toy
