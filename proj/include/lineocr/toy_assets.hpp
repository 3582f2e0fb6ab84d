// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lineocr/charset.hpp"
#include "lineocr/image.hpp"
#include "lineocr/synthgen.hpp"

namespace lineocr::toy {

/// Space plus the eleven letters "adehilnorst".
inline constexpr char kSymbols[] = " adehilnorst";

Charset charset();

enum class FontStyle { Plain, SlantedSerif };

/// Procedural stroke font with ascent 24, descent 8 and x-height 16. The two
/// styles differ in stroke weight, width, slant and serifs.
GlyphAtlas stroke_atlas(FontStyle style);

/// Procedural grayscale textures (noise, gratings, blotches, fibres). Banks
/// built with different `split` names share no image.
std::vector<GrayImage> textures(const std::string& split, int count, std::uint64_t seed,
                                int width = 256, int height = 48);

/// Words spelled only with the toy alphabet.
const std::vector<std::string>& words();

/// Space-separated word stream with Zipf-like word frequencies.
std::string corpus_text(std::uint64_t seed, int word_count);

/// Writes charset.txt, atlases/{plain,serif}, textures/{train,test} and
/// corpus/{train,heldout}.txt under `dir`.
/// charset.txt, atlases/{plain,serif}, textures/{train,test},
/// corpus/{train,val,test}.txt and a run config.json referencing them.
void write_assets(const std::filesystem::path& dir, std::uint64_t seed);

/// Run config for the toy assets, paths relative to the asset directory.
std::string run_config(std::uint64_t seed, std::int64_t iterations);

}  // namespace lineocr::toy
