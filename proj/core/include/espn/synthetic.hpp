#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "espn/episodes.hpp"
#include "espn/image.hpp"

namespace espn::synthetic {

/// Procedural stand-in for Omniglot: every character is a few random
/// strokes; each of its "drawers" jitters the strokes. Used where no real
/// dataset is available (tests, smoke runs).
struct GlyphSpec {
  std::uint64_t seed = 0;
  std::size_t character = 0;
};

/// Renders drawer `drawer` of a character, ink = 0 on white = 1 (raw
/// Omniglot convention), `side` x `side`.
GrayImage render_glyph(const GlyphSpec& glyph, std::size_t drawer, std::size_t side);

/// Writes `characters` characters as <root>/<alphabet>/<characterNN>/<k>.png
/// using the raw Omniglot directory shape (105x105 images).
void write_raw_tree(const std::filesystem::path& root, std::size_t characters,
                    std::uint64_t seed, std::size_t per_alphabet = 40,
                    std::size_t images_per_class = kImagesPerClass);

/// In-memory class table: `classes` characters rendered directly at 32x32,
/// ink = 1. No rotation augmentation.
ClassTable make_table(Split split, std::size_t classes, std::uint64_t seed,
                      std::uint32_t first_id = 0);

}  // namespace espn::synthetic
