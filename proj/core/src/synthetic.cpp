#include "espn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "espn/rng.hpp"

namespace espn::synthetic {
namespace fs = std::filesystem;

namespace {

struct Point {
  double x, y;
};

struct Stroke {
  Point p0, p1, p2;  // quadratic Bezier
};

std::vector<Stroke> character_strokes(const GlyphSpec& glyph) {
  CounterRng rng(derive_seed(glyph.seed, "synthetic.glyph", glyph.character));
  const std::size_t count = 2 + static_cast<std::size_t>(rng.below(3));
  const auto coord = [&] { return 0.2 + 0.6 * rng.uniform(); };
  std::vector<Stroke> strokes(count);
  for (auto& s : strokes) {
    s.p0 = {coord(), coord()};
    s.p1 = {coord(), coord()};
    s.p2 = {coord(), coord()};
  }
  return strokes;
}

}  // namespace

GrayImage render_glyph(const GlyphSpec& glyph, std::size_t drawer, std::size_t side) {
  std::vector<Stroke> strokes = character_strokes(glyph);
  CounterRng rng(derive_seed(glyph.seed, "synthetic.drawer", glyph.character, drawer));
  // Per-drawer affine distortion about the centre, then per-point jitter.
  const double angle = 0.35 * rng.normal();
  const double scale = 1.0 + 0.12 * rng.normal();
  const double shear = 0.2 * rng.normal();
  const Point shift{0.05 * rng.normal(), 0.05 * rng.normal()};
  const double ca = std::cos(angle), sa = std::sin(angle);
  const auto distort = [&](Point& p) {
    const double x = p.x - 0.5 + shear * (p.y - 0.5), y = p.y - 0.5;
    p.x = 0.5 + scale * (ca * x - sa * y) + shift.x + 0.05 * rng.normal();
    p.y = 0.5 + scale * (sa * x + ca * y) + shift.y + 0.05 * rng.normal();
  };
  for (auto& s : strokes) {
    distort(s.p0);
    distort(s.p1);
    distort(s.p2);
  }
  const double radius = side * (0.04 + 0.01 * rng.uniform());

  GrayImage img{side, side, std::vector<float>(side * side, 1.0f)};
  const std::size_t samples = 4 * side;
  const long r = static_cast<long>(std::ceil(radius));
  for (const auto& s : strokes) {
    for (std::size_t i = 0; i <= samples; ++i) {
      const double t = static_cast<double>(i) / samples;
      const double a = (1 - t) * (1 - t), b = 2 * (1 - t) * t, c = t * t;
      const double cx = (a * s.p0.x + b * s.p1.x + c * s.p2.x) * side;
      const double cy = (a * s.p0.y + b * s.p1.y + c * s.p2.y) * side;
      const long ix = std::lround(cx), iy = std::lround(cy);
      for (long y = iy - r; y <= iy + r; ++y) {
        if (y < 0 || y >= static_cast<long>(side)) continue;
        for (long x = ix - r; x <= ix + r; ++x) {
          if (x < 0 || x >= static_cast<long>(side)) continue;
          const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
          if (dx * dx + dy * dy <= radius * radius) img.pixels[y * side + x] = 0.0f;
        }
      }
    }
  }
  return img;
}

void write_raw_tree(const fs::path& root, std::size_t characters, std::uint64_t seed,
                    std::size_t per_alphabet, std::size_t images_per_class) {
  for (std::size_t c = 0; c < characters; ++c) {
    char alphabet[64], character[64];
    std::snprintf(alphabet, sizeof alphabet, "Alphabet_%03zu", c / per_alphabet);
    std::snprintf(character, sizeof character, "character%02zu", c % per_alphabet + 1);
    const fs::path dir = root / alphabet / character;
    fs::create_directories(dir);
    for (std::size_t k = 0; k < images_per_class; ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "%04zu_%02zu.png", c + 1, k + 1);
      write_png_gray(dir / name, render_glyph({seed, c}, k, 105));
    }
  }
}

ClassTable make_table(Split split, std::size_t classes, std::uint64_t seed,
                      std::uint32_t first_id) {
  const std::size_t plane = kImageSide * kImageSide;
  std::vector<ClassEntry> entries;
  entries.reserve(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    auto pixels = std::make_shared<std::vector<float>>(kImagesPerClass * plane);
    for (std::size_t k = 0; k < kImagesPerClass; ++k) {
      GrayImage img = render_glyph({seed, first_id + c}, k, kImageSide);
      invert_inplace(img);
      std::copy(img.pixels.begin(), img.pixels.end(), pixels->begin() + k * plane);
    }
    entries.push_back({static_cast<std::uint32_t>(first_id + c), {}, std::move(pixels),
                       kImagesPerClass});
  }
  return ClassTable(split, std::move(entries));
}

}  // namespace espn::synthetic
