#include "espn/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "espn/error.hpp"

namespace espn {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

GrayImage read_png_gray(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw FormatError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + ": not a PNG file");
  }

  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn,
                                           png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("libpng initialisation failed");
  }

  GrayImage img;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": " + (err.empty() ? "corrupt PNG" : err));
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_strip_16(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);

  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * img.height);
  rows.resize(img.height);
  for (std::size_t y = 0; y < img.height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (rowbytes != img.width) {
    throw FormatError(path.string() + ": unexpected channel layout after conversion");
  }
  img.pixels.resize(img.width * img.height);
  std::transform(buffer.begin(), buffer.end(), img.pixels.begin(),
                 [](png_byte b) { return static_cast<float>(b) / 255.0f; });
  return img;
}

void write_png_gray(const std::filesystem::path& path, const GrayImage& image) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw FormatError("cannot open " + path.string() + " for writing");

  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn,
                                            png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng initialisation failed");
  }
  std::vector<png_byte> buffer(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), buffer.begin(), [](float v) {
    return static_cast<png_byte>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  });
  std::vector<png_bytep> rows(image.height);
  for (std::size_t y = 0; y < image.height; ++y) rows[y] = buffer.data() + y * image.width;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError(path.string() + ": " + err);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

GrayImage resize_bilinear(const GrayImage& src, std::size_t height, std::size_t width) {
  GrayImage dst{height, width, std::vector<float>(height * width)};
  const double sy = static_cast<double>(src.height) / height;
  const double sx = static_cast<double>(src.width) / width;
  const auto clampi = [](long v, long hi) { return std::clamp(v, 0L, hi); };
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const long y0 = static_cast<long>(fy);
    const long y1 = clampi(y0 + 1, static_cast<long>(src.height) - 1);
    const double wy = fy - y0;
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const long x0 = static_cast<long>(fx);
      const long x1 = clampi(x0 + 1, static_cast<long>(src.width) - 1);
      const double wx = fx - x0;
      const auto px = [&](long yy, long xx) {
        return static_cast<double>(src.pixels[yy * src.width + xx]);
      };
      const double top = px(y0, x0) * (1 - wx) + px(y0, x1) * wx;
      const double bot = px(y1, x0) * (1 - wx) + px(y1, x1) * wx;
      dst.pixels[y * width + x] = static_cast<float>(top * (1 - wy) + bot * wy);
    }
  }
  return dst;
}

GrayImage rotate90(const GrayImage& src, int turns) {
  turns = ((turns % 4) + 4) % 4;
  GrayImage cur = src;
  for (int t = 0; t < turns; ++t) {
    GrayImage next{cur.width, cur.height, std::vector<float>(cur.pixels.size())};
    // Counter-clockwise: new(y, x) = old(x, W-1-y).
    for (std::size_t y = 0; y < next.height; ++y) {
      for (std::size_t x = 0; x < next.width; ++x) {
        next.pixels[y * next.width + x] = cur.pixels[x * cur.width + (cur.width - 1 - y)];
      }
    }
    cur = std::move(next);
  }
  return cur;
}

void invert_inplace(GrayImage& image) noexcept {
  for (float& v : image.pixels) v = 1.0f - v;
}

}  // namespace espn
