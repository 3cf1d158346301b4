#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace espn {

/// Grayscale image with values in [0, 1], row-major.
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;
};

/// Decodes any PNG colour type/bit depth to grayscale in [0, 1].
/// Throws FormatError if the file is unreadable or not a PNG.
GrayImage read_png_gray(const std::filesystem::path& path);

/// Writes 8-bit grayscale.
void write_png_gray(const std::filesystem::path& path, const GrayImage& image);

/// Bilinear resample with pixel-centre alignment.
GrayImage resize_bilinear(const GrayImage& src, std::size_t height, std::size_t width);

/// Quarter-turn counter-clockwise, `turns` times. Exact for any square image.
GrayImage rotate90(const GrayImage& src, int turns);

/// 1 - v for every pixel (Omniglot stores ink as black on white).
void invert_inplace(GrayImage& image) noexcept;

}  // namespace espn
