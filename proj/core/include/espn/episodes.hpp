#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "espn/rng.hpp"
#include "espn/tensor.hpp"

namespace espn {

enum class Split { train, validation, test };

std::string_view split_name(Split s) noexcept;
Split parse_split(std::string_view name);

inline constexpr std::size_t kOmniglotCharacters = 1623;
inline constexpr std::size_t kImagesPerClass = 20;
inline constexpr std::size_t kImageSide = 32;
inline constexpr std::size_t kRotations = 4;

struct SplitSizes {
  std::size_t train = 4804;
  std::size_t validation = 1012;
  std::size_t test = 676;

  std::size_t total() const noexcept { return train + validation + test; }
};

/// One class: 20 images, either resident or read on demand from the cache.
struct ClassEntry {
  std::uint32_t id = 0;
  std::filesystem::path file;  // empty for in-memory classes
  std::shared_ptr<const std::vector<float>> pixels;  // count * side * side
  std::size_t image_count = kImagesPerClass;
};

/// Immutable after construction; safe to share across threads.
class ClassTable {
 public:
  ClassTable() = default;
  ClassTable(Split split, std::vector<ClassEntry> classes, std::size_t side = kImageSide);

  Split split() const noexcept { return split_; }
  std::size_t size() const noexcept { return classes_.size(); }
  std::size_t side() const noexcept { return side_; }
  const ClassEntry& at(std::size_t i) const { return classes_.at(i); }
  const std::vector<ClassEntry>& classes() const noexcept { return classes_; }

  /// Copies image `image` of class slot `cls` into `out` (side*side floats).
  void load_image(std::size_t cls, std::size_t image, std::span<float> out) const;

 private:
  Split split_ = Split::train;
  std::vector<ClassEntry> classes_;
  std::size_t side_ = kImageSide;
};

struct Dataset {
  ClassTable train;
  ClassTable validation;
  ClassTable test;

  const ClassTable& table(Split s) const noexcept;
};

struct PrepareOptions {
  std::size_t expected_characters = kOmniglotCharacters;
  SplitSizes split_sizes{};
};

/// Raw tree -> cache. Every directory holding PNGs is one character; each
/// character becomes four classes (0/90/180/270 degrees), images are
/// inverted (ink = 1), resized to 32x32 and the classes shuffled into
/// train/validation/test by `seed`. Writes `<out>/<split>/<class-id>.bin`
/// and `<out>/manifest.json`.
Dataset prepare_dataset(const std::filesystem::path& raw_dir,
                        const std::filesystem::path& out_dir, std::uint64_t seed,
                        const PrepareOptions& options = {});

/// Opens a cache written by prepare_dataset.
Dataset load_dataset(const std::filesystem::path& cache_dir);

/// Image processing applied to one raw image (invert, resize, rotate).
std::vector<float> preprocess_image(const std::filesystem::path& png, int quarter_turns);

/// Cache file: class-id u32, image count u16, H u16, W u16, then f32 pixels.
void write_class_file(const std::filesystem::path& path, std::uint32_t class_id,
                      std::size_t image_count, std::size_t side,
                      std::span<const float> pixels);

struct ClassFileHeader {
  std::uint32_t class_id = 0;
  std::uint16_t image_count = 0;
  std::uint16_t height = 0;
  std::uint16_t width = 0;
};
inline constexpr std::size_t kClassHeaderBytes = 10;

ClassFileHeader read_class_header(const std::filesystem::path& path);
std::vector<float> read_class_file(const std::filesystem::path& path);

/// One N-way K-shot task.
struct Episode {
  std::size_t way = 0;
  std::size_t shot = 0;
  std::size_t query_count = 0;
  Tensor4 support;  // (way*shot, 1, side, side), grouped by label
  Tensor4 query;    // (way*query_count, 1, side, side)
  std::vector<int> support_labels;
  std::vector<int> query_labels;
  std::vector<std::uint32_t> class_ids;  // label -> class id
  // (class slot, image index) of every support then query row.
  std::vector<std::pair<std::size_t, std::size_t>> sources;
};

/// Draws `way` classes without replacement, then shot+query distinct images
/// per class; first `shot` go to support. Deterministic in `rng`.
Episode sample_episode(const ClassTable& table, std::size_t way, std::size_t shot,
                       std::size_t query_count, CounterRng& rng);

}  // namespace espn
