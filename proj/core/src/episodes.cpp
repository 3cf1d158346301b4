#include "espn/episodes.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

#include "espn/error.hpp"
#include "espn/image.hpp"
#include "json.hpp"

namespace espn {
namespace fs = std::filesystem;

namespace {

template <typename T>
void put_le(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host assumed");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

// Partial Fisher-Yates: the first `k` entries of the result are a uniform
// k-subset of [0, n) in random order.
std::vector<std::size_t> choose(std::size_t n, std::size_t k, CounterRng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

std::vector<fs::path> character_dirs(const fs::path& raw_dir) {
  if (!fs::is_directory(raw_dir)) {
    throw DatasetIntegrityError("raw dataset directory not found: " + raw_dir.string());
  }
  std::map<fs::path, bool> dirs;
  for (const auto& entry : fs::recursive_directory_iterator(raw_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      dirs[entry.path().parent_path()] = true;
    }
  }
  std::vector<fs::path> out;
  out.reserve(dirs.size());
  for (const auto& [dir, _] : dirs) out.push_back(dir);
  return out;  // std::map keeps them sorted
}

std::vector<fs::path> pngs_in(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

std::string_view split_name(Split s) noexcept {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val" || name == "validation") return Split::validation;
  if (name == "test") return Split::test;
  throw ConfigError("unknown split '" + std::string(name) + "' (train|val|test)");
}

ClassTable::ClassTable(Split split, std::vector<ClassEntry> classes, std::size_t side)
    : split_(split), classes_(std::move(classes)), side_(side) {}

void ClassTable::load_image(std::size_t cls, std::size_t image, std::span<float> out) const {
  const ClassEntry& e = classes_.at(cls);
  const std::size_t n = side_ * side_;
  if (image >= e.image_count || out.size() != n) {
    throw CapacityError("image " + std::to_string(image) + " out of range for class " +
                        std::to_string(e.id));
  }
  if (e.pixels) {
    std::copy_n(e.pixels->begin() + image * n, n, out.begin());
    return;
  }
  std::ifstream is(e.file, std::ios::binary);
  is.seekg(static_cast<std::streamoff>(kClassHeaderBytes + image * n * sizeof(float)));
  if (!is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n * sizeof(float)))) {
    throw FormatError("short read from class file " + e.file.string());
  }
}

const ClassTable& Dataset::table(Split s) const noexcept {
  switch (s) {
    case Split::train: return train;
    case Split::validation: return validation;
    case Split::test: return test;
  }
  return train;
}

void write_class_file(const fs::path& path, std::uint32_t class_id, std::size_t image_count,
                      std::size_t side, std::span<const float> pixels) {
  if (pixels.size() != image_count * side * side) {
    throw ShapeError("class-file", "pixel buffer does not match image count and size");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot write " + path.string());
  put_le<std::uint32_t>(os, class_id);
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(image_count));
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(side));
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(side));
  os.write(reinterpret_cast<const char*>(pixels.data()),
           static_cast<std::streamsize>(pixels.size_bytes()));
  if (!os) throw FormatError("write failed: " + path.string());
}

ClassFileHeader read_class_header(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  unsigned char buf[kClassHeaderBytes];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof buf)) {
    throw FormatError("truncated class file " + path.string());
  }
  return {get_le<std::uint32_t>(buf), get_le<std::uint16_t>(buf + 4),
          get_le<std::uint16_t>(buf + 6), get_le<std::uint16_t>(buf + 8)};
}

std::vector<float> read_class_file(const fs::path& path) {
  const ClassFileHeader h = read_class_header(path);
  const std::size_t n = std::size_t{h.image_count} * h.height * h.width;
  std::vector<float> pixels(n);
  std::ifstream is(path, std::ios::binary);
  is.seekg(kClassHeaderBytes);
  if (!is.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(n * 4))) {
    throw FormatError("truncated class file " + path.string());
  }
  return pixels;
}

std::vector<float> preprocess_image(const fs::path& png, int quarter_turns) {
  GrayImage img = read_png_gray(png);
  invert_inplace(img);
  img = rotate90(resize_bilinear(img, kImageSide, kImageSide), quarter_turns);
  for (float& v : img.pixels) v = std::clamp(v, 0.0f, 1.0f);
  return std::move(img.pixels);
}

Dataset prepare_dataset(const fs::path& raw_dir, const fs::path& out_dir, std::uint64_t seed,
                        const PrepareOptions& options) {
  const std::vector<fs::path> chars = character_dirs(raw_dir);
  if (chars.size() != options.expected_characters) {
    throw DatasetIntegrityError("found " + std::to_string(chars.size()) +
                                " character directories under " + raw_dir.string() +
                                ", expected " + std::to_string(options.expected_characters));
  }
  const std::size_t total_classes = chars.size() * kRotations;
  if (options.split_sizes.total() != total_classes) {
    throw DatasetIntegrityError("split sizes sum to " +
                                std::to_string(options.split_sizes.total()) + " but there are " +
                                std::to_string(total_classes) + " classes");
  }

  const std::size_t plane = kImageSide * kImageSide;
  // rotated[c][r] holds the 20 images of class c*4 + r.
  std::vector<std::array<std::vector<float>, kRotations>> rotated(chars.size());
  std::vector<std::string> bad;
  for (std::size_t c = 0; c < chars.size(); ++c) {
    const auto files = pngs_in(chars[c]);
    if (files.size() != kImagesPerClass) {
      throw DatasetIntegrityError(chars[c].string() + " holds " + std::to_string(files.size()) +
                                  " images, expected " + std::to_string(kImagesPerClass));
    }
    for (auto& r : rotated[c]) r.resize(kImagesPerClass * plane);
    for (std::size_t k = 0; k < files.size(); ++k) {
      GrayImage img;
      try {
        img = read_png_gray(files[k]);
      } catch (const FormatError&) {
        bad.push_back(files[k].string());
        continue;
      }
      invert_inplace(img);
      const GrayImage small = resize_bilinear(img, kImageSide, kImageSide);
      for (std::size_t r = 0; r < kRotations; ++r) {
        GrayImage rot = rotate90(small, static_cast<int>(r));
        for (float& v : rot.pixels) v = std::clamp(v, 0.0f, 1.0f);
        std::copy(rot.pixels.begin(), rot.pixels.end(), rotated[c][r].begin() + k * plane);
      }
    }
  }
  if (!bad.empty()) throw IngestionError(std::move(bad));

  std::vector<std::uint32_t> order(total_classes);
  std::iota(order.begin(), order.end(), 0u);
  CounterRng rng(derive_seed(seed, "dataset.split"));
  for (std::size_t i = total_classes; i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
  }

  const SplitSizes& sz = options.split_sizes;
  const std::array<std::pair<Split, std::span<std::uint32_t>>, 3> parts{{
      {Split::train, std::span(order).subspan(0, sz.train)},
      {Split::validation, std::span(order).subspan(sz.train, sz.validation)},
      {Split::test, std::span(order).subspan(sz.train + sz.validation, sz.test)},
  }};

  nlohmann::json manifest;
  manifest["format"] = 1;
  manifest["seed"] = seed;
  manifest["side"] = kImageSide;
  manifest["images_per_class"] = kImagesPerClass;
  manifest["source"] = fs::absolute(raw_dir).string();
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t c = 0; c < chars.size(); ++c) {
    for (std::size_t r = 0; r < kRotations; ++r) {
      classes.push_back({{"id", c * kRotations + r},
                         {"character", fs::relative(chars[c], raw_dir).generic_string()},
                         {"rotation", r * 90}});
    }
  }
  manifest["classes"] = std::move(classes);

  Dataset ds;
  for (const auto& [split, ids_view] : parts) {
    std::vector<std::uint32_t> ids(ids_view.begin(), ids_view.end());
    std::sort(ids.begin(), ids.end());
    const fs::path dir = out_dir / split_name(split);
    fs::create_directories(dir);
    std::vector<ClassEntry> entries;
    entries.reserve(ids.size());
    for (const std::uint32_t id : ids) {
      const fs::path file = dir / (std::to_string(id) + ".bin");
      write_class_file(file, id, kImagesPerClass, kImageSide,
                       rotated[id / kRotations][id % kRotations]);
      entries.push_back({id, file, nullptr, kImagesPerClass});
    }
    manifest["splits"][std::string(split_name(split))] = ids;
    const ClassTable table(split, std::move(entries));
    switch (split) {
      case Split::train: ds.train = table; break;
      case Split::validation: ds.validation = table; break;
      case Split::test: ds.test = table; break;
    }
  }
  std::ofstream(out_dir / "manifest.json") << manifest.dump(1) << '\n';
  return ds;
}

Dataset load_dataset(const fs::path& cache_dir) {
  const fs::path mpath = cache_dir / "manifest.json";
  std::ifstream is(mpath);
  if (!is) throw DatasetIntegrityError("no manifest.json in " + cache_dir.string());
  nlohmann::json manifest;
  try {
    is >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(mpath.string() + ": " + e.what());
  }
  const std::size_t side = manifest.value("side", kImageSide);
  Dataset ds;
  for (const Split split : {Split::train, Split::validation, Split::test}) {
    const std::string name(split_name(split));
    if (!manifest.contains("splits") || !manifest["splits"].contains(name)) {
      throw DatasetIntegrityError(mpath.string() + " has no '" + name + "' split");
    }
    std::vector<ClassEntry> entries;
    for (const std::uint32_t id : manifest["splits"][name].get<std::vector<std::uint32_t>>()) {
      const fs::path file = cache_dir / name / (std::to_string(id) + ".bin");
      const ClassFileHeader h = read_class_header(file);
      if (h.class_id != id || h.height != side || h.width != side) {
        throw DatasetIntegrityError(file.string() + ": header does not match manifest");
      }
      entries.push_back({id, file, nullptr, h.image_count});
    }
    ClassTable table(split, std::move(entries), side);
    switch (split) {
      case Split::train: ds.train = std::move(table); break;
      case Split::validation: ds.validation = std::move(table); break;
      case Split::test: ds.test = std::move(table); break;
    }
  }
  return ds;
}

Episode sample_episode(const ClassTable& table, std::size_t way, std::size_t shot,
                       std::size_t query_count, CounterRng& rng) {
  if (way == 0 || shot == 0) throw CapacityError("way and shot must be positive");
  if (table.size() < way) {
    throw CapacityError(std::to_string(way) + "-way episode needs " + std::to_string(way) +
                        " classes, table has " + std::to_string(table.size()));
  }
  const std::size_t per_class = shot + query_count;
  const std::size_t side = table.side();
  const std::size_t plane = side * side;

  Episode ep;
  ep.way = way;
  ep.shot = shot;
  ep.query_count = query_count;
  ep.support = Tensor4({way * shot, 1, side, side});
  ep.query = Tensor4({way * query_count, 1, side, side});
  ep.support_labels.reserve(way * shot);
  ep.query_labels.reserve(way * query_count);

  const std::vector<std::size_t> picked = choose(table.size(), way, rng);
  std::vector<std::pair<std::size_t, std::size_t>> query_sources;
  for (std::size_t label = 0; label < way; ++label) {
    const std::size_t cls = picked[label];
    const std::size_t available = table.at(cls).image_count;
    if (per_class > available) {
      throw CapacityError("shot + query = " + std::to_string(per_class) + " exceeds the " +
                          std::to_string(available) + " images of class " +
                          std::to_string(table.at(cls).id));
    }
    ep.class_ids.push_back(table.at(cls).id);
    const std::vector<std::size_t> images = choose(available, per_class, rng);
    for (std::size_t k = 0; k < per_class; ++k) {
      if (k < shot) {
        const std::size_t row = label * shot + k;
        table.load_image(cls, images[k], ep.support.item(row).subspan(0, plane));
        ep.support_labels.push_back(static_cast<int>(label));
        ep.sources.emplace_back(cls, images[k]);
      } else {
        const std::size_t row = label * query_count + (k - shot);
        table.load_image(cls, images[k], ep.query.item(row).subspan(0, plane));
        ep.query_labels.push_back(static_cast<int>(label));
        query_sources.emplace_back(cls, images[k]);
      }
    }
  }
  ep.sources.insert(ep.sources.end(), query_sources.begin(), query_sources.end());
  return ep;
}

}  // namespace espn
