#include "espn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "espn/error.hpp"

namespace espn {
namespace {

template <typename T>
T to_le(T v) noexcept {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <typename T>
void put(std::ostream& os, T v) {
  v = to_le(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw FormatError(path.string() + ": truncated checkpoint header");
  }
  return to_le(v);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const EmbeddingNet& net,
                     const ParamVector& params) {
  if (params.size() != net.param_count()) {
    throw ParamSizeError("checkpoint: parameter count does not match network");
  }
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + tmp.string() + " for writing");
    os.write(kCheckpointMagic, 4);
    put<std::uint32_t>(os, kCheckpointVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(net.channels));
    put<std::uint64_t>(os, params.size());
    for (const float v : params.values()) put<std::uint32_t>(os, std::bit_cast<std::uint32_t>(v));
    if (!os) throw FormatError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw FormatError(path.string() + ": bad magic, not an ESPN checkpoint");
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " +
                      std::to_string(version));
  }
  const auto channels = get<std::uint32_t>(is, path);
  const auto dim = get<std::uint64_t>(is, path);

  EmbeddingNet net;
  net.channels = channels;
  if (channels == 0 || net.param_count() != dim) {
    throw FormatError(path.string() + ": D=" + std::to_string(dim) +
                      " inconsistent with channels=" + std::to_string(channels));
  }
  std::vector<float> values(dim);
  for (auto& v : values) v = std::bit_cast<float>(get<std::uint32_t>(is, path));
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path.string() + ": trailing bytes after parameters");
  }
  return {channels, make_params(net).with_values(std::move(values))};
}

}  // namespace espn
