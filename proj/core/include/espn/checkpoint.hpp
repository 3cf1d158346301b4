#pragma once

#include <cstdint>
#include <filesystem>

#include "espn/nncore.hpp"
#include "espn/params.hpp"

namespace espn {

inline constexpr char kCheckpointMagic[4] = {'E', 'S', 'P', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t channels = 0;
  ParamVector params;
};

/// Layout: "ESPN", version u32, channels u32, D u64, then D f32. All
/// little-endian.
void save_checkpoint(const std::filesystem::path& path, const EmbeddingNet& net,
                     const ParamVector& params);

/// Reads a checkpoint and rebuilds the registry for its channel count.
/// Throws FormatError on bad magic/version/length.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace espn
