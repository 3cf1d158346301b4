#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "espn/params.hpp"
#include "espn/tensor.hpp"

namespace espn {

inline constexpr float kBatchNormEps = 1e-5f;

/// Four identical blocks of 3x3 conv (same padding, no bias), batch norm
/// with per-batch statistics, ReLU and 2x2 max-pool.
struct EmbeddingNet {
  static constexpr std::size_t kBlocks = 4;

  std::size_t channels = 64;
  std::size_t input_size = 32;
  std::size_t input_channels = 1;

  /// Spatial side length entering block `b` (0-based); kBlocks gives the output.
  std::size_t spatial_at(std::size_t block) const noexcept { return input_size >> block; }
  std::size_t block_in_channels(std::size_t block) const noexcept {
    return block == 0 ? input_channels : channels;
  }
  /// D_c: flattened length of the final activation.
  std::size_t embedding_dim() const noexcept {
    const std::size_t s = spatial_at(kBlocks);
    return channels * s * s;
  }
  /// Closed form: block1 (9*Cin*C + 2C) + 3 * (9*C*C + 2C).
  std::size_t param_count() const noexcept;

  /// Throws ShapeError if input_size does not survive four halvings.
  void validate() const;

  static std::string conv_name(std::size_t block);
  static std::string gain_name(std::size_t block);
  static std::string bias_name(std::size_t block);
};

struct BlockParams {
  std::span<const float> conv;  // (out, in, 3, 3)
  std::span<const float> gain;  // (out)
  std::span<const float> bias;  // (out)
  std::size_t out_channels = 0;
};

/// Zero-initialized parameter vector with the registry for `net`.
ParamVector make_params(const EmbeddingNet& net);

/// Conv kernels ~ N(0, 2/fan_in); batch-norm gain 1, bias 0.
ParamVector init_params(const EmbeddingNet& net, std::uint64_t seed);

BlockParams block_params(const EmbeddingNet& net, const ParamVector& params,
                         std::size_t block);

/// 3x3 convolution with zero "same" padding.
Tensor4 conv3x3_same(const Tensor4& input, std::span<const float> kernel,
                     std::size_t out_channels, const std::string& layer = "conv");

/// In-place batch norm using statistics of the batch itself (no running
/// averages). Variance is the biased (population) estimate.
void batch_norm_inplace(Tensor4& t, std::span<const float> gain,
                        std::span<const float> bias, float eps = kBatchNormEps);

void relu_inplace(Tensor4& t) noexcept;

Tensor4 max_pool2x2(const Tensor4& input, const std::string& layer = "pool");

/// One conv -> bn -> relu -> pool block.
Tensor4 conv_block_forward(const Tensor4& input, const BlockParams& params,
                           const std::string& layer = "block");

/// Block `block` of `net`; rejects inputs that do not match the shape chain
/// (e.g. a 2x2 input for the fourth block of a 32x32 network).
Tensor4 conv_block_forward(const EmbeddingNet& net, const ParamVector& params,
                           std::size_t block, const Tensor4& input);

/// f_phi(x) for a batch: (batch, embedding_dim) matrix.
Matrix embed(const EmbeddingNet& net, const ParamVector& params, const Tensor4& images);

/// Bytes of every intermediate tensor produced by one forward pass over a
/// batch (conv, batch-norm, relu and pool outputs of each block), at 4 bytes
/// per scalar. This is the per-step `g` used by the cost model.
std::uint64_t activation_bytes(const EmbeddingNet& net, std::size_t batch) noexcept;

}  // namespace espn
