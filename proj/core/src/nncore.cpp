#include "espn/nncore.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "espn/error.hpp"
#include "espn/rng.hpp"

namespace espn {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_param_size(const EmbeddingNet& net, const ParamVector& params) {
  if (params.size() != net.param_count()) {
    throw ParamSizeError("parameter vector has " + std::to_string(params.size()) +
                         " values; network with " + std::to_string(net.channels) +
                         " channels needs " + std::to_string(net.param_count()));
  }
}

// Channel-major activations, [c][n][h][w]: one GEMM covers many images and
// each batch-norm channel is contiguous.
struct Planes {
  std::size_t channels = 0, batch = 0, height = 0, width = 0;
  std::vector<float, Eigen::aligned_allocator<float>> v;

  std::size_t hw() const noexcept { return height * width; }
  float* channel(std::size_t c) noexcept { return v.data() + c * batch * hw(); }
  const float* channel(std::size_t c) const noexcept { return v.data() + c * batch * hw(); }
};

Planes to_planes(const Tensor4& t) {
  const Dims4 d = t.dims();
  Planes p{d.channels, d.batch, d.height, d.width, {}};
  p.v.resize(d.count());
  const std::size_t hw = p.hw();
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t c = 0; c < d.channels; ++c)
      std::copy_n(t.data().data() + (n * d.channels + c) * hw, hw, p.channel(c) + n * hw);
  return p;
}

Tensor4 to_nchw(const Planes& p) {
  Tensor4 t({p.batch, p.channels, p.height, p.width});
  const std::size_t hw = p.hw();
  for (std::size_t n = 0; n < p.batch; ++n)
    for (std::size_t c = 0; c < p.channels; ++c)
      std::copy_n(p.channel(c) + n * hw, hw, t.data().data() + (n * p.channels + c) * hw);
  return t;
}

void check_kernel(const Dims4& in, std::span<const float> kernel, std::size_t out_channels,
                  const std::string& layer) {
  if (kernel.size() != out_channels * in.channels * 9) {
    throw ShapeError(layer, "kernel has " + std::to_string(kernel.size()) +
                                " weights, expected " +
                                std::to_string(out_channels * in.channels * 9) +
                                " for input " + in.str());
  }
}

void check_block_input(const Dims4& in, const BlockParams& params, const std::string& layer) {
  if (in.height % 2 != 0 || in.width % 2 != 0 || in.height == 0 || in.width == 0) {
    throw ShapeError(layer, "input " + in.str() + " cannot be pooled 2x2");
  }
  if (params.gain.size() != params.out_channels || params.bias.size() != params.out_channels) {
    throw ShapeError(layer, "batch-norm parameters do not match " +
                                std::to_string(params.out_channels) + " channels");
  }
}

// im2col budget per GEMM, in floats
constexpr std::size_t kColsBudget = std::size_t{1} << 20;

Planes conv_planes(const Planes& in, std::span<const float> kernel, std::size_t out_channels) {
  const std::size_t H = in.height, W = in.width, HW = in.hw(), N = in.batch;
  const std::size_t K = in.channels * 9;
  Planes out{out_channels, N, H, W, {}};
  out.v.resize(out_channels * N * HW);
  if (N == 0 || HW == 0) return out;
  const std::size_t chunk = std::clamp<std::size_t>(kColsBudget / (K * HW), 1, N);
  RowMat cols(K, chunk * HW);
  RowMat res(out_channels, chunk * HW);
  const RowMat wmat = Eigen::Map<const RowMat>(kernel.data(), out_channels, K);

  for (std::size_t n0 = 0; n0 < N; n0 += chunk) {
    const std::size_t m = std::min(chunk, N - n0);
    const std::size_t ncols = m * HW;
    for (std::size_t c = 0; c < in.channels; ++c) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          float* dst = cols.data() + (c * 9 + (dy + 1) * 3 + (dx + 1)) * cols.cols();
          for (std::size_t i = 0; i < m; ++i) {
            const float* plane = in.channel(c) + (n0 + i) * HW;
            for (std::size_t y = 0; y < H; ++y) {
              float* drow = dst + i * HW + y * W;
              const long sy = static_cast<long>(y) + dy;
              if (sy < 0 || sy >= static_cast<long>(H)) {
                std::fill(drow, drow + W, 0.0f);
                continue;
              }
              const float* srow = plane + sy * W;
              if (dx == 0) {
                std::copy_n(srow, W, drow);
              } else if (dx < 0) {
                drow[0] = 0.0f;
                std::copy_n(srow, W - 1, drow + 1);
              } else {
                std::copy_n(srow + 1, W - 1, drow);
                drow[W - 1] = 0.0f;
              }
            }
          }
        }
      }
    }
    // aligned target; writing through a strided map over out.v made results depend on the heap address
    Eigen::Map<RowMat, 0, Eigen::OuterStride<>> omat(out.v.data() + n0 * HW, out_channels, ncols,
                                                     Eigen::OuterStride<>(N * HW));
    omat.noalias() = wmat * cols.leftCols(ncols);
  }
  return out;
}

double sum_of(const float* p, std::size_t n) {
  double s = 0.0;
  constexpr std::size_t kBlock = 1024;
  for (std::size_t i = 0; i < n; i += kBlock) {
    s += Eigen::Map<const Eigen::ArrayXf>(p + i, std::min(kBlock, n - i)).sum();
  }
  return s;
}

double centered_squares(const float* p, std::size_t n, float mean) {
  double s = 0.0;
  constexpr std::size_t kBlock = 1024;
  for (std::size_t i = 0; i < n; i += kBlock) {
    s += (Eigen::Map<const Eigen::ArrayXf>(p + i, std::min(kBlock, n - i)) - mean).square().sum();
  }
  return s;
}

// Batch statistics per channel (population variance), optionally fused with ReLU.
void norm_planes(Planes& p, std::span<const float> gain, std::span<const float> bias, float eps,
                 bool relu) {
  const std::size_t count = p.batch * p.hw();
  if (count == 0) return;
  for (std::size_t c = 0; c < p.channels; ++c) {
    float* x = p.channel(c);
    const double mean = sum_of(x, count) / static_cast<double>(count);
    const double var = centered_squares(x, count, static_cast<float>(mean)) / static_cast<double>(count);
    const double inv = 1.0 / std::sqrt(var + eps);
    const float scale = static_cast<float>(gain[c] * inv);
    const float shift = static_cast<float>(bias[c] - mean * gain[c] * inv);
    Eigen::Map<Eigen::ArrayXf> a(x, count);
    if (relu) {
      a = (a * scale + shift).max(0.0f);
    } else {
      a = a * scale + shift;
    }
  }
}

void pool_planes(const float* src, float* dst, std::size_t planes, std::size_t H, std::size_t W) {
  const std::size_t oh = H / 2, ow = W / 2;
  for (std::size_t p = 0; p < planes; ++p) {
    const float* s = src + p * H * W;
    float* d = dst + p * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      const float* r0 = s + 2 * y * W;
      const float* r1 = r0 + W;
      for (std::size_t x = 0; x < ow; ++x) {
        d[y * ow + x] = std::max(std::max(r0[2 * x], r0[2 * x + 1]), std::max(r1[2 * x], r1[2 * x + 1]));
      }
    }
  }
}

Planes block_planes(const Planes& in, const BlockParams& params) {
  Planes t = conv_planes(in, params.conv, params.out_channels);
  norm_planes(t, params.gain, params.bias, kBatchNormEps, true);
  Planes out{t.channels, t.batch, t.height / 2, t.width / 2, {}};
  out.v.resize(out.channels * out.batch * out.hw());
  pool_planes(t.v.data(), out.v.data(), t.channels * t.batch, t.height, t.width);
  return out;
}

}  // namespace

std::size_t EmbeddingNet::param_count() const noexcept {
  const std::size_t c = channels;
  return (9 * input_channels * c + 2 * c) + (kBlocks - 1) * (9 * c * c + 2 * c);
}

void EmbeddingNet::validate() const {
  if (channels == 0 || input_channels == 0) {
    throw ShapeError("embedding", "channel counts must be positive");
  }
  if (input_size == 0 || input_size % (std::size_t{1} << kBlocks) != 0) {
    throw ShapeError("embedding", "input size " + std::to_string(input_size) +
                                      " is not divisible by 2^" + std::to_string(kBlocks));
  }
}

std::string EmbeddingNet::conv_name(std::size_t block) {
  return "block" + std::to_string(block + 1) + ".conv";
}
std::string EmbeddingNet::gain_name(std::size_t block) {
  return "block" + std::to_string(block + 1) + ".bn_gain";
}
std::string EmbeddingNet::bias_name(std::size_t block) {
  return "block" + std::to_string(block + 1) + ".bn_bias";
}

ParamVector make_params(const EmbeddingNet& net) {
  net.validate();
  ParamVector p;
  for (std::size_t b = 0; b < EmbeddingNet::kBlocks; ++b) {
    p.add_slot(EmbeddingNet::conv_name(b), {net.channels, net.block_in_channels(b), 3, 3});
    p.add_slot(EmbeddingNet::gain_name(b), {net.channels});
    p.add_slot(EmbeddingNet::bias_name(b), {net.channels});
  }
  return p;
}

ParamVector init_params(const EmbeddingNet& net, std::uint64_t seed) {
  ParamVector p = make_params(net);
  for (std::size_t b = 0; b < EmbeddingNet::kBlocks; ++b) {
    const float fan_in = static_cast<float>(9 * net.block_in_channels(b));
    CounterRng rng(derive_seed(seed, "init.conv", b));
    for (float& w : p.slice(EmbeddingNet::conv_name(b))) {
      w = static_cast<float>(rng.normal() * std::sqrt(2.0 / fan_in));
    }
    auto gain = p.slice(EmbeddingNet::gain_name(b));
    std::fill(gain.begin(), gain.end(), 1.0f);
  }
  return p;
}

BlockParams block_params(const EmbeddingNet& net, const ParamVector& params,
                         std::size_t block) {
  check_param_size(net, params);
  return {params.slice(EmbeddingNet::conv_name(block)),
          params.slice(EmbeddingNet::gain_name(block)),
          params.slice(EmbeddingNet::bias_name(block)), net.channels};
}

Tensor4 conv3x3_same(const Tensor4& input, std::span<const float> kernel,
                     std::size_t out_channels, const std::string& layer) {
  check_kernel(input.dims(), kernel, out_channels, layer);
  return to_nchw(conv_planes(to_planes(input), kernel, out_channels));
}

void batch_norm_inplace(Tensor4& t, std::span<const float> gain, std::span<const float> bias,
                        float eps) {
  const Dims4 d = t.dims();
  if (gain.size() != d.channels || bias.size() != d.channels) {
    throw ShapeError("batchnorm", "gain/bias length does not match " +
                                      std::to_string(d.channels) + " channels");
  }
  Planes p = to_planes(t);
  norm_planes(p, gain, bias, eps, false);
  t = to_nchw(p);
}

void relu_inplace(Tensor4& t) noexcept {
  for (float& v : t.data()) v = v > 0.0f ? v : 0.0f;
}

Tensor4 max_pool2x2(const Tensor4& input, const std::string& layer) {
  const Dims4 in = input.dims();
  if (in.height % 2 != 0 || in.width % 2 != 0) {
    throw ShapeError(layer, "spatial dims of " + in.str() + " are not divisible by 2");
  }
  Tensor4 out({in.batch, in.channels, in.height / 2, in.width / 2});
  pool_planes(input.data().data(), out.data().data(), in.batch * in.channels, in.height, in.width);
  return out;
}

Tensor4 conv_block_forward(const Tensor4& input, const BlockParams& params,
                           const std::string& layer) {
  check_block_input(input.dims(), params, layer);
  check_kernel(input.dims(), params.conv, params.out_channels, layer + ".conv");
  return to_nchw(block_planes(to_planes(input), params));
}

Tensor4 conv_block_forward(const EmbeddingNet& net, const ParamVector& params,
                           std::size_t block, const Tensor4& input) {
  const std::string layer = "block" + std::to_string(block + 1);
  if (block >= EmbeddingNet::kBlocks) {
    throw ShapeError(layer, "network has only " + std::to_string(EmbeddingNet::kBlocks) +
                                " blocks");
  }
  const std::size_t side = net.spatial_at(block);
  const Dims4 in = input.dims();
  if (in.channels != net.block_in_channels(block) || in.height != side || in.width != side) {
    throw ShapeError(layer, "expected input (batch," + std::to_string(net.block_in_channels(block)) +
                                "," + std::to_string(side) + "," + std::to_string(side) +
                                "), got " + in.str());
  }
  return conv_block_forward(input, block_params(net, params, block), layer);
}

Matrix embed(const EmbeddingNet& net, const ParamVector& params, const Tensor4& images) {
  check_param_size(net, params);
  const Dims4 in = images.dims();
  const std::size_t side = net.input_size;
  if (in.channels != net.input_channels || in.height != side || in.width != side) {
    throw ShapeError("block1", "expected input (batch," + std::to_string(net.input_channels) + "," +
                                   std::to_string(side) + "," + std::to_string(side) + "), got " +
                                   in.str());
  }
  Planes x = to_planes(images);
  for (std::size_t b = 0; b < EmbeddingNet::kBlocks; ++b) {
    x = block_planes(x, block_params(net, params, b));
  }
  Tensor4 out = to_nchw(x);
  const std::size_t batch = out.dims().batch, dc = out.dims().per_item();
  std::vector<float> flat(out.data().begin(), out.data().end());
  return Matrix(batch, dc, std::move(flat));
}

std::uint64_t activation_bytes(const EmbeddingNet& net, std::size_t batch) noexcept {
  std::uint64_t scalars = 0;
  for (std::size_t b = 0; b < EmbeddingNet::kBlocks; ++b) {
    const std::uint64_t side = net.spatial_at(b);
    const std::uint64_t full = batch * net.channels * side * side;
    // conv, batch-norm and relu outputs at full resolution, pool at quarter.
    scalars += 3 * full + full / 4;
  }
  return scalars * 4;
}

}  // namespace espn
