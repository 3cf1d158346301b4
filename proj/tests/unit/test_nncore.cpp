#include <gtest/gtest.h>

#include <cmath>

#include "espn/error.hpp"
#include "espn/nncore.hpp"
#include "test_util.hpp"

namespace espn {
namespace {

Tensor4 random_images(std::size_t batch, std::uint64_t seed, std::size_t side = 32) {
  auto v = testing::gaussian(batch * side * side, seed);
  for (auto& x : v) x = std::abs(x) * 0.3f;
  return Tensor4({batch, 1, side, side}, std::move(v));
}

TEST(EmbeddingNet, ParamCountMatchesClosedFormAndRegistry) {
  for (const std::size_t c : {16u, 32u, 64u}) {
    EmbeddingNet net;
    net.channels = c;
    const std::size_t closed = (9 * 1 * c + 2 * c) + 3 * (9 * c * c + 2 * c);
    EXPECT_EQ(net.param_count(), closed);
    const ParamVector p = make_params(net);
    EXPECT_EQ(p.size(), closed);
    EXPECT_TRUE(p.layout_consistent());
    std::size_t sum = 0;
    for (const auto& s : p.layout()) sum += s.size();
    EXPECT_EQ(sum, closed);
  }
}

TEST(EmbeddingNet, EmbeddingDimIsFourTimesChannels) {
  EXPECT_EQ((EmbeddingNet{64}.embedding_dim()), 256u);
  EXPECT_EQ((EmbeddingNet{16}.embedding_dim()), 64u);
  EXPECT_EQ((EmbeddingNet{32}.embedding_dim()), 128u);
}

TEST(ConvBlock, HalvesSpatialDims) {
  EmbeddingNet net{64};
  const ParamVector p = init_params(net, 1);
  const Tensor4 out = conv_block_forward(net, p, 0, random_images(100, 2));
  EXPECT_EQ(out.dims(), (Dims4{100, 64, 16, 16}));
  EXPECT_TRUE(out.all_finite());
}

TEST(ConvBlock, ShapeChainIs16_8_4_2) {
  EmbeddingNet net{16};
  const ParamVector p = init_params(net, 1);
  Tensor4 x = random_images(4, 3);
  const std::size_t expected[] = {16, 8, 4, 2};
  for (std::size_t b = 0; b < EmbeddingNet::kBlocks; ++b) {
    x = conv_block_forward(net, p, b, x);
    EXPECT_EQ(x.dims().height, expected[b]);
    EXPECT_EQ(x.dims().width, expected[b]);
  }
}

TEST(ConvBlock, ZeroInputGivesZeroOutputWithZeroBias) {
  EmbeddingNet net{16};
  const ParamVector p = init_params(net, 1);
  const Tensor4 out = conv_block_forward(net, p, 0, Tensor4({3, 1, 32, 32}, 0.0f));
  for (const float v : out.data()) EXPECT_EQ(v, 0.0f);
}

TEST(ConvBlock, RejectsInputOffTheShapeChain) {
  EmbeddingNet net{64};
  const ParamVector p = init_params(net, 1);
  // The fourth block of a 32x32 network sees 4x4 inputs, never 2x2.
  try {
    conv_block_forward(net, p, 3, Tensor4({100, 64, 2, 2}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_EQ(e.layer(), "block4");
  }
  EXPECT_THROW(conv_block_forward(net, p, 0, Tensor4({2, 3, 32, 32})), ShapeError);
}

TEST(ConvBlock, OddSpatialDimsRejected) {
  const auto w = testing::gaussian(9 * 4, 1);
  const std::vector<float> gain(4, 1.0f), bias(4, 0.0f);
  EXPECT_THROW(conv_block_forward(Tensor4({1, 1, 5, 5}), BlockParams{w, gain, bias, 4}), ShapeError);
}

// Direct summation oracle for the 3x3 same-padded convolution.
TEST(Conv3x3, MatchesDirectLoop) {
  const std::size_t cin = 3, cout = 5, h = 6, w = 7, batch = 2;
  const auto x = testing::gaussian(batch * cin * h * w, 11);
  const auto k = testing::gaussian(cout * cin * 9, 12);
  const Tensor4 in({batch, cin, h, w}, x);
  const Tensor4 out = conv3x3_same(in, k, cout);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t xx = 0; xx < w; ++xx) {
          double s = 0;
          for (std::size_t c = 0; c < cin; ++c) {
            for (int dy = -1; dy <= 1; ++dy) {
              for (int dx = -1; dx <= 1; ++dx) {
                const long sy = long(y) + dy, sx = long(xx) + dx;
                if (sy < 0 || sx < 0 || sy >= long(h) || sx >= long(w)) continue;
                s += double(k[((o * cin + c) * 3 + (dy + 1)) * 3 + (dx + 1)]) *
                     in.at(n, c, sy, sx);
              }
            }
          }
          EXPECT_NEAR(out.at(n, o, y, xx), s, 1e-4);
        }
      }
    }
  }
}

// Wide input so the im2col buffer is split across several GEMMs.
TEST(Conv3x3, ChunkedBatchMatchesDirectLoop) {
  const std::size_t cin = 64, cout = 4, h = 16, w = 16, batch = 9;
  const Tensor4 in({batch, cin, h, w}, testing::gaussian(batch * cin * h * w, 21));
  const auto k = testing::gaussian(cout * cin * 9, 22);
  const Tensor4 out = conv3x3_same(in, k, cout);
  for (const std::size_t n : {0u, 6u, 7u, 8u}) {
    for (std::size_t o = 0; o < cout; ++o) {
      for (const std::size_t y : {0u, 7u, 15u}) {
        for (std::size_t xx = 0; xx < w; ++xx) {
          double s = 0;
          for (std::size_t c = 0; c < cin; ++c)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                const long sy = long(y) + dy, sx = long(xx) + dx;
                if (sy < 0 || sx < 0 || sy >= long(h) || sx >= long(w)) continue;
                s += double(k[((o * cin + c) * 3 + (dy + 1)) * 3 + (dx + 1)]) * in.at(n, c, sy, sx);
              }
          ASSERT_NEAR(out.at(n, o, y, xx), s, 1e-3) << n << " " << o << " " << y << " " << xx;
        }
      }
    }
  }
}

TEST(BatchNorm, NormalizesPerChannel) {
  Tensor4 t({8, 3, 4, 4}, testing::gaussian(8 * 3 * 16, 5, 3.0));
  for (std::size_t i = 0; i < t.data().size(); ++i) t.data()[i] += 2.0f;
  const std::vector<float> gain(3, 1.0f), bias(3, 0.0f);
  batch_norm_inplace(t, gain, bias);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0, s2 = 0;
    const double count = 8 * 16;
    for (std::size_t n = 0; n < 8; ++n)
      for (std::size_t i = 0; i < 16; ++i) s += t.data()[(n * 3 + c) * 16 + i];
    const double mean = s / count;
    for (std::size_t n = 0; n < 8; ++n)
      for (std::size_t i = 0; i < 16; ++i) {
        const double d = t.data()[(n * 3 + c) * 16 + i] - mean;
        s2 += d * d;
      }
    EXPECT_NEAR(mean, 0.0, 1e-4);
    EXPECT_NEAR(s2 / count, 1.0, 1e-4);
  }
}

TEST(MaxPool, TakesWindowMaximum) {
  Tensor4 t({1, 1, 2, 4}, std::vector<float>{1, 5, -1, 0, 3, 2, 7, -2});
  const Tensor4 out = max_pool2x2(t);
  ASSERT_EQ(out.dims(), (Dims4{1, 1, 1, 2}));
  EXPECT_EQ(out.at(0, 0, 0, 0), 5.0f);
  EXPECT_EQ(out.at(0, 0, 0, 1), 7.0f);
}

TEST(Embed, OutputShapeAndDeterminism) {
  EmbeddingNet net{16};
  const ParamVector p = init_params(net, 4);
  const Tensor4 imgs = random_images(6, 9);
  const Matrix a = embed(net, p, imgs);
  const Matrix b = embed(net, p, imgs);
  EXPECT_EQ(a.rows(), 6u);
  EXPECT_EQ(a.cols(), 64u);
  for (std::size_t i = 0; i < a.data().size(); ++i) ASSERT_EQ(a.data()[i], b.data()[i]);
}

TEST(Embed, EqualsChainedBlocks) {
  EmbeddingNet net{32};
  const ParamVector p = init_params(net, 6);
  const Tensor4 imgs = random_images(12, 10);
  Tensor4 x = imgs;
  for (std::size_t b = 0; b < EmbeddingNet::kBlocks; ++b) x = conv_block_forward(net, p, b, x);
  const Matrix e = embed(net, p, imgs);
  ASSERT_EQ(e.data().size(), x.data().size());
  for (std::size_t i = 0; i < x.data().size(); ++i) ASSERT_NEAR(e.data()[i], x.data()[i], 1e-5);
}

TEST(Embed, DuplicateImagesGiveIdenticalRows) {
  EmbeddingNet net{16};
  const ParamVector p = init_params(net, 4);
  Tensor4 imgs = random_images(4, 9);
  std::copy(imgs.item(0).begin(), imgs.item(0).end(), imgs.item(2).begin());
  const Matrix e = embed(net, p, imgs);
  for (std::size_t j = 0; j < e.cols(); ++j) EXPECT_EQ(e(0, j), e(2, j));
}

TEST(Embed, WrongParamLengthIsParamSizeError) {
  EmbeddingNet net{16};
  const ParamVector wrong = make_params(EmbeddingNet{32});
  EXPECT_THROW(embed(net, wrong, random_images(2, 1)), ParamSizeError);
}

TEST(InitParams, SeedDeterminismAndConventions) {
  EmbeddingNet net{32};
  const ParamVector a = init_params(net, 10);
  const ParamVector b = init_params(net, 10);
  const ParamVector c = init_params(net, 11);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  for (std::size_t blk = 0; blk < EmbeddingNet::kBlocks; ++blk) {
    for (const float g : a.slice(EmbeddingNet::gain_name(blk))) EXPECT_EQ(g, 1.0f);
    for (const float v : a.slice(EmbeddingNet::bias_name(blk))) EXPECT_EQ(v, 0.0f);
  }
  std::size_t total = 0, differ = 0;
  for (std::size_t blk = 0; blk < EmbeddingNet::kBlocks; ++blk) {
    const auto x = a.slice(EmbeddingNet::conv_name(blk));
    const auto y = c.slice(EmbeddingNet::conv_name(blk));
    for (std::size_t i = 0; i < x.size(); ++i, ++total) differ += x[i] != y[i];
  }
  EXPECT_GE(static_cast<double>(differ) / total, 0.99);
}

TEST(InitParams, ConvStdFollowsFanIn) {
  EmbeddingNet net{64};
  const ParamVector p = init_params(net, 3);
  const auto w = p.slice(EmbeddingNet::conv_name(2));
  double s2 = 0;
  for (const float v : w) s2 += double(v) * v;
  const double sd = std::sqrt(s2 / w.size());
  EXPECT_NEAR(sd, std::sqrt(2.0 / (9 * 64)), 0.02 * std::sqrt(2.0 / (9 * 64)));
}

TEST(ActivationBytes, CountsFourTensorsPerBlock) {
  EmbeddingNet net{16};
  // Block b at side s: 3 full tensors (conv, bn, relu) + pooled quarter.
  std::uint64_t expect = 0;
  for (std::uint64_t s : {32u, 16u, 8u, 4u}) expect += (3 * 10 * 16 * s * s + 10 * 16 * s * s / 4);
  EXPECT_EQ(activation_bytes(net, 10), expect * 4);
}

}  // namespace
}  // namespace espn
