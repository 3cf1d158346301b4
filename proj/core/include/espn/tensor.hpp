#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace espn {

struct Dims4 {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t count() const noexcept { return batch * channels * height * width; }
  std::size_t per_item() const noexcept { return channels * height * width; }
  bool operator==(const Dims4&) const = default;
  std::string str() const;
};

/// Dense NCHW float tensor.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Dims4 dims, float fill = 0.0f);
  Tensor4(Dims4 dims, std::vector<float> data);

  const Dims4& dims() const noexcept { return dims_; }
  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<float> item(std::size_t n) noexcept;
  std::span<const float> item(std::size_t n) const noexcept;

  float& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
    return data_[((n * dims_.channels + c) * dims_.height + h) * dims_.width + w];
  }
  float at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return data_[((n * dims_.channels + c) * dims_.height + h) * dims_.width + w];
  }

  bool all_finite() const noexcept;

  /// Stacks batches along dimension 0. Non-batch dims must agree.
  static Tensor4 concat(const Tensor4& a, const Tensor4& b);

 private:
  Dims4 dims_;
  std::vector<float> data_;
};

/// Row-major float matrix (embeddings, prototypes).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<float> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  float& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

}  // namespace espn
