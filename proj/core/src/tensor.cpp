#include "espn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "espn/error.hpp"

namespace espn {

std::string Dims4::str() const {
  return "(" + std::to_string(batch) + "," + std::to_string(channels) + "," +
         std::to_string(height) + "," + std::to_string(width) + ")";
}

Tensor4::Tensor4(Dims4 dims, float fill) : dims_(dims), data_(dims.count(), fill) {}

Tensor4::Tensor4(Dims4 dims, std::vector<float> data) : dims_(dims), data_(std::move(data)) {
  if (data_.size() != dims_.count()) {
    throw ShapeError("tensor", "data length " + std::to_string(data_.size()) +
                                   " does not match dims " + dims_.str());
  }
}

std::span<float> Tensor4::item(std::size_t n) noexcept {
  return {data_.data() + n * dims_.per_item(), dims_.per_item()};
}

std::span<const float> Tensor4::item(std::size_t n) const noexcept {
  return {data_.data() + n * dims_.per_item(), dims_.per_item()};
}

bool Tensor4::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

Tensor4 Tensor4::concat(const Tensor4& a, const Tensor4& b) {
  const Dims4& da = a.dims();
  const Dims4& db = b.dims();
  if (da.channels != db.channels || da.height != db.height || da.width != db.width) {
    throw ShapeError("concat", "cannot stack " + da.str() + " with " + db.str());
  }
  Dims4 d = da;
  d.batch = da.batch + db.batch;
  std::vector<float> data;
  data.reserve(d.count());
  data.insert(data.end(), a.data_.begin(), a.data_.end());
  data.insert(data.end(), b.data_.begin(), b.data_.end());
  return Tensor4(d, std::move(data));
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix", "data length does not match " + std::to_string(rows_) + "x" +
                                   std::to_string(cols_));
  }
}

IngestionError::IngestionError(std::vector<std::string> paths)
    : Error([&] {
        std::string msg = "failed to ingest " + std::to_string(paths.size()) + " image(s):";
        for (const auto& p : paths) msg += "\n  " + p;
        return msg;
      }()),
      paths_(std::move(paths)) {}

}  // namespace espn
