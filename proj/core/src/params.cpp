#include "espn/params.hpp"

#include <functional>
#include <numeric>

#include "espn/error.hpp"

namespace espn {

std::size_t LayerSlot::size() const noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

ParamVector ParamVector::flat(std::size_t dim, float fill) {
  ParamVector p;
  p.add_slot("flat", {dim});
  std::fill(p.values_.begin(), p.values_.end(), fill);
  return p;
}

std::size_t ParamVector::add_slot(std::string name, std::vector<std::size_t> shape) {
  LayerSlot s{std::move(name), values_.size(), std::move(shape)};
  values_.resize(values_.size() + s.size(), 0.0f);
  layout_.push_back(std::move(s));
  return layout_.back().offset;
}

const LayerSlot& ParamVector::slot(std::string_view name) const {
  for (const auto& s : layout_) {
    if (s.name == name) return s;
  }
  throw ParamSizeError("no parameter slot named '" + std::string(name) + "'");
}

std::span<float> ParamVector::slice(std::string_view name) {
  const LayerSlot& s = slot(name);
  return {values_.data() + s.offset, s.size()};
}

std::span<const float> ParamVector::slice(std::string_view name) const {
  const LayerSlot& s = slot(name);
  return {values_.data() + s.offset, s.size()};
}

ParamVector ParamVector::with_values(std::vector<float> values) const {
  if (values.size() != values_.size()) {
    throw ParamSizeError("parameter vector has " + std::to_string(values.size()) +
                         " values, layout expects " + std::to_string(values_.size()));
  }
  ParamVector p;
  p.layout_ = layout_;
  p.values_ = std::move(values);
  return p;
}

bool ParamVector::layout_consistent() const noexcept {
  std::size_t next = 0;
  for (const auto& s : layout_) {
    if (s.offset != next) return false;
    next += s.size();
  }
  return next == values_.size();
}

}  // namespace espn
