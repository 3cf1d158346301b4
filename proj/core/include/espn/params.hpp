#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace espn {

struct LayerSlot {
  std::string name;
  std::size_t offset = 0;
  std::vector<std::size_t> shape;

  std::size_t size() const noexcept;
};

/// Flat parameter vector plus a registry mapping named slices to layers.
///
/// The registry is append-only: slots are laid out back to back, so offsets
/// never overlap and always cover [0, size()).
class ParamVector {
 public:
  ParamVector() = default;

  /// Single unnamed slot of length `dim`; used for synthetic objectives.
  static ParamVector flat(std::size_t dim, float fill = 0.0f);

  /// Appends a zero-initialized slot and returns its offset.
  std::size_t add_slot(std::string name, std::vector<std::size_t> shape);

  const std::vector<LayerSlot>& layout() const noexcept { return layout_; }
  const LayerSlot& slot(std::string_view name) const;

  std::span<float> slice(std::string_view name);
  std::span<const float> slice(std::string_view name) const;

  std::size_t size() const noexcept { return values_.size(); }
  std::span<float> values() noexcept { return values_; }
  std::span<const float> values() const noexcept { return values_; }

  /// Same layout, different values. Throws ParamSizeError on length mismatch.
  ParamVector with_values(std::vector<float> values) const;

  /// Checks the registry covers [0, size()) without gaps or overlap.
  bool layout_consistent() const noexcept;

 private:
  std::vector<float> values_;
  std::vector<LayerSlot> layout_;
};

}  // namespace espn
