#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "tubekit/error.hpp"

namespace tubekit {

struct Dims {
  int nx = 1;
  int ny = 1;
  int nz = 1;

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  bool operator==(const Dims&) const = default;
};

// Millimetres per voxel along each axis.
struct Spacing {
  float x = 1.0f;
  float y = 1.0f;
  float z = 1.0f;

  bool operator==(const Spacing&) const = default;
};

struct Index3 {
  int x = 0;
  int y = 0;
  int z = 0;

  auto operator<=>(const Index3&) const = default;
};

std::string to_string(const Dims& d);
std::string to_string(const Index3& i);

// Dense 3D field stored x-fastest, z-slowest. The element type selects the
// invariant enforced by validate(): floating fields must be finite and
// uint8 fields must hold {0, 1} only.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  explicit Grid(Dims dims, Spacing spacing = {}, T fill = T{})
      : dims_(dims), spacing_(spacing) {
    check_shape();
    data_.assign(dims_.count(), fill);
    validate();
  }

  Grid(Dims dims, Spacing spacing, std::vector<T> data)
      : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    check_shape();
    if (data_.size() != dims_.count()) {
      throw ParameterError("data length " + std::to_string(data_.size()) +
                           " does not match dims " + to_string(dims_));
    }
    validate();
  }

  const Dims& dims() const noexcept { return dims_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  void set_spacing(Spacing s) {
    spacing_ = s;
    check_shape();
  }

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int x, int y, int z) const noexcept {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims_.ny) * static_cast<std::size_t>(z));
  }
  std::size_t index(const Index3& p) const noexcept { return index(p.x, p.y, p.z); }

  Index3 coord(std::size_t i) const noexcept {
    const auto nx = static_cast<std::size_t>(dims_.nx);
    const auto ny = static_cast<std::size_t>(dims_.ny);
    return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny),
            static_cast<int>(i / (nx * ny))};
  }

  bool contains(int x, int y, int z) const noexcept {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.nx && y < dims_.ny && z < dims_.nz;
  }
  bool contains(const Index3& p) const noexcept { return contains(p.x, p.y, p.z); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }
  T& at(int x, int y, int z) noexcept { return data_[index(x, y, z)]; }
  const T& at(int x, int y, int z) const noexcept { return data_[index(x, y, z)]; }
  T& at(const Index3& p) noexcept { return data_[index(p)]; }
  const T& at(const Index3& p) const noexcept { return data_[index(p)]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  bool same_shape(const Grid<T>& other) const noexcept { return dims_ == other.dims_; }
  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return dims_ == other.dims();
  }

  void validate() const {
    if constexpr (std::is_floating_point_v<T>) {
      for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
          throw ParameterError("non-finite value at linear index " + std::to_string(i));
        }
      }
    } else if constexpr (std::is_same_v<T, std::uint8_t>) {
      for (std::size_t i = 0; i < data_.size(); ++i) {
        if (data_[i] > 1) {
          throw ParameterError("mask value " + std::to_string(data_[i]) +
                               " at linear index " + std::to_string(i) + " is not 0/1");
        }
      }
    }
  }

  bool operator==(const Grid&) const = default;

 private:
  void check_shape() const {
    if (dims_.nx < 1 || dims_.ny < 1 || dims_.nz < 1) {
      throw ParameterError("all dims must be >= 1, got " + to_string(dims_));
    }
    for (float s : {spacing_.x, spacing_.y, spacing_.z}) {
      if (!(s > 0.0f) || !std::isfinite(s)) {
        throw ParameterError("spacing components must be positive and finite");
      }
    }
  }

  Dims dims_{};
  Spacing spacing_{};
  std::vector<T> data_ = std::vector<T>(1, T{});
};

// Images, probability maps and filter responses.
using Volume3 = Grid<float>;
// Labels, skeletons and reconnect branches, one byte per voxel.
using Mask3 = Grid<std::uint8_t>;
// 64-bit working field used by the losses and their gradients.
using Field3 = Grid<double>;

template <typename To, typename From>
Grid<To> convert(const Grid<From>& in) {
  std::vector<To> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<To>(in[i]);
  return Grid<To>(in.dims(), in.spacing(), std::move(out));
}

// Voxels strictly above `level` become 1.
template <typename T>
Mask3 threshold(const Grid<T>& in, double level) {
  std::vector<std::uint8_t> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<double>(in[i]) > level ? 1 : 0;
  return Mask3(in.dims(), in.spacing(), std::move(out));
}

std::size_t count_foreground(const Mask3& m);

// Inclusive axis-aligned voxel box.
struct RoiBox {
  Index3 min{};
  Index3 max{};

  bool contains(const Index3& p) const noexcept {
    return p.x >= min.x && p.y >= min.y && p.z >= min.z && p.x <= max.x && p.y <= max.y &&
           p.z <= max.z;
  }
  bool operator==(const RoiBox&) const = default;
};

RoiBox full_roi(const Dims& dims);
void validate_roi(const RoiBox& roi, const Dims& dims);

// Tightest box around the positives of `label`, dilated by `margin` voxels and
// clamped to the volume. Throws DomainError("empty label") if there are none.
RoiBox roi_from_label(const Mask3& label, int margin = 2);

}  // namespace tubekit
