#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fusilli/errors.hpp"

namespace fusilli {

/// Row-major single-channel raster of doubles.
///
/// The tag parameter keeps pixel-domain images and weight/activity maps
/// apart at the type level; both share the same storage and accessors.
template <typename Tag>
class Plane {
 public:
  Plane() = default;
  Plane(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), data_(width * height, fill) {}
  Plane(std::size_t width, std::size_t height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width_ * height_) {
      throw ShapeError("plane data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(width_) + "x" +
                       std::to_string(height_));
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(std::size_t x, std::size_t y) noexcept { return data_[y * width_ + x]; }
  double at(std::size_t x, std::size_t y) const noexcept { return data_[y * width_ + x]; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> pixels() noexcept { return data_; }
  std::span<const double> pixels() const noexcept { return data_; }
  std::span<double> row(std::size_t y) noexcept { return {data_.data() + y * width_, width_}; }
  std::span<const double> row(std::size_t y) const noexcept {
    return {data_.data() + y * width_, width_};
  }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

struct ImageTag {};
struct MapTag {};

/// Intensity raster, nominal range [0,1]. Detail content may be signed.
using Image = Plane<ImageTag>;
/// Activity or weight map, at feature or image resolution.
using ScalarMap = Plane<MapTag>;

std::string shape_string(std::size_t width, std::size_t height);

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": dimension mismatch " +
                     shape_string(a.width(), a.height()) + " vs " +
                     shape_string(b.width(), b.height()));
  }
}

/// True when every sample is finite.
bool all_finite(std::span<const double> values) noexcept;

}  // namespace fusilli
