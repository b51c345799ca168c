#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "fusilli/image.hpp"

namespace fusilli::io {

/// Reads an 8-bit PGM (P5) or PNG (gray, gray+alpha, RGB, RGBA, palette).
/// Colour input is reduced to Rec.601 luma; samples are scaled to [0,1].
Image read_image(const std::filesystem::path& path);

/// Writes an 8-bit grayscale image. PNG when the extension is ".png",
/// binary PGM otherwise. Values are clamped to [0,1] then quantized.
void write_image(const Image& image, const std::filesystem::path& path);

/// round(clamp(v,0,1) * 255) with halves rounded up. Values within 1e-9 of a
/// half step count as the half step.
std::uint8_t quantize(double value) noexcept;

/// Byte-level view of what write_image would store.
std::vector<std::uint8_t> quantize(const Image& image);

/// The image read_image would return after write_image: quantized to 8 bits
/// and scaled back to [0,1].
Image quantized(const Image& image);

enum class PadMode { reflect };

struct PadSpec {
  std::size_t left = 0;
  std::size_t right = 0;
  std::size_t top = 0;
  std::size_t bottom = 0;
  PadMode mode = PadMode::reflect;

  bool is_zero() const noexcept { return left == 0 && right == 0 && top == 0 && bottom == 0; }
};

/// Padding that brings (width, height) up to the next multiple of `multiple`,
/// split as evenly as possible with the odd pixel going right/bottom.
PadSpec pad_to_multiple(std::size_t width, std::size_t height, std::size_t multiple);

/// Mirror padding without edge repetition: row [a,b,c] padded by one is [b,a,b,c,b].
/// Every pad amount must be smaller than the matching image dimension.
Image pad_reflect(const Image& image, const PadSpec& spec);

/// Removes the border described by `spec`; inverse of pad_reflect.
Image crop(const Image& image, const PadSpec& spec);

template <typename Tag>
Plane<Tag> crop_plane(const Plane<Tag>& plane, const PadSpec& spec) {
  if (spec.left + spec.right > plane.width() || spec.top + spec.bottom > plane.height()) {
    throw ShapeError("crop exceeds plane " + shape_string(plane.width(), plane.height()));
  }
  const std::size_t w = plane.width() - spec.left - spec.right;
  const std::size_t h = plane.height() - spec.top - spec.bottom;
  Plane<Tag> out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      out.at(x, y) = plane.at(x + spec.left, y + spec.top);
    }
  }
  return out;
}

}  // namespace fusilli::io
