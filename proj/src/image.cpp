#include "fusilli/image.hpp"

#include <algorithm>
#include <cmath>

namespace fusilli {

std::string shape_string(std::size_t width, std::size_t height) {
  return std::to_string(width) + "x" + std::to_string(height);
}

bool all_finite(std::span<const double> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace fusilli
