#pragma once

#include "fusilli/image.hpp"

namespace fusilli {

enum class Boundary { periodic };

struct DecomposeParams {
  double lambda = 5.0;
  Boundary boundary = Boundary::periodic;
};

struct Decomposition {
  Image base;
  Image detail;
};

/// Base part of `image`: the minimiser of
///   ||I - B||^2 + lambda * (||gx * B||^2 + ||gy * B||^2),  gx = [-1 1], gy = gx^T
/// under periodic convolution. Solved exactly in the Fourier domain, where the
/// normal equations are diagonal:
///   B^ = I^ / (1 + lambda * (|gx^|^2 + |gy^|^2)).
///
/// Throws InvalidArgument for a negative lambda and ShapeError for an empty image.
Image solve_base(const Image& image, const DecomposeParams& params = {});

/// Base part plus detail content, detail = image - base.
Decomposition decompose(const Image& image, const DecomposeParams& params = {});

}  // namespace fusilli
