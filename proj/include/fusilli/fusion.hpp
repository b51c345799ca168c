#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "fusilli/config.hpp"
#include "fusilli/decompose.hpp"
#include "fusilli/image.hpp"
#include "fusilli/vgg.hpp"

namespace fusilli {

/// alpha[0] * b1 + alpha[1] * b2 per pixel.
Image fuse_base(const Image& b1, const Image& b2, const std::array<double, 2>& alpha);

/// Per-position l1 norm of the activation vector across channels.
ScalarMap activity_map(const vgg::FeatureStack& features);

/// Mean over the (2r+1)^2 window centred on each pixel. Positions outside the
/// map count as zero and the divisor stays (2r+1)^2, so border values shrink.
ScalarMap block_average(const ScalarMap& map, std::size_t radius);

/// W_k = m_k / (m1 + m2), with both weights set to 0.5 wherever
/// m1 + m2 <= epsilon.
std::pair<ScalarMap, ScalarMap> softmax_weights(const ScalarMap& m1, const ScalarMap& m2,
                                                double epsilon);

/// Nearest-neighbour replication: out(x*f + p, y*f + q) = in(x, y) for p, q < f.
ScalarMap upsample_weights(const ScalarMap& map, std::size_t factor);

/// w1 * d1 + w2 * d2 per pixel.
Image fuse_detail_layer(const ScalarMap& w1, const ScalarMap& w2, const Image& d1, const Image& d2);

/// Signed per-pixel maximum over the candidates.
Image max_select(std::span<const Image> candidates);

/// fb + fd per pixel. No clamping.
Image reconstruct(const Image& fused_base, const Image& fused_detail);

/// Weight maps of one tap, before and after upsampling.
struct TapWeights {
  std::size_t tap = 0;
  ScalarMap feature_w1;  // at tap resolution on the padded grid
  ScalarMap feature_w2;
  ScalarMap w1;          // image resolution, cropped to the source size
  ScalarMap w2;
};

struct DetailFusion {
  Image fused;
  std::vector<TapWeights> weights;
};

/// Multi-layer detail fusion: reflect-pad both details to a multiple of 8,
/// extract tap features, derive per-tap weights (activity, block average,
/// soft-max, upsample), blend one candidate per tap, keep the per-pixel
/// maximum candidate and crop back.
DetailFusion fuse_detail_traced(const Image& d1, const Image& d2, const vgg::VggBackbone& backbone,
                                const FusionConfig& config);
Image fuse_detail(const Image& d1, const Image& d2, const vgg::VggBackbone& backbone,
                  const FusionConfig& config);

struct FusionResult {
  Decomposition first;
  Decomposition second;
  Image fused_base;
  DetailFusion detail;
  Image fused;
};

/// Whole pipeline for a registered pair; keeps every intermediate.
FusionResult fuse_pair_traced(const Image& i1, const Image& i2, const vgg::VggBackbone& backbone,
                              const FusionConfig& config);
Image fuse_pair(const Image& i1, const Image& i2, const vgg::VggBackbone& backbone,
                const FusionConfig& config);

}  // namespace fusilli
