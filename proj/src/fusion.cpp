#include "fusilli/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "fusilli/io.hpp"

namespace fusilli {

Image fuse_base(const Image& b1, const Image& b2, const std::array<double, 2>& alpha) {
  require_same_shape(b1, b2, "fuse_base");
  Image out(b1.width(), b1.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = alpha[0] * b1[i] + alpha[1] * b2[i];
  }
  return out;
}

ScalarMap activity_map(const vgg::FeatureStack& features) {
  ScalarMap out(features.width(), features.height());
  for (std::size_t c = 0; c < features.channels(); ++c) {
    const auto plane = features.plane(c);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      out[i] += std::abs(static_cast<double>(plane[i]));
    }
  }
  return out;
}

ScalarMap block_average(const ScalarMap& map, std::size_t radius) {
  if (radius == 0) {
    return map;
  }
  const std::size_t w = map.width();
  const std::size_t h = map.height();
  const double divisor = static_cast<double>((2 * radius + 1) * (2 * radius + 1));

  // Separable box sum; zero beyond the border.
  ScalarMap rows(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t lo = x >= radius ? x - radius : 0;
      const std::size_t hi = std::min(w - 1, x + radius);
      double sum = 0.0;
      for (std::size_t s = lo; s <= hi; ++s) sum += map.at(s, y);
      rows.at(x, y) = sum;
    }
  }
  ScalarMap out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t lo = y >= radius ? y - radius : 0;
    const std::size_t hi = std::min(h - 1, y + radius);
    for (std::size_t x = 0; x < w; ++x) {
      double sum = 0.0;
      for (std::size_t s = lo; s <= hi; ++s) sum += rows.at(x, s);
      out.at(x, y) = sum / divisor;
    }
  }
  return out;
}

std::pair<ScalarMap, ScalarMap> softmax_weights(const ScalarMap& m1, const ScalarMap& m2,
                                                double epsilon) {
  require_same_shape(m1, m2, "softmax_weights");
  ScalarMap w1(m1.width(), m1.height());
  ScalarMap w2(m1.width(), m1.height());
  for (std::size_t i = 0; i < m1.size(); ++i) {
    const double total = m1[i] + m2[i];
    if (total > epsilon) {
      w1[i] = m1[i] / total;
      w2[i] = m2[i] / total;
    } else {
      w1[i] = 0.5;
      w2[i] = 0.5;
    }
  }
  return {std::move(w1), std::move(w2)};
}

ScalarMap upsample_weights(const ScalarMap& map, std::size_t factor) {
  if (factor == 0) {
    throw InvalidArgument("upsample factor must be positive");
  }
  ScalarMap out(map.width() * factor, map.height() * factor);
  for (std::size_t y = 0; y < out.height(); ++y) {
    for (std::size_t x = 0; x < out.width(); ++x) {
      out.at(x, y) = map.at(x / factor, y / factor);
    }
  }
  return out;
}

Image fuse_detail_layer(const ScalarMap& w1, const ScalarMap& w2, const Image& d1, const Image& d2) {
  require_same_shape(w1, w2, "fuse_detail_layer");
  require_same_shape(w1, d1, "fuse_detail_layer");
  require_same_shape(d1, d2, "fuse_detail_layer");
  Image out(d1.width(), d1.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = w1[i] * d1[i] + w2[i] * d2[i];
  }
  return out;
}

Image max_select(std::span<const Image> candidates) {
  if (candidates.empty()) {
    throw InvalidArgument("max_select needs at least one candidate");
  }
  Image out = candidates.front();
  for (const Image& c : candidates.subspan(1)) {
    require_same_shape(out, c, "max_select");
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::max(out[i], c[i]);
    }
  }
  return out;
}

Image reconstruct(const Image& fused_base, const Image& fused_detail) {
  require_same_shape(fused_base, fused_detail, "reconstruct");
  Image out(fused_base.width(), fused_base.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = fused_base[i] + fused_detail[i];
  }
  return out;
}

DetailFusion fuse_detail_traced(const Image& d1, const Image& d2, const vgg::VggBackbone& backbone,
                                const FusionConfig& config) {
  require_same_shape(d1, d2, "fuse_detail");
  config.validate();

  const io::PadSpec pad = io::pad_to_multiple(d1.width(), d1.height(), 8);
  const Image padded1 = io::pad_reflect(d1, pad);
  const Image padded2 = io::pad_reflect(d2, pad);

  const std::size_t deepest = *std::max_element(config.taps.begin(), config.taps.end());
  const auto features1 = vgg::extract_features(padded1, backbone, config.input, deepest);
  const auto features2 = vgg::extract_features(padded2, backbone, config.input, deepest);

  DetailFusion result;
  std::vector<Image> candidates;
  for (std::size_t tap : config.taps) {
    const ScalarMap activity1 = block_average(activity_map(features1[tap - 1]), config.radius);
    const ScalarMap activity2 = block_average(activity_map(features2[tap - 1]), config.radius);
    auto [w1, w2] = softmax_weights(activity1, activity2, config.epsilon);
    const ScalarMap full1 = upsample_weights(w1, vgg::tap_stride(tap));
    const ScalarMap full2 = upsample_weights(w2, vgg::tap_stride(tap));
    candidates.push_back(fuse_detail_layer(full1, full2, padded1, padded2));
    result.weights.push_back(TapWeights{tap, std::move(w1), std::move(w2), io::crop_plane(full1, pad),
                                        io::crop_plane(full2, pad)});
  }
  result.fused = io::crop(max_select(candidates), pad);
  return result;
}

Image fuse_detail(const Image& d1, const Image& d2, const vgg::VggBackbone& backbone,
                  const FusionConfig& config) {
  return fuse_detail_traced(d1, d2, backbone, config).fused;
}

FusionResult fuse_pair_traced(const Image& i1, const Image& i2, const vgg::VggBackbone& backbone,
                              const FusionConfig& config) {
  require_same_shape(i1, i2, "fuse_pair");
  config.validate();
  const DecomposeParams params{config.lambda, Boundary::periodic};
  FusionResult result;
  result.first = decompose(i1, params);
  result.second = decompose(i2, params);
  result.fused_base = fuse_base(result.first.base, result.second.base, config.alpha);
  result.detail = fuse_detail_traced(result.first.detail, result.second.detail, backbone, config);
  result.fused = reconstruct(result.fused_base, result.detail.fused);
  return result;
}

Image fuse_pair(const Image& i1, const Image& i2, const vgg::VggBackbone& backbone,
                const FusionConfig& config) {
  return fuse_pair_traced(i1, i2, backbone, config).fused;
}

}  // namespace fusilli
