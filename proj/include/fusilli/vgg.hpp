#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fusilli/image.hpp"

namespace fusilli::vgg {

/// Channel-major (C x H x W) single-precision activation tensor.
class FeatureStack {
 public:
  FeatureStack() = default;
  FeatureStack(std::size_t channels, std::size_t height, std::size_t width, float fill = 0.0f)
      : channels_(channels), height_(height), width_(width),
        data_(channels * height * width, fill) {}
  FeatureStack(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> data);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }

  float& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[(c * height_ + y) * width_ + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[(c * height_ + y) * width_ + x];
  }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }
  std::span<float> plane(std::size_t c) noexcept { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const float> plane(std::size_t c) const noexcept {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  friend bool operator==(const FeatureStack&, const FeatureStack&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> data_;
};

/// 3x3 convolution with weights laid out [out][in][ky][kx].
struct ConvLayer {
  std::string name;
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::vector<float> kernel;
  std::vector<float> bias;

  float weight(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const noexcept {
    return kernel[((o * in_channels + i) * 3 + ky) * 3 + kx];
  }
};

struct Relu {};
struct MaxPool {};

using Layer = std::variant<ConvLayer, Relu, MaxPool>;

inline constexpr std::size_t kTapCount = 4;

/// Tap index i (1-based) carries 64 * 2^(i-1) channels at 1/2^(i-1) resolution.
constexpr std::size_t tap_channels(std::size_t tap) { return std::size_t{64} << (tap - 1); }
constexpr std::size_t tap_stride(std::size_t tap) { return std::size_t{1} << (tap - 1); }

/// Names of the nine convolutions of VGG-19 up to conv4_1, in forward order.
const std::array<std::string, 9>& conv_names();

/// VGG-19 from conv1_1 through relu4_1.
///
/// `taps[i]` is the index into `layers` of the ReLU whose output is
/// relu{i+1}_1. Immutable after construction.
class VggBackbone {
 public:
  /// Builds the layer sequence from the nine convolutions, validating names,
  /// the 3->64->64->128->128->256->256->256->256->512 channel chain and
  /// parameter sizes. Throws IncompatibleModelError otherwise.
  explicit VggBackbone(std::vector<ConvLayer> convs);

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const std::array<std::size_t, kTapCount>& taps() const noexcept { return taps_; }
  std::vector<const ConvLayer*> convolutions() const;

 private:
  std::vector<Layer> layers_;
  std::array<std::size_t, kTapCount> taps_{};
};

/// Reads a VGWF weight file (see README for the byte layout).
VggBackbone load_backbone(const std::filesystem::path& path);

/// Writes a backbone in the VGWF layout; the inverse of load_backbone.
void save_backbone(const VggBackbone& backbone, const std::filesystem::path& path);

/// CRC-32 (zlib polynomial) of a layer's weights followed by its biases,
/// both as little-endian float32 bytes exactly as stored in the VGWF file.
std::uint32_t layer_checksum(const ConvLayer& layer);

/// Threads the convolution kernel may use inside one call. Batch drivers that
/// run several forward passes concurrently set this to 1.
void set_kernel_threads(int threads);

FeatureStack conv3x3_same(const FeatureStack& input, const ConvLayer& layer);
FeatureStack relu(FeatureStack input);
FeatureStack maxpool2(const FeatureStack& input);

/// Maps one detail channel to the three network input channels.
struct InputTransform {
  float scale = 1.0f;
  std::array<float, 3> offset{0.0f, 0.0f, 0.0f};
};

/// Three-channel network input built from `detail`: channel c holds
/// detail * scale + offset[c].
FeatureStack network_input(const Image& detail, const InputTransform& transform = {});

/// Runs the layer sequence on a prepared 3-channel input and returns the
/// activations at taps 1..deepest_tap. Height and width must be multiples of
/// 2^(deepest_tap-1).
std::vector<FeatureStack> forward_taps(const FeatureStack& input, const VggBackbone& backbone,
                                       std::size_t deepest_tap = kTapCount);

/// Activations at relu1_1, relu2_1, relu3_1 and relu4_1 (or up to `deepest_tap`)
/// for a detail image. Dimensions must be multiples of 8, else
/// PaddingContractError.
std::vector<FeatureStack> extract_features(const Image& detail, const VggBackbone& backbone,
                                           const InputTransform& transform = {},
                                           std::size_t deepest_tap = kTapCount);

}  // namespace fusilli::vgg
