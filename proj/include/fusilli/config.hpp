#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fusilli/io.hpp"
#include "fusilli/vgg.hpp"

namespace fusilli {

/// Every tunable of the fusion pipeline.
struct FusionConfig {
  double lambda = 5.0;                    // decomposition smoothness weight
  std::size_t radius = 1;                 // block-average radius r
  std::array<double, 2> alpha{0.5, 0.5};  // base-part weights
  std::vector<std::size_t> taps{1, 2, 3, 4};
  double epsilon = 1e-12;                 // soft-max 0/0 guard
  vgg::InputTransform input;              // detail -> network input mapping
  io::PadMode pad_policy = io::PadMode::reflect;

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;
};

/// Applies one `key=value` setting. Keys: lambda, r, alpha1, alpha2, taps
/// (comma list), epsilon, input_scale, input_offset (one value or three,
/// comma separated), pad_policy (reflect).
void apply_setting(FusionConfig& config, const std::string& key, const std::string& value);

/// Reads a flat key=value file ('#' comments, blank lines ignored) on top of
/// the defaults.
FusionConfig load_config(const std::filesystem::path& path);

/// Canonical key=value rendering; load_config(render) reproduces the config.
std::string render_config(const FusionConfig& config);

}  // namespace fusilli
