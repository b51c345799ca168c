#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fusilli/vgg.hpp"

namespace fusilli::vgg {

/// Raw tensor file: an ASCII header line "C H W" followed by C*H*W
/// little-endian float32 values in channel-major order.
FeatureStack read_tensor(const std::filesystem::path& path);
void write_tensor(const FeatureStack& tensor, const std::filesystem::path& path);

/// Reference activations for one network input.
struct FixtureCase {
  std::string name;
  std::filesystem::path input;
  std::array<std::optional<std::filesystem::path>, kTapCount> taps;
};

/// Parsed fixture manifest. Line-oriented text, '#' starts a comment:
///
///   weights <path>
///   checksum <layer> <crc32 as hex>
///   fixture <case> input <path>
///   fixture <case> tap<1-4> <path>
///
/// Relative paths are resolved against the manifest's directory.
struct FixtureManifest {
  std::optional<std::filesystem::path> weights;
  std::map<std::string, std::uint32_t> checksums;
  std::vector<FixtureCase> cases;
};

FixtureManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const FixtureManifest& manifest, const std::filesystem::path& path);

struct TapDeviation {
  std::string fixture;
  std::size_t tap = 0;
  double max_abs_diff = 0.0;
};

struct FixtureCheck {
  std::vector<std::string> checksum_mismatches;
  std::vector<TapDeviation> deviations;

  double worst_deviation() const noexcept;
};

/// Recomputes checksums against `backbone` and replays every fixture input
/// through it, recording the largest absolute deviation per tap. Shape
/// disagreements raise ShapeError.
FixtureCheck check_fixtures(const FixtureManifest& manifest, const VggBackbone& backbone);

}  // namespace fusilli::vgg
