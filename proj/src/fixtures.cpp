#include "fusilli/fixtures.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fusilli::vgg {

FeatureStack read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open tensor " + path.string());
  }
  std::string header;
  if (!std::getline(in, header)) {
    throw CorruptionError(path.string() + ": missing tensor header");
  }
  std::istringstream fields(header);
  long long c = -1, h = -1, w = -1;
  std::string extra;
  if (!(fields >> c >> h >> w) || (fields >> extra) || c < 0 || h < 0 || w < 0) {
    throw FormatError(path.string() + ": tensor header must be 'C H W', got '" + header + "'");
  }
  const std::size_t count = static_cast<std::size_t>(c * h * w);
  std::vector<unsigned char> raw(count * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw CorruptionError(path.string() + ": truncated tensor payload");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw CorruptionError(path.string() + ": trailing bytes after tensor payload");
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                               static_cast<std::uint32_t>(raw[4 * i + 1]) << 8 |
                               static_cast<std::uint32_t>(raw[4 * i + 2]) << 16 |
                               static_cast<std::uint32_t>(raw[4 * i + 3]) << 24;
    values[i] = std::bit_cast<float>(bits);
  }
  return FeatureStack(static_cast<std::size_t>(c), static_cast<std::size_t>(h),
                      static_cast<std::size_t>(w), std::move(values));
}

void write_tensor(const FeatureStack& tensor, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write tensor " + path.string());
  }
  out << tensor.channels() << ' ' << tensor.height() << ' ' << tensor.width() << '\n';
  for (float v : tensor.values()) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    const char bytes[4] = {static_cast<char>(bits), static_cast<char>(bits >> 8),
                           static_cast<char>(bits >> 16), static_cast<char>(bits >> 24)};
    out.write(bytes, 4);
  }
  if (!out) {
    throw IoError("write failed for tensor " + path.string());
  }
}

FixtureManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open fixture manifest " + path.string());
  }
  const std::filesystem::path root = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path candidate(p);
    return candidate.is_absolute() ? candidate : root / candidate;
  };
  auto case_named = [](FixtureManifest& m, const std::string& name) -> FixtureCase& {
    auto it = std::find_if(m.cases.begin(), m.cases.end(),
                           [&](const FixtureCase& c) { return c.name == name; });
    if (it != m.cases.end()) return *it;
    m.cases.push_back(FixtureCase{name, {}, {}});
    return m.cases.back();
  };

  FixtureManifest manifest;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string keyword;
    if (!(fields >> keyword)) continue;
    auto fail = [&](const std::string& why) {
      return FormatError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    if (keyword == "weights") {
      std::string p;
      if (!(fields >> p)) throw fail("weights needs a path");
      manifest.weights = resolve(p);
    } else if (keyword == "checksum") {
      std::string layer, hex;
      if (!(fields >> layer >> hex)) throw fail("checksum needs a layer and a value");
      try {
        std::size_t used = 0;
        const unsigned long value = std::stoul(hex, &used, 16);
        if (used != hex.size() || value > 0xffffffffUL) throw fail("bad checksum '" + hex + "'");
        manifest.checksums[layer] = static_cast<std::uint32_t>(value);
      } catch (const std::logic_error&) {
        throw fail("bad checksum '" + hex + "'");
      }
    } else if (keyword == "fixture") {
      std::string name, role, p;
      if (!(fields >> name >> role >> p)) throw fail("fixture needs a case name, role and path");
      FixtureCase& fixture = case_named(manifest, name);
      if (role == "input") {
        fixture.input = resolve(p);
      } else if (role.size() == 4 && role.starts_with("tap") && role[3] >= '1' && role[3] <= '4') {
        fixture.taps[static_cast<std::size_t>(role[3] - '1')] = resolve(p);
      } else {
        throw fail("unknown fixture role '" + role + "'");
      }
    } else {
      throw fail("unknown keyword '" + keyword + "'");
    }
  }
  for (const FixtureCase& c : manifest.cases) {
    if (c.input.empty()) {
      throw FormatError(path.string() + ": fixture '" + c.name + "' has no input tensor");
    }
  }
  return manifest;
}

void write_manifest(const FixtureManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write fixture manifest " + path.string());
  }
  // Paths below the manifest's directory are written relative to it.
  const std::filesystem::path root = path.parent_path();
  auto shown = [&](const std::filesystem::path& p) {
    const std::filesystem::path rel = p.lexically_relative(root);
    const bool below = !rel.empty() && *rel.begin() != "..";
    return (below && p.is_absolute() == root.is_absolute() ? rel : p).string();
  };
  if (manifest.weights) out << "weights " << shown(*manifest.weights) << '\n';
  for (const auto& [layer, crc] : manifest.checksums) {
    out << "checksum " << layer << ' ' << std::hex << std::setw(8) << std::setfill('0') << crc
        << std::dec << '\n';
  }
  for (const FixtureCase& c : manifest.cases) {
    out << "fixture " << c.name << " input " << shown(c.input) << '\n';
    for (std::size_t t = 0; t < kTapCount; ++t) {
      if (c.taps[t]) out << "fixture " << c.name << " tap" << t + 1 << ' ' << shown(*c.taps[t]) << '\n';
    }
  }
}

double FixtureCheck::worst_deviation() const noexcept {
  double worst = 0.0;
  for (const auto& d : deviations) worst = std::max(worst, d.max_abs_diff);
  return worst;
}

FixtureCheck check_fixtures(const FixtureManifest& manifest, const VggBackbone& backbone) {
  FixtureCheck check;
  for (const ConvLayer* conv : backbone.convolutions()) {
    const auto it = manifest.checksums.find(conv->name);
    if (it != manifest.checksums.end() && it->second != layer_checksum(*conv)) {
      check.checksum_mismatches.push_back(conv->name);
    }
  }
  for (const FixtureCase& fixture : manifest.cases) {
    std::size_t deepest = 0;
    for (std::size_t t = 0; t < kTapCount; ++t) {
      if (fixture.taps[t]) deepest = t + 1;
    }
    if (deepest == 0) continue;
    const auto activations = forward_taps(read_tensor(fixture.input), backbone, deepest);
    for (std::size_t t = 0; t < deepest; ++t) {
      if (!fixture.taps[t]) continue;
      const FeatureStack expected = read_tensor(*fixture.taps[t]);
      const FeatureStack& actual = activations[t];
      if (expected.channels() != actual.channels() || expected.height() != actual.height() ||
          expected.width() != actual.width()) {
        throw ShapeError("fixture '" + fixture.name + "' tap" + std::to_string(t + 1) +
                         " shape differs from the engine output");
      }
      double worst = 0.0;
      for (std::size_t i = 0; i < actual.values().size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(actual.values()[i]) - expected.values()[i]));
      }
      check.deviations.push_back({fixture.name, t + 1, worst});
    }
  }
  return check;
}

}  // namespace fusilli::vgg
