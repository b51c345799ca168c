#include "fusilli/vgg.hpp"

#include <cblas.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace fusilli::vgg {
namespace {

constexpr std::array<char, 4> kMagic{'V', 'G', 'W', 'F'};
constexpr std::uint32_t kVersion = 1;
constexpr std::array<std::size_t, 10> kChannelChain{3, 64, 64, 128, 128, 256, 256, 256, 256, 512};

// Upper bound on the im2col scratch for one row tile, in floats.
constexpr std::size_t kColumnBudget = std::size_t{1} << 21;

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::string origin)
      : bytes_(bytes), origin_(std::move(origin)) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }

  std::vector<float> f32s(std::uint64_t count, const char* what) {
    if (count > (bytes_.size() - pos_) / 4) {
      throw CorruptionError(origin_ + ": truncated " + what);
    }
    std::vector<float> out(static_cast<std::size_t>(count));
    for (auto& v : out) v = std::bit_cast<float>(u32(what));
    return out;
  }

  std::string text(std::size_t length, const char* what) {
    need(length, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), length);
    pos_ += length;
    return s;
  }

  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CorruptionError(origin_ + ": truncated " + what);
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32s(std::vector<std::uint8_t>& out, std::span<const float> values) {
  for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

}  // namespace

FeatureStack::FeatureStack(std::size_t channels, std::size_t height, std::size_t width,
                           std::vector<float> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != channels_ * height_ * width_) {
    throw ShapeError("feature stack payload of " + std::to_string(data_.size()) +
                     " values does not match " + std::to_string(channels_) + "x" +
                     std::to_string(height_) + "x" + std::to_string(width_));
  }
}

const std::array<std::string, 9>& conv_names() {
  static const std::array<std::string, 9> names{"conv1_1", "conv1_2", "conv2_1", "conv2_2", "conv3_1",
                                                "conv3_2", "conv3_3", "conv3_4", "conv4_1"};
  return names;
}

VggBackbone::VggBackbone(std::vector<ConvLayer> convs) {
  const auto& names = conv_names();
  if (convs.size() != names.size()) {
    throw IncompatibleModelError("expected " + std::to_string(names.size()) +
                                 " convolution layers (conv1_1..conv4_1), got " +
                                 std::to_string(convs.size()));
  }
  for (std::size_t i = 0; i < convs.size(); ++i) {
    const ConvLayer& c = convs[i];
    if (c.name != names[i]) {
      throw IncompatibleModelError("layer " + std::to_string(i) + " is '" + c.name + "', expected '" +
                                   names[i] + "'");
    }
    if (c.in_channels != kChannelChain[i] || c.out_channels != kChannelChain[i + 1]) {
      throw IncompatibleModelError(c.name + " maps " + std::to_string(c.in_channels) + "->" +
                                   std::to_string(c.out_channels) + " channels, expected " +
                                   std::to_string(kChannelChain[i]) + "->" +
                                   std::to_string(kChannelChain[i + 1]));
    }
    if (c.kernel.size() != c.out_channels * c.in_channels * 9 || c.bias.size() != c.out_channels) {
      throw IncompatibleModelError(c.name + ": parameter sizes do not match a 3x3 kernel");
    }
  }

  auto push_conv = [&](std::size_t i) {
    layers_.emplace_back(std::move(convs[i]));
    layers_.emplace_back(Relu{});
  };
  // conv1_1 relu [tap1] conv1_2 relu pool
  push_conv(0);
  taps_[0] = layers_.size() - 1;
  push_conv(1);
  layers_.emplace_back(MaxPool{});
  // conv2_1 relu [tap2] conv2_2 relu pool
  push_conv(2);
  taps_[1] = layers_.size() - 1;
  push_conv(3);
  layers_.emplace_back(MaxPool{});
  // conv3_1 relu [tap3] conv3_2..conv3_4 relu pool
  push_conv(4);
  taps_[2] = layers_.size() - 1;
  push_conv(5);
  push_conv(6);
  push_conv(7);
  layers_.emplace_back(MaxPool{});
  // conv4_1 relu [tap4]
  push_conv(8);
  taps_[3] = layers_.size() - 1;
}

std::vector<const ConvLayer*> VggBackbone::convolutions() const {
  std::vector<const ConvLayer*> out;
  for (const Layer& layer : layers_) {
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) out.push_back(conv);
  }
  return out;
}

VggBackbone load_backbone(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open weight file " + path.string());
  }
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  const std::string origin = path.string();
  if (bytes.size() < kMagic.size() ||
      !std::equal(kMagic.begin(), kMagic.end(), bytes.begin(),
                  [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
    throw FormatError(origin + ": not a VGWF weight file (bad magic)");
  }
  Reader reader{std::span<const std::uint8_t>(bytes).subspan(kMagic.size()), origin};
  const std::uint32_t version = reader.u32("version");
  if (version != kVersion) {
    throw FormatError(origin + ": unsupported VGWF version " + std::to_string(version));
  }
  const std::uint32_t count = reader.u32("layer count");
  if (count != conv_names().size()) {
    throw IncompatibleModelError(origin + ": expected 9 layers, file declares " + std::to_string(count));
  }

  std::vector<ConvLayer> convs;
  convs.reserve(count);
  for (std::uint32_t l = 0; l < count; ++l) {
    ConvLayer layer;
    const std::uint32_t name_len = reader.u32("layer name length");
    layer.name = reader.text(name_len, "layer name");
    const std::uint64_t out_ch = reader.u32("output channels");
    const std::uint64_t in_ch = reader.u32("input channels");
    const std::uint32_t kh = reader.u32("kernel height");
    const std::uint32_t kw = reader.u32("kernel width");
    if (kh != 3 || kw != 3) {
      throw IncompatibleModelError(origin + ": " + layer.name + " has a " + std::to_string(kh) + "x" +
                                   std::to_string(kw) + " kernel, expected 3x3");
    }
    layer.out_channels = static_cast<std::size_t>(out_ch);
    layer.in_channels = static_cast<std::size_t>(in_ch);
    layer.kernel = reader.f32s(out_ch * in_ch * 9, "kernel weights");
    layer.bias = reader.f32s(out_ch, "biases");
    convs.push_back(std::move(layer));
  }
  if (!reader.done()) {
    throw CorruptionError(origin + ": trailing bytes after the last layer");
  }
  return VggBackbone(std::move(convs));
}

void save_backbone(const VggBackbone& backbone, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(kMagic.begin(), kMagic.end());
  const auto convs = backbone.convolutions();
  put_u32(bytes, kVersion);
  put_u32(bytes, static_cast<std::uint32_t>(convs.size()));
  for (const ConvLayer* c : convs) {
    put_u32(bytes, static_cast<std::uint32_t>(c->name.size()));
    bytes.insert(bytes.end(), c->name.begin(), c->name.end());
    put_u32(bytes, static_cast<std::uint32_t>(c->out_channels));
    put_u32(bytes, static_cast<std::uint32_t>(c->in_channels));
    put_u32(bytes, 3);
    put_u32(bytes, 3);
    put_f32s(bytes, c->kernel);
    put_f32s(bytes, c->bias);
  }
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("cannot write weight file " + path.string());
  }
}

std::uint32_t layer_checksum(const ConvLayer& layer) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(4 * (layer.kernel.size() + layer.bias.size()));
  put_f32s(bytes, layer.kernel);
  put_f32s(bytes, layer.bias);
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

void set_kernel_threads(int threads) { openblas_set_num_threads(std::max(threads, 1)); }

FeatureStack conv3x3_same(const FeatureStack& input, const ConvLayer& layer) {
  if (input.channels() != layer.in_channels) {
    throw ShapeError(layer.name + ": input has " + std::to_string(input.channels()) +
                     " channels, layer expects " + std::to_string(layer.in_channels));
  }
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t k = layer.in_channels * 9;
  FeatureStack output(layer.out_channels, h, w);
  if (h == 0 || w == 0) {
    return output;
  }

  for (std::size_t o = 0; o < layer.out_channels; ++o) {
    std::fill(output.plane(o).begin(), output.plane(o).end(), layer.bias[o]);
  }

  // im2col over strips of rows, then one GEMM per strip writing straight into
  // the output planes (leading dimension h*w).
  const std::size_t rows_per_tile = std::clamp<std::size_t>(kColumnBudget / (k * w), 1, h);
  std::vector<float> columns(k * rows_per_tile * w);
  for (std::size_t y0 = 0; y0 < h; y0 += rows_per_tile) {
    const std::size_t rows = std::min(rows_per_tile, h - y0);
    const std::size_t n = rows * w;
    for (std::size_t c = 0; c < layer.in_channels; ++c) {
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          float* dst = columns.data() + ((c * 3 + ky) * 3 + kx) * n;
          for (std::size_t r = 0; r < rows; ++r) {
            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y0 + r + ky) - 1;
            float* row = dst + r * w;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
              std::fill(row, row + w, 0.0f);
              continue;
            }
            const float* src = input.plane(c).data() + static_cast<std::size_t>(sy) * w;
            // x + kx - 1 must stay inside [0, w)
            if (kx == 0) {
              row[0] = 0.0f;
              std::copy(src, src + w - 1, row + 1);
            } else if (kx == 1) {
              std::copy(src, src + w, row);
            } else {
              std::copy(src + 1, src + w, row);
              row[w - 1] = 0.0f;
            }
          }
        }
      }
    }
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(layer.out_channels),
                static_cast<int>(n), static_cast<int>(k), 1.0f, layer.kernel.data(), static_cast<int>(k),
                columns.data(), static_cast<int>(n), 1.0f, &output.at(0, y0, 0),
                static_cast<int>(h * w));
  }
  return output;
}

FeatureStack relu(FeatureStack input) {
  for (float& v : input.values()) v = std::max(v, 0.0f);
  return input;
}

FeatureStack maxpool2(const FeatureStack& input) {
  if (input.height() % 2 != 0 || input.width() % 2 != 0) {
    throw ShapeError("maxpool2: odd spatial size " + std::to_string(input.width()) + "x" +
                     std::to_string(input.height()) + " (input was not padded correctly)");
  }
  const std::size_t oh = input.height() / 2;
  const std::size_t ow = input.width() / 2;
  FeatureStack out(input.channels(), oh, ow);
  for (std::size_t c = 0; c < input.channels(); ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        out.at(c, y, x) = std::max({input.at(c, 2 * y, 2 * x), input.at(c, 2 * y, 2 * x + 1),
                                    input.at(c, 2 * y + 1, 2 * x), input.at(c, 2 * y + 1, 2 * x + 1)});
      }
    }
  }
  return out;
}

FeatureStack network_input(const Image& detail, const InputTransform& transform) {
  FeatureStack input(3, detail.height(), detail.width());
  for (std::size_t c = 0; c < 3; ++c) {
    auto plane = input.plane(c);
    for (std::size_t i = 0; i < detail.size(); ++i) {
      plane[i] = static_cast<float>(detail[i]) * transform.scale + transform.offset[c];
    }
  }
  return input;
}

std::vector<FeatureStack> forward_taps(const FeatureStack& input, const VggBackbone& backbone,
                                       std::size_t deepest_tap) {
  if (deepest_tap < 1 || deepest_tap > kTapCount) {
    throw InvalidArgument("deepest tap must be in 1..4, got " + std::to_string(deepest_tap));
  }
  if (input.channels() != 3) {
    throw ShapeError("network input must have 3 channels, got " + std::to_string(input.channels()));
  }
  const std::size_t align = tap_stride(deepest_tap);
  if (input.height() % align != 0 || input.width() % align != 0 || input.height() == 0 ||
      input.width() == 0) {
    throw PaddingContractError("network input " + std::to_string(input.width()) + "x" +
                               std::to_string(input.height()) + " is not a nonzero multiple of " +
                               std::to_string(align));
  }

  std::vector<FeatureStack> taps;
  taps.reserve(deepest_tap);
  const auto& layers = backbone.layers();
  const std::size_t last = backbone.taps()[deepest_tap - 1];
  FeatureStack current = input;
  for (std::size_t i = 0; i <= last; ++i) {
    current = std::visit(
        [&](const auto& layer) -> FeatureStack {
          using T = std::decay_t<decltype(layer)>;
          if constexpr (std::is_same_v<T, ConvLayer>) {
            return conv3x3_same(current, layer);
          } else if constexpr (std::is_same_v<T, Relu>) {
            return relu(std::move(current));
          } else {
            return maxpool2(current);
          }
        },
        layers[i]);
    if (std::find(backbone.taps().begin(), backbone.taps().end(), i) != backbone.taps().end()) {
      taps.push_back(current);
    }
  }
  return taps;
}

std::vector<FeatureStack> extract_features(const Image& detail, const VggBackbone& backbone,
                                           const InputTransform& transform, std::size_t deepest_tap) {
  if (detail.empty() || detail.width() % 8 != 0 || detail.height() % 8 != 0) {
    throw PaddingContractError("detail image " + shape_string(detail.width(), detail.height()) +
                               " must be padded to a multiple of 8 before feature extraction");
  }
  return forward_taps(network_input(detail, transform), backbone, deepest_tap);
}

}  // namespace fusilli::vgg
