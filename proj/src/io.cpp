#include "fusilli/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace fusilli::io {
namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool has_png_signature(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos,
                      const std::filesystem::path& path) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
    token.push_back(static_cast<char>(bytes[pos++]));
  }
  if (token.empty()) {
    throw CorruptionError("truncated PGM header in " + path.string());
  }
  return token;
}

std::size_t pnm_number(const std::vector<std::uint8_t>& bytes, std::size_t& pos,
                       const std::filesystem::path& path) {
  const std::string token = pnm_token(bytes, pos, path);
  if (!std::all_of(token.begin(), token.end(), [](char c) { return std::isdigit(c); })) {
    throw FormatError("malformed PGM header field '" + token + "' in " + path.string());
  }
  return std::stoul(token);
}

Image read_pgm(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  std::size_t pos = 2;
  const std::size_t width = pnm_number(bytes, pos, path);
  const std::size_t height = pnm_number(bytes, pos, path);
  const std::size_t maxval = pnm_number(bytes, pos, path);
  if (width == 0 || height == 0) {
    throw FormatError("zero-sized PGM " + path.string());
  }
  if (maxval == 0 || maxval > 255) {
    throw FormatError("only 8-bit PGM is supported (maxval " + std::to_string(maxval) + ") in " +
                      path.string());
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw CorruptionError("truncated PGM header in " + path.string());
  }
  ++pos;  // single whitespace before raster
  if (bytes.size() - pos < width * height) {
    throw CorruptionError("truncated PGM raster in " + path.string());
  }
  Image image(width, height);
  const double scale = static_cast<double>(maxval);
  for (std::size_t i = 0; i < width * height; ++i) {
    image[i] = static_cast<double>(bytes[pos + i]) / scale;
  }
  return image;
}

Image read_png(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw FormatError("unreadable PNG " + path.string() + ": " + png.message);
  }
  if (png.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&png);
    throw FormatError("16-bit PNG is not supported: " + path.string());
  }
  const bool colour = png.format & PNG_FORMAT_FLAG_COLOR;
  const bool alpha = png.format & PNG_FORMAT_FLAG_ALPHA;
  png.format = colour ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB)
                      : (alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY);
  const std::size_t channels = PNG_IMAGE_SAMPLE_CHANNELS(png.format);
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw CorruptionError("truncated or corrupt PNG " + path.string() + ": " + message);
  }
  Image image(png.width, png.height);
  for (std::size_t i = 0; i < image.size(); ++i) {
    const std::uint8_t* px = buffer.data() + i * channels;
    if (colour) {
      image[i] = (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
    } else {
      image[i] = px[0] / 255.0;
    }
  }
  return image;
}

void write_pgm(const std::vector<std::uint8_t>& bytes, std::size_t width, std::size_t height,
               const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

void write_png(const std::vector<std::uint8_t>& bytes, std::size_t width, std::size_t height,
               const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(width);
  png.height = static_cast<png_uint_32>(height);
  png.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + png.message);
  }
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return static_cast<std::size_t>(-i);
  if (i >= static_cast<std::ptrdiff_t>(n)) return 2 * (n - 1) - static_cast<std::size_t>(i);
  return static_cast<std::size_t>(i);
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = slurp(path);
  if (has_png_signature(bytes)) {
    return read_png(bytes, path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
    return read_pgm(bytes, path);
  }
  if (bytes.size() < 8) {
    throw CorruptionError("file too short to identify: " + path.string());
  }
  throw FormatError("unsupported image format: " + path.string());
}

std::uint8_t quantize(double value) noexcept {
  // Half steps round up even when rounding error left them a hair below.
  constexpr double kTieSlack = 1e-9;
  const double clamped = std::clamp(value, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::min(255.0, std::floor(clamped * 255.0 + 0.5 + kTieSlack)));
}

std::vector<std::uint8_t> quantize(const Image& image) {
  std::vector<std::uint8_t> bytes(image.size());
  std::transform(image.pixels().begin(), image.pixels().end(), bytes.begin(),
                 [](double v) { return quantize(v); });
  return bytes;
}

Image quantized(const Image& image) {
  Image out(image.width(), image.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = quantize(image[i]) / 255.0;
  return out;
}

void write_image(const Image& image, const std::filesystem::path& path) {
  if (image.empty()) {
    throw ShapeError("refusing to write an empty image to " + path.string());
  }
  const auto bytes = quantize(image);
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") {
    write_png(bytes, image.width(), image.height(), path);
  } else {
    write_pgm(bytes, image.width(), image.height(), path);
  }
}

PadSpec pad_to_multiple(std::size_t width, std::size_t height, std::size_t multiple) {
  const std::size_t extra_w = (multiple - width % multiple) % multiple;
  const std::size_t extra_h = (multiple - height % multiple) % multiple;
  return PadSpec{extra_w / 2, extra_w - extra_w / 2, extra_h / 2, extra_h - extra_h / 2,
                 PadMode::reflect};
}

Image pad_reflect(const Image& image, const PadSpec& spec) {
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  const bool bad_x = (spec.left > 0 || spec.right > 0) && (spec.left >= w || spec.right >= w);
  const bool bad_y = (spec.top > 0 || spec.bottom > 0) && (spec.top >= h || spec.bottom >= h);
  if (bad_x || bad_y) {
    throw ShapeError("reflect padding (" + std::to_string(spec.left) + "," +
                     std::to_string(spec.right) + "," + std::to_string(spec.top) + "," +
                     std::to_string(spec.bottom) + ") must be smaller than image " +
                     shape_string(w, h));
  }
  const std::size_t out_w = w + spec.left + spec.right;
  const std::size_t out_h = h + spec.top + spec.bottom;
  Image out(out_w, out_h);
  for (std::size_t y = 0; y < out_h; ++y) {
    const std::size_t sy =
        reflect_index(static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(spec.top), h);
    for (std::size_t x = 0; x < out_w; ++x) {
      const std::size_t sx = reflect_index(
          static_cast<std::ptrdiff_t>(x) - static_cast<std::ptrdiff_t>(spec.left), w);
      out.at(x, y) = image.at(sx, sy);
    }
  }
  return out;
}

Image crop(const Image& image, const PadSpec& spec) { return crop_plane(image, spec); }

}  // namespace fusilli::io
