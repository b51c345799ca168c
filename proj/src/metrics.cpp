#include "fusilli/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace fusilli::metrics {
namespace {

std::vector<double> gaussian_kernel(std::size_t size, double sigma) {
  std::vector<double> k(size);
  const double centre = static_cast<double>(size / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - centre;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += k[i];
  }
  for (double& v : k) v /= total;
  return k;
}

// Separable "valid" correlation with a symmetric kernel.
Image filter_valid(const Image& in, const std::vector<double>& k) {
  const std::size_t n = k.size();
  const std::size_t ow = in.width() - n + 1;
  const std::size_t oh = in.height() - n + 1;
  Image horizontal(ow, in.height());
  for (std::size_t y = 0; y < in.height(); ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * in.at(x + i, y);
      horizontal.at(x, y) = s;
    }
  }
  Image out(ow, oh);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * horizontal.at(x, y + i);
      out.at(x, y) = s;
    }
  }
  return out;
}

Image product(const Image& a, const Image& b) {
  Image out(a.width(), a.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

double sigmoid(double gamma, double kappa, double sigma, double x) {
  return gamma / (1.0 + std::exp(kappa * (x - sigma)));
}

// Entropy of the labels in `keys`, summed in order of first appearance so that
// identical label sequences give bitwise identical results.
template <std::size_t N>
double window_entropy(const std::array<std::size_t, N>& keys, std::size_t count) {
  double h = 0.0;
  const double n = static_cast<double>(count);
  for (std::size_t j = 0; j < count; ++j) {
    bool first = true;
    std::size_t occurrences = 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (keys[i] == keys[j]) {
        if (i < j) {
          first = false;
          break;
        }
        ++occurrences;
      }
    }
    if (!first) continue;
    const double p = static_cast<double>(occurrences) / n;
    h -= p * std::log(p);
  }
  return h;
}

constexpr std::size_t kMaxWindowSamples = 81;  // up to 9x9 windows

}  // namespace

double ssim(const Image& a, const Image& b, const SsimParams& params) {
  require_same_shape(a, b, "ssim");
  if (a.empty()) {
    throw ShapeError("ssim: empty image");
  }
  std::size_t window = std::min({params.window, a.width(), a.height()});
  if (window % 2 == 0) --window;
  const auto k = gaussian_kernel(window, params.sigma);
  const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
  const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);

  const Image mu_a = filter_valid(a, k);
  const Image mu_b = filter_valid(b, k);
  const Image aa = filter_valid(product(a, a), k);
  const Image bb = filter_valid(product(b, b), k);
  const Image ab = filter_valid(product(a, b), k);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double var_a = aa[i] - ma * ma;
    const double var_b = bb[i] - mb * mb;
    const double cov = ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double ssim_a(const Image& fused, const Image& i1, const Image& i2, const SsimParams& params) {
  require_same_shape(fused, i1, "ssim_a");
  require_same_shape(fused, i2, "ssim_a");
  return (ssim(fused, i1, params) + ssim(fused, i2, params)) * 0.5;
}

GradientField sobel(const Image& image) {
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  auto px = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
    x = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(w) - 1);
    y = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(h) - 1);
    return image.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
  };
  GradientField field{Image(w, h), Image(w, h)};
  for (std::size_t yu = 0; yu < h; ++yu) {
    for (std::size_t xu = 0; xu < w; ++xu) {
      const auto x = static_cast<std::ptrdiff_t>(xu);
      const auto y = static_cast<std::ptrdiff_t>(yu);
      const double gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
      field.strength.at(xu, yu) = std::sqrt(gx * gx + gy * gy);
      double angle = std::atan2(gy, gx);
      if (angle < 0.0) angle += std::numbers::pi;
      if (angle >= std::numbers::pi) angle -= std::numbers::pi;
      field.orientation.at(xu, yu) = angle;
    }
  }
  return field;
}

Image edge_preservation(const GradientField& source, const GradientField& fused, const NabfParams& params) {
  require_same_shape(source.strength, fused.strength, "edge_preservation");
  constexpr double half_pi = std::numbers::pi / 2.0;
  Image q(source.strength.width(), source.strength.height());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double gs = source.strength[i];
    const double gf = fused.strength[i];
    double strength_ratio = 1.0;
    if (gs > gf) {
      strength_ratio = gf / gs;
    } else if (gf > gs) {
      strength_ratio = gs / gf;
    }
    double delta = std::abs(source.orientation[i] - fused.orientation[i]);
    delta = std::min(delta, std::numbers::pi - delta);
    const double orientation_agreement = 1.0 - delta / half_pi;
    q[i] = sigmoid(params.gamma_g, params.kappa_g, params.sigma_g, strength_ratio) *
           sigmoid(params.gamma_a, params.kappa_a, params.sigma_a, orientation_agreement);
  }
  return q;
}

double nabf(const Image& fused, const Image& i1, const Image& i2, const NabfParams& params) {
  require_same_shape(fused, i1, "nabf");
  require_same_shape(fused, i2, "nabf");
  const GradientField gf = sobel(fused);
  const GradientField g1 = sobel(i1);
  const GradientField g2 = sobel(i2);
  const Image q1 = edge_preservation(g1, gf, params);
  const Image q2 = edge_preservation(g2, gf, params);

  double artifacts = 0.0;
  double weight_total = 0.0;
  for (std::size_t i = 0; i < fused.size(); ++i) {
    const double w = std::max(g1.strength[i], g2.strength[i]);
    weight_total += w;
    if (gf.strength[i] > g1.strength[i] && gf.strength[i] > g2.strength[i]) {
      artifacts += w * (1.0 - q1[i]) * (1.0 - q2[i]);
    }
  }
  return weight_total > 0.0 ? artifacts / weight_total : 0.0;
}

Image dct_features(const Image& image, std::size_t block) {
  if (block == 0 || image.width() < block || image.height() < block) {
    throw ShapeError("dct_features: image " + shape_string(image.width(), image.height()) +
                     " is smaller than one " + std::to_string(block) + "x" + std::to_string(block) +
                     " block");
  }
  const std::size_t bw = image.width() / block;
  const std::size_t bh = image.height() / block;
  // basis[u][i] = a(u) cos((2i+1) u pi / 2N)
  std::vector<double> basis(block * block);
  for (std::size_t u = 0; u < block; ++u) {
    const double a = u == 0 ? std::sqrt(1.0 / static_cast<double>(block))
                            : std::sqrt(2.0 / static_cast<double>(block));
    for (std::size_t i = 0; i < block; ++i) {
      basis[u * block + i] =
          a * std::cos((2.0 * static_cast<double>(i) + 1.0) * static_cast<double>(u) * std::numbers::pi /
                       (2.0 * static_cast<double>(block)));
    }
  }
  Image out(bw * block, bh * block);
  std::vector<double> rows(block * block);
  for (std::size_t by = 0; by < bh; ++by) {
    for (std::size_t bx = 0; bx < bw; ++bx) {
      // transform along x, then along y
      for (std::size_t y = 0; y < block; ++y) {
        for (std::size_t u = 0; u < block; ++u) {
          double s = 0.0;
          for (std::size_t x = 0; x < block; ++x) s += basis[u * block + x] * image.at(bx * block + x, by * block + y);
          rows[y * block + u] = s;
        }
      }
      for (std::size_t v = 0; v < block; ++v) {
        for (std::size_t u = 0; u < block; ++u) {
          double s = 0.0;
          for (std::size_t y = 0; y < block; ++y) s += basis[v * block + y] * rows[y * block + u];
          out.at(bx * block + u, by * block + v) = (u == 0 && v == 0) ? 0.0 : std::abs(s);
        }
      }
    }
  }
  return out;
}

Image wavelet_features(const Image& image) {
  const std::size_t w = image.width() / 2;
  const std::size_t h = image.height() / 2;
  if (w == 0 || h == 0) {
    throw ShapeError("wavelet_features: image " + shape_string(image.width(), image.height()) +
                     " is smaller than 2x2");
  }
  Image out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double a = image.at(2 * x, 2 * y);
      const double b = image.at(2 * x + 1, 2 * y);
      const double c = image.at(2 * x, 2 * y + 1);
      const double d = image.at(2 * x + 1, 2 * y + 1);
      const double lh = (a - b + c - d) * 0.5;
      const double hl = (a + b - c - d) * 0.5;
      const double hh = (a - b - c + d) * 0.5;
      out.at(x, y) = std::sqrt(lh * lh + hl * hl + hh * hh);
    }
  }
  return out;
}

double windowed_nmi(const Image& a, const Image& b, const FmiParams& params) {
  require_same_shape(a, b, "windowed_nmi");
  const std::size_t n = params.window;
  if (n == 0 || n * n > kMaxWindowSamples) {
    throw InvalidArgument("FMI window must be between 1 and 9");
  }
  if (params.bins < 2) {
    throw InvalidArgument("FMI needs at least two histogram bins");
  }
  if (a.width() < n || a.height() < n) {
    throw ShapeError("windowed_nmi: feature image " + shape_string(a.width(), a.height()) +
                     " is smaller than the window");
  }
  const std::size_t count = n * n;
  const double bins = static_cast<double>(params.bins);

  auto quantise = [&](const Image& img, std::size_t x0, std::size_t y0, std::array<std::size_t, kMaxWindowSamples>& out) {
    double lo = img.at(x0, y0);
    double hi = lo;
    for (std::size_t dy = 0; dy < n; ++dy) {
      for (std::size_t dx = 0; dx < n; ++dx) {
        lo = std::min(lo, img.at(x0 + dx, y0 + dy));
        hi = std::max(hi, img.at(x0 + dx, y0 + dy));
      }
    }
    const double span = hi - lo;
    for (std::size_t dy = 0; dy < n; ++dy) {
      for (std::size_t dx = 0; dx < n; ++dx) {
        std::size_t bin = 0;
        if (span > 0.0) {
          const double t = (img.at(x0 + dx, y0 + dy) - lo) / span;
          bin = std::min(params.bins - 1, static_cast<std::size_t>(t * bins));
        }
        out[dy * n + dx] = bin;
      }
    }
  };

  std::array<std::size_t, kMaxWindowSamples> ka{};
  std::array<std::size_t, kMaxWindowSamples> kb{};
  std::array<std::size_t, kMaxWindowSamples> joint{};
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t y = 0; y + n <= a.height(); ++y) {
    for (std::size_t x = 0; x + n <= a.width(); ++x) {
      quantise(a, x, y, ka);
      quantise(b, x, y, kb);
      for (std::size_t i = 0; i < count; ++i) joint[i] = ka[i] * params.bins + kb[i];
      const double ha = window_entropy(ka, count);
      const double hb = window_entropy(kb, count);
      double nmi = 1.0;
      if (ha + hb > 0.0) {
        const double mi = ha + hb - window_entropy(joint, count);
        nmi = std::clamp(2.0 * mi / (ha + hb), 0.0, 1.0);
      }
      total += nmi;
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

double fmi(const Image& fused, const Image& i1, const Image& i2, FmiFeature feature,
           const FmiParams& params) {
  require_same_shape(fused, i1, "fmi");
  require_same_shape(fused, i2, "fmi");
  auto features = [&](const Image& img) {
    return feature == FmiFeature::dct ? dct_features(img, params.dct_block) : wavelet_features(img);
  };
  const Image ff = features(fused);
  return 0.5 * (windowed_nmi(ff, features(i1), params) + windowed_nmi(ff, features(i2), params));
}

PairMetrics evaluate(std::string pair_id, const Image& fused, const Image& i1, const Image& i2,
                     const MetricParams& params) {
  Image clamped = fused;
  for (double& v : clamped.pixels()) v = std::clamp(v, 0.0, 1.0);
  PairMetrics m;
  m.pair_id = std::move(pair_id);
  m.fmi_dct = fmi(clamped, i1, i2, FmiFeature::dct, params.fmi);
  m.fmi_w = fmi(clamped, i1, i2, FmiFeature::wavelet, params.fmi);
  m.ssim_a = ssim_a(clamped, i1, i2, params.ssim);
  m.nabf = nabf(clamped, i1, i2, params.nabf);
  return m;
}

PairMetrics MetricReport::mean() const {
  PairMetrics m;
  m.pair_id = "mean";
  if (pairs.empty()) return m;
  for (const PairMetrics& p : pairs) {
    m.fmi_dct += p.fmi_dct;
    m.fmi_w += p.fmi_w;
    m.ssim_a += p.ssim_a;
    m.nabf += p.nabf;
  }
  const double n = static_cast<double>(pairs.size());
  m.fmi_dct /= n;
  m.fmi_w /= n;
  m.ssim_a /= n;
  m.nabf /= n;
  return m;
}

}  // namespace fusilli::metrics
