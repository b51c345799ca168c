#include <doctest.h>

#include <cmath>

#include "fusilli/metrics.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace fusilli;
using namespace fusilli::metrics;
using fusilli::testing::max_abs_diff;
using fusilli::testing::Rng;

namespace {

Image smooth_ramp(std::size_t w, std::size_t h) {
  Image img(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      img.at(x, y) = 0.3 + 0.2 * std::sin(0.15 * static_cast<double>(x)) * std::cos(0.1 * static_cast<double>(y));
    }
  }
  return img;
}

// 2x2 cells offset by one pixel. A one-pixel checkerboard, or cells aligned
// with the replicated border, cancel exactly under the Sobel kernels.
Image with_checkerboard(const Image& base, double amplitude) {
  Image out = base;
  for (std::size_t y = 0; y < out.height(); ++y) {
    for (std::size_t x = 0; x < out.width(); ++x) out.at(x, y) += (((x + 1) / 2 + (y + 1) / 2) % 2 ? amplitude : -amplitude);
  }
  return out;
}

}  // namespace

TEST_CASE("ssim of an image with itself is one") {
  Rng rng(1);
  const Image img = fusilli::testing::random_image(32, 24, rng);
  CHECK(std::abs(ssim(img, img) - 1.0) <= 1e-12);
  CHECK(std::abs(ssim(Image(16, 16, 0.4), Image(16, 16, 0.4)) - 1.0) <= 1e-12);
}

TEST_CASE("ssim of a half-black image against its negative is negative") {
  Image img(32, 32, 0.0);
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 16; x < 32; ++x) img.at(x, y) = 1.0;
  }
  Image neg(32, 32);
  for (std::size_t i = 0; i < img.size(); ++i) neg[i] = 1.0 - img[i];
  CHECK(ssim(img, neg) < 0.0);
}

TEST_CASE("ssim matches the per-window oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Image a = fusilli::testing::random_image(32, 32, rng);
    Image b = a;
    for (double& v : b.pixels()) v = std::clamp(v + rng.uniform(-0.3, 0.3), 0.0, 1.0);
    CHECK(std::abs(ssim(a, b) - oracle::ssim_direct(a, b)) <= 1e-9);
  }
  const auto [ir, vis] = fusilli::testing::synthetic_pair(3, 40, 30);
  CHECK(std::abs(ssim(ir, vis) - oracle::ssim_direct(ir, vis)) <= 1e-9);
}

TEST_CASE("ssim is symmetric and bounded") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Image a = fusilli::testing::random_image(20, 20, rng);
    const Image b = fusilli::testing::random_image(20, 20, rng);
    const double ab = ssim(a, b);
    CHECK(std::abs(ab - ssim(b, a)) <= 1e-12);
    CHECK(ab >= -1.0);
    CHECK(ab <= 1.0);
  }
  CHECK_THROWS_AS(ssim(Image(12, 12), Image(12, 11)), ShapeError);
}

TEST_CASE("ssim_a averages the two similarities") {
  const auto [ir, vis] = fusilli::testing::synthetic_pair(4, 36, 28);
  CHECK(std::abs(ssim_a(ir, ir, ir) - 1.0) <= 1e-12);
  CHECK(std::abs(ssim_a(ir, ir, vis) - 0.5 * (1.0 + ssim(ir, vis))) <= 1e-12);

  Rng rng(5);
  const Image f = fusilli::testing::random_image(36, 28, rng);
  CHECK(ssim_a(f, ir, vis) == ssim_a(f, vis, ir));
}

TEST_CASE("nabf is zero on self-fusion") {
  const auto [ir, vis] = fusilli::testing::synthetic_pair(6, 33, 21);
  CHECK(nabf(ir, ir, ir) == 0.0);
  CHECK(nabf(vis, vis, vis) == 0.0);
  CHECK(nabf(Image(8, 8, 0.5), Image(8, 8, 0.5), Image(8, 8, 0.5)) == 0.0);
}

TEST_CASE("nabf detects an added checkerboard and matches the per-pixel oracle") {
  const Image smooth = smooth_ramp(40, 32);
  const Image noisy = with_checkerboard(smooth, 0.1);
  const double clean = nabf(smooth, smooth, smooth);
  const double dirty = nabf(noisy, smooth, smooth);
  CHECK(dirty > clean);
  CHECK(std::abs(dirty - oracle::nabf_direct(noisy, smooth, smooth)) <= 1e-9);

  const auto [ir, vis] = fusilli::testing::synthetic_pair(7, 30, 26);
  Rng rng(8);
  Image f(30, 26);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.5 * (ir[i] + vis[i]) + rng.uniform(-0.05, 0.05);
  const double v = nabf(f, ir, vis);
  CHECK(v >= 0.0);
  CHECK(std::abs(v - oracle::nabf_direct(f, ir, vis)) <= 1e-9);
}

TEST_CASE("sobel orientation is folded into [0, pi)") {
  const auto [ir, vis] = fusilli::testing::synthetic_pair(9, 20, 20);
  const GradientField g = sobel(vis);
  for (std::size_t i = 0; i < g.orientation.size(); ++i) {
    CHECK(g.strength[i] >= 0.0);
    CHECK(g.orientation[i] >= 0.0);
    CHECK(g.orientation[i] < M_PI);
  }
}

TEST_CASE("dct features match the direct double sum") {
  Rng rng(10);
  const Image img = fusilli::testing::random_image(27, 19, rng);
  const Image fast = dct_features(img);
  const Image slow = oracle::dct_direct(img);
  REQUIRE(fast.width() == 24);
  REQUIRE(fast.height() == 16);
  CHECK(max_abs_diff(fast, slow) <= 1e-12);
  for (std::size_t by = 0; by < 2; ++by) {
    for (std::size_t bx = 0; bx < 3; ++bx) CHECK(fast.at(8 * bx, 8 * by) == 0.0);
  }
  CHECK_THROWS_AS(dct_features(Image(7, 20)), ShapeError);
}

TEST_CASE("haar features of a constant image vanish") {
  const Image w = wavelet_features(Image(10, 6, 0.3));
  CHECK(w.width() == 5);
  CHECK(w.height() == 3);
  for (double v : w.pixels()) CHECK(std::abs(v) <= 1e-15);
}

TEST_CASE("windowed nmi matches the explicit histogram") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Image a = fusilli::testing::random_image(12, 10, rng);
    Image b = a;
    for (double& v : b.pixels()) v = 0.7 * v + 0.3 * rng.uniform();
    CHECK(std::abs(windowed_nmi(a, b) - oracle::nmi_direct(a, b)) <= 1e-9);
  }
  Image flat(6, 6, 0.2), stripes(6, 6);
  for (std::size_t i = 0; i < stripes.size(); ++i) stripes[i] = (i % 2) ? 0.9 : 0.1;
  CHECK(std::abs(windowed_nmi(flat, stripes) - oracle::nmi_direct(flat, stripes)) <= 1e-9);
  CHECK(windowed_nmi(flat, flat) == 1.0);
}

TEST_CASE("fmi is one for identical inputs and bounded otherwise") {
  const auto [ir, vis] = fusilli::testing::synthetic_pair(12, 40, 32);
  for (FmiFeature feature : {FmiFeature::dct, FmiFeature::wavelet}) {
    CHECK(std::abs(fmi(ir, ir, ir, feature) - 1.0) <= 1e-9);
    Image f(40, 32);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.5 * (ir[i] + vis[i]);
    const double v = fmi(f, ir, vis, feature);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("fmi on a small trio matches the direct computation") {
  Rng rng(13);
  const Image i1 = fusilli::testing::random_image(16, 16, rng);
  const Image i2 = fusilli::testing::random_image(16, 16, rng);
  Image f(16, 16);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.6 * i1[i] + 0.4 * i2[i];
  const Image ff = oracle::dct_direct(f), f1 = oracle::dct_direct(i1), f2 = oracle::dct_direct(i2);
  const double expected = 0.5 * (oracle::nmi_direct(ff, f1) + oracle::nmi_direct(ff, f2));
  CHECK(std::abs(fmi(f, i1, i2, FmiFeature::dct) - expected) <= 1e-9);
}

TEST_CASE("evaluate bundles every score and is deterministic") {
  const auto [ir, vis] = fusilli::testing::synthetic_pair(14, 32, 24);
  const PairMetrics self = evaluate("p", ir, ir, ir);
  CHECK(self.pair_id == "p");
  CHECK(std::abs(self.ssim_a - 1.0) <= 1e-9);
  CHECK(self.nabf == 0.0);
  CHECK(std::abs(self.fmi_dct - 1.0) <= 1e-9);
  CHECK(std::abs(self.fmi_w - 1.0) <= 1e-9);

  Image f(32, 24);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.5 * (ir[i] + vis[i]) + 0.3;
  const PairMetrics a = evaluate("q", f, ir, vis), b = evaluate("q", f, ir, vis);
  CHECK(a.fmi_dct == b.fmi_dct);
  CHECK(a.fmi_w == b.fmi_w);
  CHECK(a.ssim_a == b.ssim_a);
  CHECK(a.nabf == b.nabf);

  Image clamped = f;
  for (double& v : clamped.pixels()) v = std::clamp(v, 0.0, 1.0);
  CHECK(a.ssim_a == ssim_a(clamped, ir, vis));

  MetricReport report{{self, a}};
  const PairMetrics m = report.mean();
  CHECK(m.ssim_a == doctest::Approx(0.5 * (self.ssim_a + a.ssim_a)));
  CHECK(m.nabf == doctest::Approx(0.5 * a.nabf));
}
