#pragma once

#include <string>
#include <vector>

#include "fusilli/image.hpp"

namespace fusilli::metrics {

struct SsimParams {
  std::size_t window = 11;  // shrunk to the largest odd size that fits small images
  double sigma = 1.5;
  double dynamic_range = 1.0;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Edge-preservation constants of the gradient-based artifact measure.
struct NabfParams {
  double gamma_g = 0.9994;
  double kappa_g = -15.0;
  double sigma_g = 0.5;
  double gamma_a = 0.9879;
  double kappa_a = -22.0;
  double sigma_a = 0.8;
};

struct FmiParams {
  std::size_t dct_block = 8;
  std::size_t bins = 16;
  std::size_t window = 3;
};

struct MetricParams {
  SsimParams ssim;
  NabfParams nabf;
  FmiParams fmi;
};

/// Mean structural similarity over every fully contained Gaussian window.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

/// (ssim(f, i1) + ssim(f, i2)) / 2.
double ssim_a(const Image& fused, const Image& i1, const Image& i2, const SsimParams& params = {});

/// Sobel response of an image, replicate border.
struct GradientField {
  Image strength;
  Image orientation;  // folded into [0, pi)
};
GradientField sobel(const Image& image);

/// Edge preservation Q_{AF} of `fused` relative to `source` at every pixel.
Image edge_preservation(const GradientField& source, const GradientField& fused,
                        const NabfParams& params = {});

/// Artifact rate: over pixels where the fused gradient strictly exceeds both
/// source gradients, sums w * (1 - Q_1F) * (1 - Q_2F) and divides by the sum
/// of w over all pixels, with w = max(g_1, g_2). Zero when no source has edges.
double nabf(const Image& fused, const Image& i1, const Image& i2, const NabfParams& params = {});

enum class FmiFeature { dct, wavelet };

/// Per-block DCT-II coefficient magnitudes with the DC term zeroed. Trailing
/// rows/columns that do not fill a block are dropped.
Image dct_features(const Image& image, std::size_t block = 8);

/// One-level Haar transform; returns sqrt(LH^2 + HL^2 + HH^2) at half resolution.
Image wavelet_features(const Image& image);

/// Mean over sliding windows of 2*MI/(H_a + H_b), each window quantised into
/// `bins` levels between its own minimum and maximum. A window pair where
/// both sides are constant scores 1.
double windowed_nmi(const Image& a, const Image& b, const FmiParams& params = {});

/// 0.5 * (NMI(F, I1) + NMI(F, I2)) on the chosen feature images.
double fmi(const Image& fused, const Image& i1, const Image& i2, FmiFeature feature,
           const FmiParams& params = {});

struct PairMetrics {
  std::string pair_id;
  double fmi_dct = 0.0;
  double fmi_w = 0.0;
  double ssim_a = 0.0;
  double nabf = 0.0;
};

/// All four scores. `fused` is clamped to [0,1] first.
PairMetrics evaluate(std::string pair_id, const Image& fused, const Image& i1, const Image& i2,
                     const MetricParams& params = {});

/// Column means over the per-pair records.
struct MetricReport {
  std::vector<PairMetrics> pairs;

  PairMetrics mean() const;
};

}  // namespace fusilli::metrics
