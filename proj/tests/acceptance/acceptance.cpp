// Acceptance report: one PASS/FAIL/SKIP line per criterion, nonzero exit on any FAIL.
//
// Optional environment:
//   FUSILLI_CORPUS    run manifest (pair_id,infrared,visible) of the evaluation corpus
//   FUSILLI_WEIGHTS   VGWF weights used for corpus runs
//   FUSILLI_FIXTURES  fixture manifest from the weight exporter

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "cli.hpp"
#include "fusilli/decompose.hpp"
#include "fusilli/fixtures.hpp"
#include "fusilli/fusion.hpp"
#include "fusilli/io.hpp"
#include "fusilli/metrics.hpp"
#include "fusilli/report.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace fusilli;
using fusilli::testing::max_abs_diff;
using fusilli::testing::Rng;
using Clock = std::chrono::steady_clock;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome check(bool ok, std::string detail) { return {ok ? Verdict::pass : Verdict::fail, std::move(detail)}; }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Test images: the corpus when configured, else synthetic pairs plus the committed fixture pair.
struct Material {
  std::vector<std::pair<Image, Image>> pairs;
  std::string source;
  std::optional<vgg::VggBackbone> backbone;
};

Material load_material() {
  Material m;
  const auto corpus = env("FUSILLI_CORPUS");
  const auto weights = env("FUSILLI_WEIGHTS");
  if (corpus && weights) {
    for (const auto& entry : report::read_manifest(*corpus).pairs) {
      m.pairs.emplace_back(io::read_image(entry.infrared), io::read_image(entry.visible));
    }
    m.backbone.emplace(vgg::load_backbone(*weights));
    m.source = "corpus";
    return m;
  }
  const auto dir = fusilli::testing::fixture_dir();
  m.pairs.emplace_back(io::read_image(dir / "pair_ir.pgm"), io::read_image(dir / "pair_vis.pgm"));
  for (std::uint64_t seed = 100; m.pairs.size() < 10; ++seed) {
    m.pairs.push_back(fusilli::testing::synthetic_pair(seed, 40 + 3 * (seed % 7), 28 + 5 * (seed % 5)));
  }
  m.backbone.emplace(fusilli::testing::random_backbone(7));
  m.source = "synthetic";
  return m;
}

Outcome decomposition_oracle() {
  Rng rng(1);
  double worst = 0.0;
  const auto start = Clock::now();
  for (int i = 0; i < 50; ++i) {
    const Image img = fusilli::testing::random_image(1 + rng.index(8), 1 + rng.index(8), rng);
    for (double lambda : {0.0, 1.0, 5.0, 100.0}) {
      worst = std::max(worst, max_abs_diff(solve_base(img, {lambda}), oracle::dense_base(img, lambda)));
    }
  }
  const double elapsed = seconds_since(start);
  return check(worst <= 1e-8 && elapsed < 5.0,
               "max_abs_err=" + sci(worst) + " tol=1e-8 time=" + sci(elapsed) + "s limit=5s");
}

Outcome reconstruction_identity(const Material& m) {
  double worst = 0.0;
  std::size_t images = 0;
  for (const auto& [a, b] : m.pairs) {
    for (const Image* img : {&a, &b}) {
      const Decomposition parts = decompose(*img);
      worst = std::max(worst, max_abs_diff(reconstruct(parts.base, parts.detail), *img));
      ++images;
    }
  }
  return check(worst <= 1e-12, "images=" + std::to_string(images) + " (" + m.source + ") max_abs_err=" +
                                   sci(worst) + " tol=1e-12");
}

Outcome self_fusion(const Material& m) {
  double worst = 0.0;
  std::size_t n = 0;
  for (const auto& [a, b] : m.pairs) {
    for (const Image* img : {&a, &b}) {
      if (n == 10) break;
      worst = std::max(worst, max_abs_diff(fuse_pair(*img, *img, *m.backbone, {}), *img));
      ++n;
    }
  }
  return check(n == 10 && worst <= 1e-6,
               "images=" + std::to_string(n) + " (" + m.source + ") max_abs_err=" + sci(worst) + " tol=1e-6");
}

Outcome input_symmetry(const Material& m) {
  double worst = 0.0;
  std::size_t n = 0;
  for (const auto& [a, b] : m.pairs) {
    if (n == 5) break;
    worst = std::max(worst, max_abs_diff(fuse_pair(a, b, *m.backbone, {}), fuse_pair(b, a, *m.backbone, {})));
    ++n;
  }
  return check(n == 5 && worst <= 1e-6,
               "pairs=" + std::to_string(n) + " (" + m.source + ") max_abs_err=" + sci(worst) + " tol=1e-6");
}

Outcome convolution_oracle() {
  Rng rng(2);
  double conv_worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t in = 1 + rng.index(16), out = 1 + rng.index(16);
    const vgg::ConvLayer layer = fusilli::testing::random_conv("c", in, out, rng);
    const vgg::FeatureStack x = fusilli::testing::random_stack(in, 1 + rng.index(24), 1 + rng.index(24), rng);
    conv_worst = std::max(conv_worst, max_abs_diff(vgg::conv3x3_same(x, layer), oracle::naive_conv(x, layer)));
  }
  const vgg::VggBackbone net = fusilli::testing::random_backbone(3);
  const vgg::FeatureStack input = vgg::network_input(fusilli::testing::random_image(16, 16, rng, -0.5, 0.5));
  const auto fast = vgg::forward_taps(input, net);
  const auto slow = oracle::naive_forward(input, net);
  double forward_worst = 0.0;
  for (std::size_t t = 0; t < vgg::kTapCount; ++t) forward_worst = std::max(forward_worst, max_abs_diff(fast[t], slow[t]));
  return check(conv_worst <= 1e-5 && forward_worst <= 1e-4,
               "conv max_abs_err=" + sci(conv_worst) + " tol=1e-5 over 100 cases; forward max_abs_err=" +
                   sci(forward_worst) + " tol=1e-4");
}

Outcome weight_laws(const Material& m) {
  double sum_err = 0.0;
  bool in_range = true, channels_ok = true;
  for (const auto& [a, b] : m.pairs) {
    const FusionResult r = fuse_pair_traced(a, b, *m.backbone, {});
    for (const TapWeights& tw : r.detail.weights) {
      for (const auto* pair : {&tw.feature_w1, &tw.w1}) {
        const ScalarMap& w1 = *pair;
        const ScalarMap& w2 = pair == &tw.w1 ? tw.w2 : tw.feature_w2;
        for (std::size_t i = 0; i < w1.size(); ++i) {
          sum_err = std::max(sum_err, std::abs(w1[i] + w2[i] - 1.0));
          in_range = in_range && w1[i] >= 0.0 && w1[i] <= 1.0 && w2[i] >= 0.0 && w2[i] <= 1.0;
        }
      }
    }
    const io::PadSpec pad = io::pad_to_multiple(a.width(), a.height(), 8);
    const auto taps = vgg::extract_features(io::pad_reflect(r.first.detail, pad), *m.backbone);
    for (std::size_t t = 1; t <= vgg::kTapCount; ++t) {
      channels_ok = channels_ok && taps[t - 1].channels() == (std::size_t{64} << (t - 1));
    }
  }
  return check(sum_err <= 1e-9 && in_range && channels_ok,
               "pairs=" + std::to_string(m.pairs.size()) + " max|W1+W2-1|=" + sci(sum_err) +
                   " tol=1e-9 range=" + (in_range ? "ok" : "violated") +
                   " channels=" + (channels_ok ? "64/128/256/512" : "wrong"));
}

Outcome metric_axioms(const Material& m) {
  double worst = 0.0;
  for (std::size_t k = 0; k < std::min<std::size_t>(m.pairs.size(), 5); ++k) {
    const auto& [a, b] = m.pairs[k];
    Image f(a.width(), a.height());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.6 * a[i] + 0.4 * b[i];
    worst = std::max(worst, std::abs(metrics::ssim(a, a) - 1.0));
    worst = std::max(worst, std::abs(metrics::ssim_a(f, a, b) - metrics::ssim_a(f, b, a)));
    worst = std::max(worst, std::abs(metrics::nabf(a, a, a)));
    worst = std::max(worst, std::abs(metrics::fmi(a, a, a, metrics::FmiFeature::dct) - 1.0));
    worst = std::max(worst, std::abs(metrics::fmi(a, a, a, metrics::FmiFeature::wavelet) - 1.0));
  }
  return check(worst <= 1e-9, "max deviation=" + sci(worst) + " tol=1e-9");
}

Outcome corpus_check() {
  const auto corpus = env("FUSILLI_CORPUS");
  const auto weights = env("FUSILLI_WEIGHTS");
  if (!corpus || !weights) {
    return {Verdict::skip, "set FUSILLI_CORPUS and FUSILLI_WEIGHTS to run"};
  }
  const report::RunManifest manifest = report::read_manifest(*corpus);
  const vgg::VggBackbone net = vgg::load_backbone(*weights);
  metrics::MetricReport rep;
  double slowest = 0.0;
  for (const auto& entry : manifest.pairs) {
    const Image ir = io::read_image(entry.infrared);
    const Image vis = io::read_image(entry.visible);
    const auto start = Clock::now();
    const Image fused = fuse_pair(ir, vis, net, {});
    slowest = std::max(slowest, seconds_since(start));
    rep.pairs.push_back(metrics::evaluate(entry.pair_id, fused, ir, vis));
  }
  if (rep.pairs.empty()) return {Verdict::fail, "corpus manifest lists no pairs"};
  const metrics::PairMetrics mean = rep.mean();
  return check(mean.nabf <= 0.01 && mean.ssim_a >= 0.70 && slowest < 60.0,
               "pairs=" + std::to_string(rep.pairs.size()) + " mean_nabf=" + sci(mean.nabf) +
                   " (<=0.01) mean_ssim_a=" + sci(mean.ssim_a) + " (>=0.70) slowest=" + sci(slowest) +
                   "s (<60s)");
}

Outcome determinism() {
  fusilli::testing::TempDir dir("acceptance");
  vgg::save_backbone(fusilli::testing::random_backbone(7), dir / "net.vgwf");
  {
    std::ofstream manifest(dir / "pairs.csv");
    manifest << "pair_id,infrared,visible\n";
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto [ir, vis] = fusilli::testing::synthetic_pair(seed, 37, 29);
      const std::string id = "p" + std::to_string(seed);
      io::write_image(ir, dir / (id + "_ir.pgm"));
      io::write_image(vis, dir / (id + "_vis.pgm"));
      manifest << id << ',' << id << "_ir.pgm," << id << "_vis.pgm\n";
    }
  }
  for (const char* run : {"run1", "run2"}) {
    std::ostringstream out, err;
    const int status = cli::run({"batch", "--manifest", (dir / "pairs.csv").string(), "--weights",
                                 (dir / "net.vgwf").string(), "--out", (dir / run).string()},
                                out, err);
    if (status != 0) return {Verdict::fail, std::string("batch failed: ") + err.str()};
  }
  std::size_t files = 0, differing = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "run1")) {
    ++files;
    differing += slurp(entry.path()) != slurp(dir / "run2" / entry.path().filename());
  }
  return check(files > 0 && differing == 0,
               "files=" + std::to_string(files) + " differing=" + std::to_string(differing));
}

Outcome fixture_fidelity() {
  const auto path = env("FUSILLI_FIXTURES");
  if (!path) return {Verdict::skip, "set FUSILLI_FIXTURES to an exporter fixture manifest to run"};
  const vgg::FixtureManifest manifest = vgg::read_manifest(*path);
  std::filesystem::path weights;
  if (manifest.weights) {
    weights = *manifest.weights;
  } else if (const auto w = env("FUSILLI_WEIGHTS")) {
    weights = *w;
  } else {
    return {Verdict::fail, "fixture manifest names no weights and FUSILLI_WEIGHTS is unset"};
  }
  const vgg::FixtureCheck c = vgg::check_fixtures(manifest, vgg::load_backbone(weights));
  return check(c.checksum_mismatches.empty() && !c.deviations.empty() && c.worst_deviation() <= 1e-4,
               "fixtures=" + std::to_string(manifest.cases.size()) + " checksum_mismatches=" +
                   std::to_string(c.checksum_mismatches.size()) + " max_abs_err=" + sci(c.worst_deviation()) +
                   " tol=1e-4");
}

}  // namespace

int main() {
  bool failed = false;
  auto line = [&](const char* tier, const char* name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
    failed = failed || o.verdict == Verdict::fail;
    std::printf("%s [%s] %s: %s\n", tag, tier, name, o.detail.c_str());
    std::fflush(stdout);
  };

  std::optional<Material> material;
  try {
    material = load_material();
  } catch (const std::exception& e) {
    std::printf("FAIL [setup] test material: %s\n", e.what());
    return 1;
  }
  const Material& m = *material;

  line("PRIMARY", "decomposition oracle", decomposition_oracle);
  line("PRIMARY", "reconstruction identity", [&] { return reconstruction_identity(m); });
  line("PRIMARY", "self-fusion identity", [&] { return self_fusion(m); });
  line("PRIMARY", "input symmetry", [&] { return input_symmetry(m); });
  line("PRIMARY", "convolution oracle", convolution_oracle);
  line("PRIMARY", "weight-map laws", [&] { return weight_laws(m); });
  line("PRIMARY", "metric axioms", [&] { return metric_axioms(m); });
  line("PRIMARY", "corpus-level check", corpus_check);
  line("PRIMARY", "determinism", determinism);
  line("SECONDARY", "fixture fidelity", fixture_fidelity);
  return failed ? 1 : 0;
}
