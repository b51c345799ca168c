#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <thread>

#include "fusilli/config.hpp"
#include "fusilli/decompose.hpp"
#include "fusilli/fixtures.hpp"
#include "fusilli/fusion.hpp"
#include "fusilli/io.hpp"
#include "fusilli/metrics.hpp"
#include "fusilli/report.hpp"
#include "fusilli/vgg.hpp"

namespace fusilli::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kWeightsEnv = "FUSILLI_WEIGHTS";

/// Config file plus per-key flag overrides; flags win.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "key=value configuration file");
    for (const char* key : {"lambda", "r", "alpha1", "alpha2", "taps", "epsilon", "input_scale",
                            "input_offset"}) {
      cmd.add_option_function<std::string>(
          std::string("--") + key, [this, key](const std::string& v) { overrides[key] = v; },
          std::string("override config key '") + key + "'");
    }
  }

  FusionConfig resolve() const {
    FusionConfig config = config_path.empty() ? FusionConfig{} : load_config(config_path);
    for (const auto& [key, value] : overrides) apply_setting(config, key, value);
    config.validate();
    return config;
  }
};

fs::path weights_path(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kWeightsEnv); env != nullptr && *env != '\0') return env;
  throw InvalidArgument(std::string("no weight file given: pass --weights or set ") + kWeightsEnv);
}

void require_pair_shape(const Image& ir, const fs::path& ir_path, const Image& vis, const fs::path& vis_path) {
  if (!ir.same_shape(vis)) {
    throw ShapeError("infrared image " + ir_path.string() + " is " + shape_string(ir.width(), ir.height()) +
                     " but visible image " + vis_path.string() + " is " +
                     shape_string(vis.width(), vis.height()));
  }
}

Image offset_for_display(const Image& signed_image) {
  Image out = signed_image;
  for (double& v : out.pixels()) v += 0.5;
  return out;
}

template <typename Tag>
Image as_image(const Plane<Tag>& plane) {
  return Image(plane.width(), plane.height(), std::vector<double>(plane.pixels().begin(), plane.pixels().end()));
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

// --- fuse -------------------------------------------------------------------

struct FuseArgs {
  std::string ir;
  std::string vis;
  std::string weights;
  std::string out;
  std::string dump_dir;
  ConfigFlags config;
};

int cmd_fuse(const FuseArgs& args, std::ostream& out) {
  const FusionConfig config = args.config.resolve();
  const Image ir = io::read_image(args.ir);
  const Image vis = io::read_image(args.vis);
  require_pair_shape(ir, args.ir, vis, args.vis);
  const vgg::VggBackbone backbone = vgg::load_backbone(weights_path(args.weights));

  const FusionResult result = fuse_pair_traced(ir, vis, backbone, config);
  ensure_parent(args.out);
  io::write_image(result.fused, args.out);

  if (!args.dump_dir.empty()) {
    const fs::path dir(args.dump_dir);
    fs::create_directories(dir);
    io::write_image(result.first.base, dir / "base_ir.png");
    io::write_image(result.second.base, dir / "base_vis.png");
    io::write_image(offset_for_display(result.first.detail), dir / "detail_ir.png");
    io::write_image(offset_for_display(result.second.detail), dir / "detail_vis.png");
    io::write_image(result.fused_base, dir / "fused_base.png");
    io::write_image(offset_for_display(result.detail.fused), dir / "fused_detail.png");
    for (const TapWeights& tw : result.detail.weights) {
      const std::string tap = std::to_string(tw.tap);
      io::write_image(as_image(tw.w1), dir / ("weights_tap" + tap + "_ir.png"));
      io::write_image(as_image(tw.w2), dir / ("weights_tap" + tap + "_vis.png"));
    }
  }
  out << "fused " << shape_string(ir.width(), ir.height()) << " -> " << args.out << '\n';
  return 0;
}

// --- metrics ----------------------------------------------------------------

struct MetricsArgs {
  std::string fused;
  std::string ir;
  std::string vis;
  std::string report;
  std::string pair_id;
};

int cmd_metrics(const MetricsArgs& args, std::ostream& out) {
  const Image fused = io::read_image(args.fused);
  const Image ir = io::read_image(args.ir);
  const Image vis = io::read_image(args.vis);
  require_pair_shape(ir, args.ir, vis, args.vis);
  if (!fused.same_shape(ir)) {
    throw ShapeError("fused image " + args.fused + " is " + shape_string(fused.width(), fused.height()) +
                     " but the sources are " + shape_string(ir.width(), ir.height()));
  }
  const std::string id = args.pair_id.empty() ? fs::path(args.fused).stem().string() : args.pair_id;
  const metrics::PairMetrics row = metrics::evaluate(id, fused, ir, vis);
  ensure_parent(args.report);
  report::write_report({row}, args.report);
  report::write_report_row(out, row);
  return 0;
}

// --- batch ------------------------------------------------------------------

struct BatchArgs {
  std::string manifest;
  std::string weights;
  std::string out_dir;
  unsigned jobs = 0;
  ConfigFlags config;
};

int cmd_batch(const BatchArgs& args, std::ostream& out, std::ostream& err) {
  const FusionConfig config = args.config.resolve();
  const report::RunManifest manifest = report::read_manifest(args.manifest);
  if (manifest.pairs.empty()) {
    err << "error: no pairs in manifest " << args.manifest << '\n';
    return 1;
  }
  const vgg::VggBackbone backbone = vgg::load_backbone(weights_path(args.weights));
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  {
    std::ofstream snapshot(dir / "config.txt", std::ios::binary);
    snapshot << render_config(config);
  }

  const std::size_t n = manifest.pairs.size();
  std::size_t jobs = args.jobs != 0 ? args.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n);
  if (jobs > 1) vgg::set_kernel_threads(1);

  std::vector<std::optional<metrics::PairMetrics>> rows(n);
  std::vector<std::string> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const report::PairEntry& pair = manifest.pairs[i];
      try {
        for (const fs::path& p : {pair.infrared, pair.visible}) {
          if (!fs::exists(p)) throw IoError("missing file " + p.string());
        }
        const Image ir = io::read_image(pair.infrared);
        const Image vis = io::read_image(pair.visible);
        require_pair_shape(ir, pair.infrared, vis, pair.visible);
        const Image fused = fuse_pair(ir, vis, backbone, config);
        io::write_image(fused, dir / (pair.pair_id + "_fused.png"));
        // Score the image as stored so the report agrees with `metrics` on the output file.
        rows[i] = metrics::evaluate(pair.pair_id, io::quantized(fused), ir, vis);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
  }

  metrics::MetricReport summary;
  std::ofstream failure_log;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i]) {
      summary.pairs.push_back(*rows[i]);
      continue;
    }
    if (failed++ == 0) {
      failure_log.open(dir / "failures.csv", std::ios::binary);
      failure_log << "pair_id,error\n";
    }
    std::string message = failures[i];
    std::replace(message.begin(), message.end(), ',', ';');
    std::replace(message.begin(), message.end(), '\n', ' ');
    failure_log << manifest.pairs[i].pair_id << ',' << message << '\n';
    err << "pair " << manifest.pairs[i].pair_id << " failed: " << failures[i] << '\n';
  }
  report::write_report(summary.pairs, dir / "report.csv");
  report::write_summary(summary, dir / "summary.csv");
  report::write_nabf_series(summary.pairs, dir / "nabf_series.csv");

  const metrics::PairMetrics mean = summary.mean();
  out << "fused " << summary.pairs.size() << "/" << n << " pairs; mean ssim_a "
      << report::format_value(mean.ssim_a) << ", mean nabf " << report::format_value(mean.nabf) << '\n';
  return failed == 0 ? 0 : 1;
}

// --- decompose --------------------------------------------------------------

struct DecomposeArgs {
  std::string image;
  double lambda = 5.0;
  std::string out_base;
  std::string out_detail;
};

int cmd_decompose(const DecomposeArgs& args, std::ostream& out) {
  const Image image = io::read_image(args.image);
  const Decomposition parts = decompose(image, DecomposeParams{args.lambda, Boundary::periodic});
  ensure_parent(args.out_base);
  ensure_parent(args.out_detail);
  io::write_image(parts.base, args.out_base);
  io::write_image(offset_for_display(parts.detail), args.out_detail);
  out << "base -> " << args.out_base << ", detail (+0.5) -> " << args.out_detail << '\n';
  return 0;
}

// --- check-fixtures ---------------------------------------------------------

struct FixtureArgs {
  std::string manifest;
  std::string weights;
  double tolerance = 1e-4;
};

int cmd_check_fixtures(const FixtureArgs& args, std::ostream& out) {
  const vgg::FixtureManifest manifest = vgg::read_manifest(args.manifest);
  fs::path weights;
  if (!args.weights.empty()) {
    weights = args.weights;
  } else if (manifest.weights) {
    weights = *manifest.weights;
  } else {
    weights = weights_path("");
  }
  const vgg::FixtureCheck check = vgg::check_fixtures(manifest, vgg::load_backbone(weights));
  bool ok = check.checksum_mismatches.empty();
  for (const std::string& layer : check.checksum_mismatches) {
    out << "FAIL checksum " << layer << '\n';
  }
  for (const vgg::TapDeviation& d : check.deviations) {
    const bool pass = d.max_abs_diff <= args.tolerance;
    ok = ok && pass;
    out << (pass ? "PASS " : "FAIL ") << d.fixture << " tap" << d.tap << " max_abs_diff "
        << d.max_abs_diff << '\n';
  }
  return ok ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fusilli: infrared/visible image fusion with deep-feature weight maps"};
  app.name("fusilli");
  app.require_subcommand(1);

  FuseArgs fuse;
  auto* fuse_cmd = app.add_subcommand("fuse", "fuse one registered infrared/visible pair");
  fuse_cmd->add_option("--ir", fuse.ir, "infrared image (PGM/PNG)")->required();
  fuse_cmd->add_option("--vis", fuse.vis, "visible image (PGM/PNG)")->required();
  fuse_cmd->add_option("--weights", fuse.weights, std::string("VGWF weight file (default $") + kWeightsEnv + ")");
  fuse_cmd->add_option("--out", fuse.out, "output image")->required();
  fuse_cmd->add_option("--dump-dir", fuse.dump_dir, "directory for intermediate images");
  fuse.config.attach(*fuse_cmd);

  MetricsArgs metrics_args;
  auto* metrics_cmd = app.add_subcommand("metrics", "score a fused image against its sources");
  metrics_cmd->add_option("--fused", metrics_args.fused, "fused image")->required();
  metrics_cmd->add_option("--ir", metrics_args.ir, "infrared source")->required();
  metrics_cmd->add_option("--vis", metrics_args.vis, "visible source")->required();
  metrics_cmd->add_option("--out", metrics_args.report, "CSV report path")->required();
  metrics_cmd->add_option("--pair-id", metrics_args.pair_id, "row label (default: fused file stem)");

  BatchArgs batch;
  auto* batch_cmd = app.add_subcommand("batch", "fuse and score every pair of a manifest");
  batch_cmd->add_option("--manifest", batch.manifest, "CSV with header pair_id,infrared,visible")->required();
  batch_cmd->add_option("--weights", batch.weights, std::string("VGWF weight file (default $") + kWeightsEnv + ")");
  batch_cmd->add_option("--out", batch.out_dir, "output directory")->required();
  batch_cmd->add_option("--jobs", batch.jobs, "concurrent pairs (default: hardware threads)");
  batch.config.attach(*batch_cmd);

  DecomposeArgs dec;
  auto* dec_cmd = app.add_subcommand("decompose", "split an image into base and detail parts");
  dec_cmd->add_option("--image", dec.image, "input image")->required();
  dec_cmd->add_option("--lambda", dec.lambda, "smoothness weight")->check(CLI::NonNegativeNumber);
  dec_cmd->add_option("--out-base", dec.out_base, "base part output")->required();
  dec_cmd->add_option("--out-detail", dec.out_detail, "detail output, stored with +0.5 offset")->required();

  FixtureArgs fixtures;
  auto* fix_cmd = app.add_subcommand("check-fixtures", "replay exported reference activations");
  fix_cmd->add_option("--manifest", fixtures.manifest, "fixture manifest")->required();
  fix_cmd->add_option("--weights", fixtures.weights, "weight file (default: from manifest)");
  fix_cmd->add_option("--tolerance", fixtures.tolerance, "max abs deviation per tap");

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*fuse_cmd) return cmd_fuse(fuse, out);
    if (*metrics_cmd) return cmd_metrics(metrics_args, out);
    if (*batch_cmd) return cmd_batch(batch, out, err);
    if (*dec_cmd) return cmd_decompose(dec, out);
    if (*fix_cmd) return cmd_check_fixtures(fixtures, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace fusilli::cli
