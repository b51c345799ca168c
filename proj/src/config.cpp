#include "fusilli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fusilli {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(value)) {
    throw InvalidArgument("config key '" + key + "': '" + text + "' is not a finite number");
  }
  return value;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) parts.push_back(trim(part));
  return parts;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

void FusionConfig::validate() const {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  if (!(alpha[0] >= 0.0) || !(alpha[1] >= 0.0)) throw InvalidArgument("alpha weights must be >= 0");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  if (taps.empty()) throw InvalidArgument("at least one tap is required");
  for (std::size_t t : taps) {
    if (t < 1 || t > vgg::kTapCount) throw InvalidArgument("taps must be drawn from {1,2,3,4}");
  }
  if (!std::isfinite(input.scale)) throw InvalidArgument("input_scale must be finite");
}

void apply_setting(FusionConfig& config, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "lambda") {
    const double lambda = parse_double(key, value);
    if (lambda < 0.0) throw InvalidArgument("lambda must be >= 0");
    config.lambda = lambda;
  } else if (key == "r") {
    const double r = parse_double(key, value);
    if (r < 0 || r != std::floor(r)) throw InvalidArgument("r must be a nonnegative integer");
    config.radius = static_cast<std::size_t>(r);
  } else if (key == "alpha1" || key == "alpha2") {
    const double alpha = parse_double(key, value);
    if (alpha < 0.0) throw InvalidArgument(key + " must be >= 0");
    config.alpha[key == "alpha1" ? 0 : 1] = alpha;
  } else if (key == "taps") {
    std::vector<std::size_t> taps;
    for (const std::string& part : split_commas(value)) {
      const double t = parse_double(key, part);
      if (t < 1 || t > 4 || t != std::floor(t)) throw InvalidArgument("taps must be drawn from {1,2,3,4}");
      taps.push_back(static_cast<std::size_t>(t));
    }
    std::sort(taps.begin(), taps.end());
    taps.erase(std::unique(taps.begin(), taps.end()), taps.end());
    config.taps = std::move(taps);
  } else if (key == "epsilon") {
    const double epsilon = parse_double(key, value);
    if (epsilon <= 0.0) throw InvalidArgument("epsilon must be > 0");
    config.epsilon = epsilon;
  } else if (key == "input_scale") {
    config.input.scale = static_cast<float>(parse_double(key, value));
  } else if (key == "input_offset") {
    const auto parts = split_commas(value);
    if (parts.size() == 1) {
      config.input.offset.fill(static_cast<float>(parse_double(key, parts[0])));
    } else if (parts.size() == 3) {
      for (std::size_t c = 0; c < 3; ++c) config.input.offset[c] = static_cast<float>(parse_double(key, parts[c]));
    } else {
      throw InvalidArgument("input_offset takes one or three values");
    }
  } else if (key == "pad_policy") {
    if (value != "reflect") throw InvalidArgument("pad_policy supports only 'reflect'");
    config.pad_policy = io::PadMode::reflect;
  } else {
    throw InvalidArgument("unknown config key '" + key + "'");
  }
}

FusionConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config " + path.string());
  }
  FusionConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    try {
      apply_setting(config, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

std::string render_config(const FusionConfig& config) {
  std::ostringstream out;
  out << "lambda=" << format_double(config.lambda) << '\n';
  out << "r=" << config.radius << '\n';
  out << "alpha1=" << format_double(config.alpha[0]) << '\n';
  out << "alpha2=" << format_double(config.alpha[1]) << '\n';
  out << "taps=";
  for (std::size_t i = 0; i < config.taps.size(); ++i) out << (i ? "," : "") << config.taps[i];
  out << '\n';
  out << "epsilon=" << format_double(config.epsilon) << '\n';
  out << "input_scale=" << format_double(config.input.scale) << '\n';
  out << "input_offset=" << format_double(config.input.offset[0]) << ','
      << format_double(config.input.offset[1]) << ',' << format_double(config.input.offset[2]) << '\n';
  out << "pad_policy=reflect\n";
  return out.str();
}

}  // namespace fusilli
