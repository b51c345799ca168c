#include "fusilli/decompose.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

namespace fusilli {
namespace {

// FFTW's planner is not re-entrant; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t count) {
  auto* raw = static_cast<T*>(fftw_malloc(sizeof(T) * count));
  if (raw == nullptr) {
    throw std::bad_alloc();
  }
  return FftwBuffer<T>(raw);
}

class Plan {
 public:
  explicit Plan(fftw_plan plan) : plan_(plan) {
    if (plan_ == nullptr) {
      throw Error("FFTW failed to create a plan");
    }
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;

  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

// |DFT of [-1 1]|^2 along an axis of length n at frequency k.
double gradient_response(std::size_t k, std::size_t n) {
  return 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
}

}  // namespace

Image solve_base(const Image& image, const DecomposeParams& params) {
  if (image.empty()) {
    throw ShapeError("solve_base: zero-sized image");
  }
  if (!(params.lambda >= 0.0) || !std::isfinite(params.lambda)) {
    throw InvalidArgument("solve_base: lambda must be a finite value >= 0, got " +
                          std::to_string(params.lambda));
  }
  if (!all_finite(image.pixels())) {
    throw InvalidArgument("solve_base: image contains non-finite values");
  }
  if (params.lambda == 0.0) {
    return image;
  }

  const std::size_t w = image.width();
  const std::size_t h = image.height();
  const std::size_t half_w = w / 2 + 1;

  auto spatial = fftw_buffer<double>(w * h);
  auto spectrum = fftw_buffer<fftw_complex>(half_w * h);

  std::unique_ptr<Plan> forward;
  std::unique_ptr<Plan> inverse;
  {
    std::lock_guard lock(planner_mutex());
    forward = std::make_unique<Plan>(fftw_plan_dft_r2c_2d(
        static_cast<int>(h), static_cast<int>(w), spatial.get(), spectrum.get(), FFTW_ESTIMATE));
    inverse = std::make_unique<Plan>(fftw_plan_dft_c2r_2d(
        static_cast<int>(h), static_cast<int>(w), spectrum.get(), spatial.get(), FFTW_ESTIMATE));
  }

  std::copy(image.pixels().begin(), image.pixels().end(), spatial.get());
  forward->execute();

  std::vector<double> response_x(half_w);
  for (std::size_t u = 0; u < half_w; ++u) response_x[u] = gradient_response(u, w);

  const double norm = 1.0 / static_cast<double>(w * h);
  for (std::size_t v = 0; v < h; ++v) {
    const double response_y = gradient_response(v, h);
    for (std::size_t u = 0; u < half_w; ++u) {
      const double gain = norm / (1.0 + params.lambda * (response_x[u] + response_y));
      fftw_complex& c = spectrum[v * half_w + u];
      c[0] *= gain;
      c[1] *= gain;
    }
  }

  inverse->execute();
  return Image(w, h, std::vector<double>(spatial.get(), spatial.get() + w * h));
}

Decomposition decompose(const Image& image, const DecomposeParams& params) {
  Image base = solve_base(image, params);
  Image detail(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) {
    detail[i] = image[i] - base[i];
  }
  return {std::move(base), std::move(detail)};
}

}  // namespace fusilli
