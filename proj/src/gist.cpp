#include "ndbench/gist.h"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "ndbench/errors.h"

namespace ndbench {

namespace {

// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  fftw_complex* data = nullptr;
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

struct FftwPlan {
  fftw_plan plan{};
  FftwPlan(int side, fftw_complex* in, fftw_complex* out, int sign) {
    std::lock_guard lock(fftw_mutex());
    plan = fftw_plan_dft_2d(side, side, in, out, sign, FFTW_ESTIMATE);
    if (!plan) throw std::runtime_error("fftw plan creation failed");
  }
  ~FftwPlan() {
    std::lock_guard lock(fftw_mutex());
    fftw_destroy_plan(plan);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  void execute() const { fftw_execute(plan); }
};

/// Signed frequency index of bin k on an n-point grid with DC at bin 0.
int freq_index(int k, int n) { return k < (n + 1) / 2 ? k : k - n; }

void check_input(const GrayImage& image, const GistConfig& cfg) {
  cfg.validate();
  image.validate();
  if (image.width != image.height)
    throw input_error("gist input must be square, got " + std::to_string(image.width) +
                      "x" + std::to_string(image.height));
  if (image.width != cfg.image_side)
    throw input_error("gist input side " + std::to_string(image.width) +
                      " does not match configured side " + std::to_string(cfg.image_side));
}

/// Runs fn(filter_index, magnitudes) for each filter; magnitudes is the
/// side*side response-magnitude plane, reused between calls.
template <typename Fn>
void for_each_response(const GrayImage& image, const GistConfig& cfg, Fn&& fn) {
  const int n = cfg.image_side;
  const std::size_t cells = static_cast<std::size_t>(n) * n;
  const auto bank = gist_filter_bank(n, cfg.scales, cfg.orientations_per_scale);

  FftwBuffer spectrum(cells), filtered(cells), response(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    spectrum.data[i][0] = image.pixels[i];
    spectrum.data[i][1] = 0.0;
  }
  FftwPlan forward(n, spectrum.data, spectrum.data, FFTW_FORWARD);
  FftwPlan inverse(n, filtered.data, response.data, FFTW_BACKWARD);
  forward.execute();

  const double inv_cells = 1.0 / static_cast<double>(cells);
  std::vector<double> magnitudes(cells);
  for (std::size_t f = 0; f < bank.size(); ++f) {
    const std::vector<double>& g = bank[f];
    for (std::size_t i = 0; i < cells; ++i) {
      filtered.data[i][0] = spectrum.data[i][0] * g[i];
      filtered.data[i][1] = spectrum.data[i][1] * g[i];
    }
    inverse.execute();
    for (std::size_t i = 0; i < cells; ++i)
      magnitudes[i] =
          std::hypot(response.data[i][0] * inv_cells, response.data[i][1] * inv_cells);
    fn(f, magnitudes);
  }
}

}  // namespace

void GistConfig::validate() const {
  if (scales < 1 || orientations_per_scale < 1)
    throw input_error("gist needs scales >= 1 and orientations_per_scale >= 1");
  if (blocks < 1) throw input_error("gist needs blocks >= 1");
  if (image_side < blocks)
    throw input_error("gist image_side must be at least the block count");
  if (image_side % blocks != 0)
    throw input_error("gist image_side must be divisible by blocks");
}

std::vector<std::vector<double>> gist_filter_bank(int side, int scales,
                                                  int orientations) {
  if (side < 1 || scales < 1 || orientations < 1)
    throw input_error("gist filter bank needs side, scales, orientations >= 1");
  constexpr double pi = std::numbers::pi;
  const std::size_t cells = static_cast<std::size_t>(side) * side;

  // Polar frequency grid, DC at bin (0, 0).
  std::vector<double> radius(cells), angle(cells);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const double fy = freq_index(y, side);
      const double fx = freq_index(x, side);
      radius[static_cast<std::size_t>(y) * side + x] = std::hypot(fx, fy);
      angle[static_cast<std::size_t>(y) * side + x] = std::atan2(fy, fx);
    }

  std::vector<std::vector<double>> bank;
  bank.reserve(static_cast<std::size_t>(scales) * orientations);
  for (int s = 1; s <= scales; ++s) {
    // Center frequency shrinks by 1.85 per scale; angular width follows the
    // orientation count.
    const double center = 0.3 / std::pow(1.85, s - 1);
    const double angular = static_cast<double>(orientations) * orientations / 64.0;
    for (int o = 0; o < orientations; ++o) {
      const double direction = pi * o / orientations;
      std::vector<double> g(cells);
      for (std::size_t i = 0; i < cells; ++i) {
        double t = angle[i] + direction;
        if (t < -pi) t += 2 * pi;
        if (t > pi) t -= 2 * pi;
        const double radial = radius[i] / (side * center) - 1.0;
        g[i] = std::exp(-10.0 * 0.35 * radial * radial - 2.0 * angular * pi * t * t);
      }
      g[0] = 0.0;  // remove the DC component
      bank.push_back(std::move(g));
    }
  }
  return bank;
}

std::vector<std::vector<double>> gist_response_planes(const GrayImage& image,
                                                      const GistConfig& cfg) {
  check_input(image, cfg);
  std::vector<std::vector<double>> planes(static_cast<std::size_t>(cfg.filter_count()));
  for_each_response(image, cfg,
                    [&](std::size_t f, const std::vector<double>& m) { planes[f] = m; });
  return planes;
}

Descriptor gist_extract(const GrayImage& image, const GistConfig& cfg) {
  check_input(image, cfg);
  const int n = cfg.image_side;
  const int nb = cfg.blocks;
  const int block_side = n / nb;
  const double inv_block_cells = 1.0 / (static_cast<double>(block_side) * block_side);

  Descriptor out;
  out.values.resize(static_cast<std::size_t>(cfg.descriptor_length()));
  for_each_response(image, cfg, [&](std::size_t f, const std::vector<double>& m) {
    for (int by = 0; by < nb; ++by)
      for (int bx = 0; bx < nb; ++bx) {
        double acc = 0;
        for (int y = by * block_side; y < (by + 1) * block_side; ++y)
          for (int x = bx * block_side; x < (bx + 1) * block_side; ++x) {
            const double v = m[static_cast<std::size_t>(y) * n + x];
            acc += cfg.pooling == GistConfig::Pooling::mean_energy ? v * v : v;
          }
        out.values[f * nb * nb + static_cast<std::size_t>(by) * nb + bx] =
            static_cast<float>(acc * inv_block_cells);
      }
  });
  return out;
}

}  // namespace ndbench
