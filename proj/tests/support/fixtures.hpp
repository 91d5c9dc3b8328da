#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "slscan/decode.hpp"
#include "slscan/geometry.hpp"
#include "slscan/image.hpp"
#include "slscan/patterns.hpp"
#include "slscan/scene.hpp"
#include "slscan/simulator.hpp"

namespace slscan::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("slscan_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline StereoRig default_rig(double k1_camera = 0.0, double k1_projector = 0.0, int baseline_axis = 0) {
  RigSpec spec;
  spec.camera_distortion = Distortion(k1_camera, 0, 0, 0, 0);
  spec.projector_distortion = Distortion(k1_projector, 0, 0, 0, 0);
  spec.baseline_axis = baseline_axis;
  return make_rig(spec);
}

inline Scene fronto_plane(double z) { return Scene(Plane{Vec3(0, 0, z), Vec3(0, 0, -1)}); }

inline RenderConfig analytic_render() {
  RenderConfig cfg;
  cfg.sampling = PatternSampling::analytic;
  return cfg;
}

inline PatternSpec pattern(Orientation o = Orientation::vertical, int steps = 3, int n_fringe = 16) {
  PatternSpec spec;
  spec.orientation = o;
  spec.steps = steps;
  spec.n_fringe = n_fringe;
  return spec;
}

/// out(x, y) = in(x - dx, y - dy) with wrap-around.
inline ImageD circular_shift(const ImageD& in, int dx, int dy) {
  ImageD out(in.width(), in.height());
  const int w = in.width();
  const int h = in.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out(x, y) = in(((x - dx) % w + w) % w, ((y - dy) % h + h) % h);
  }
  return out;
}

/// White noise, strongly textured at every frequency.
inline ImageD noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageD img(w, h);
  for (auto& v : img.pixels()) v = u(rng);
  return img;
}

/// Sum of random plane waves with periods of at least `min_period` pixels,
/// evaluated at (x - sx, y - sy) so that shifted copies are exact.
class WaveImage {
 public:
  WaveImage(std::uint64_t seed, int components = 12, double min_period = 8.0, double max_period = 40.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    std::uniform_real_distribution<double> period(min_period, max_period);
    for (int i = 0; i < components; ++i) {
      const double a = angle(rng);
      const double k = kTwoPi / period(rng);
      waves_.push_back({k * std::cos(a), k * std::sin(a), angle(rng)});
    }
  }

  ImageD render(int w, int h, double sx = 0.0, double sy = 0.0) const {
    ImageD img(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double v = 0.0;
        for (const auto& wv : waves_) v += std::cos(wv.kx * (x - sx) + wv.ky * (y - sy) + wv.phase);
        img(x, y) = 0.5 + 0.5 * v / static_cast<double>(waves_.size());
      }
    }
    return img;
  }

 private:
  struct Wave {
    double kx, ky, phase;
  };
  std::vector<Wave> waves_;
};

/// Bilinearly interpolated random lattice (value noise): a continuous texture
/// with a broad spectrum. render() samples it at (x - sx, y - sy).
class ValueNoise {
 public:
  ValueNoise(std::uint64_t seed, double cell = 3.0, int lattice = 256) : cell_(cell), n_(lattice) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    values_.resize(static_cast<std::size_t>(n_) * n_);
    for (auto& v : values_) v = u(rng);
  }

  double at(double x, double y) const {
    const double gx = x / cell_ + 8.0;
    const double gy = y / cell_ + 8.0;
    const int ix = static_cast<int>(std::floor(gx));
    const int iy = static_cast<int>(std::floor(gy));
    const double fx = gx - ix;
    const double fy = gy - iy;
    auto v = [&](int i, int j) { return values_[static_cast<std::size_t>(((j % n_) + n_) % n_) * n_ + ((i % n_) + n_) % n_]; };
    return (1 - fy) * ((1 - fx) * v(ix, iy) + fx * v(ix + 1, iy)) + fy * ((1 - fx) * v(ix, iy + 1) + fx * v(ix + 1, iy + 1));
  }

  ImageD render(int w, int h, double sx = 0.0, double sy = 0.0) const {
    ImageD img(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) img(x, y) = at(x - sx, y - sy);
    }
    return img;
  }

 private:
  double cell_;
  int n_;
  std::vector<double> values_;
};

/// Periodic image with a random full-band spectrum. render(sx, sy) evaluates the
/// trigonometric interpolant at (x - sx, y - sy), an exact circular shift by any
/// real amount. Sizes must be odd so that no Nyquist bin exists.
class BandlimitedImage {
 public:
  BandlimitedImage(std::uint64_t seed, int n) : n_(n), spectrum_(static_cast<std::size_t>(n) * n) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& c : spectrum_) c = {g(rng), g(rng)};
  }

  ImageD render(double sx = 0.0, double sy = 0.0) const {
    const int n = n_;
    const int half = n / 2;
    auto freq = [&](int i) { return i - half; };
    // Sum over l first: g(k, y) = sum_l F(k, l) e^{2 pi i l (y - sy) / n}.
    std::vector<std::complex<double>> g(static_cast<std::size_t>(n) * n);
    for (int k = 0; k < n; ++k) {
      for (int y = 0; y < n; ++y) {
        std::complex<double> acc = 0.0;
        for (int l = 0; l < n; ++l) {
          acc += spectrum_[static_cast<std::size_t>(k) * n + l] * std::polar(1.0, kTwoPi * freq(l) * (y - sy) / n);
        }
        g[static_cast<std::size_t>(k) * n + y] = acc;
      }
    }
    ImageD img(n, n);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        std::complex<double> acc = 0.0;
        for (int k = 0; k < n; ++k) {
          acc += g[static_cast<std::size_t>(k) * n + y] * std::polar(1.0, kTwoPi * freq(k) * (x - sx) / n);
        }
        img(x, y) = acc.real() / (n * n);
      }
    }
    return img;
  }

 private:
  int n_;
  std::vector<std::complex<double>> spectrum_;
};

/// Shortest signed angular difference a - b.
inline double angle_diff(double a, double b) { return std::remainder(a - b, kTwoPi); }

}  // namespace slscan::testing
