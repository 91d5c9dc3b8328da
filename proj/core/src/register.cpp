#include "slscan/register.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "fft.hpp"

namespace slscan {

using detail::Complex;

std::string to_string(AxisConstraint c) {
  switch (c) {
    case AxisConstraint::x_only:
      return "x";
    case AxisConstraint::y_only:
      return "y";
    case AxisConstraint::none:
      break;
  }
  return "none";
}

AxisConstraint axis_constraint_from_string(const std::string& s) {
  if (s == "x" || s == "x-only") return AxisConstraint::x_only;
  if (s == "y" || s == "y-only") return AxisConstraint::y_only;
  if (s == "none") return AxisConstraint::none;
  throw ConfigError("unknown motion axis '" + s + "' (expected x, y or none)");
}

std::string to_string(Interpolation i) { return i == Interpolation::nearest ? "nearest" : "bilinear"; }

Interpolation interpolation_from_string(const std::string& s) {
  if (s == "nearest") return Interpolation::nearest;
  if (s == "bilinear") return Interpolation::bilinear;
  throw ConfigError("unknown interpolation '" + s + "'");
}

namespace {

std::vector<Complex> prepare(const ImageD& img, bool window) {
  const int w = img.width();
  const int h = img.height();
  double mean = 0.0;
  for (double v : img.pixels()) mean += v;
  mean /= static_cast<double>(img.size());
  std::vector<double> wx(static_cast<std::size_t>(w), 1.0);
  std::vector<double> wy(static_cast<std::size_t>(h), 1.0);
  if (window) {
    for (int x = 0; x < w; ++x) wx[static_cast<std::size_t>(x)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * x / w);
    for (int y = 0; y < h; ++y) wy[static_cast<std::size_t>(y)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * y / h);
  }
  std::vector<Complex> out(img.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out[static_cast<std::size_t>(y) * w + x] =
          (img(x, y) - mean) * wx[static_cast<std::size_t>(x)] * wy[static_cast<std::size_t>(y)];
    }
  }
  return out;
}

int wrap_index(int i, int n) { return ((i % n) + n) % n; }

/// Spread of the pixel values is at rounding level relative to their magnitude.
bool is_flat(const ImageD& img) {
  double mean = 0.0;
  for (double v : img.pixels()) mean += v;
  mean /= static_cast<double>(img.size());
  double spread = 0.0;
  double magnitude = 0.0;
  for (double v : img.pixels()) {
    spread += (v - mean) * (v - mean);
    magnitude += v * v;
  }
  return !(spread > 1e-24 * magnitude);
}

/// Cross-power F . conj(M) in place of `fs`; returns the largest magnitude.
double cross_power(std::vector<Complex>& fs, const std::vector<Complex>& ms) {
  double peak = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    fs[i] *= std::conj(ms[i]);
    peak = std::max(peak, std::abs(fs[i]));
  }
  return peak;
}

std::size_t weak_bins(const std::vector<Complex>& cross, double peak) {
  const double eps = 1e-12 * peak;
  return static_cast<std::size_t>(
      std::count_if(cross.begin(), cross.end(), [&](const Complex& c) { return !(std::abs(c) >= eps) || c == 0.0; }));
}

/// Sub-pixel offset of the peak from three samples (left, centre, right).
double refine(double left, double centre, double right, SubpixelMethod method) {
  switch (method) {
    case SubpixelMethod::none:
      return 0.0;
    case SubpixelMethod::parabolic: {
      const double denom = left - 2.0 * centre + right;
      if (denom >= 0.0) return 0.0;
      return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
    }
    case SubpixelMethod::sinc: {
      // For an ideal fractional shift d the samples are sinc(d), sinc(1 - d),
      // sinc(1 + d), so d = c[+1] / (c[+1] + c[0]).
      // Side lobes at rounding level are treated as zero so integer shifts stay exact.
      const double floor = 1e-9 * centre;
      if (right >= left) {
        if (right <= floor || centre <= 0.0) return 0.0;
        return right / (right + centre);
      }
      if (left <= floor || centre <= 0.0) return 0.0;
      return -left / (left + centre);
    }
  }
  return 0.0;
}

}  // namespace

ShiftEstimate phase_correlate(const ImageD& f, const ImageD& m, AxisConstraint constraint,
                              const PhaseCorrelationOptions& options) {
  if (f.empty() || !f.same_size(m)) throw DataError("phase correlation: images must be non-empty and equal in size");
  const int w = f.width();
  const int h = f.height();
  const detail::Dft2d dft(w, h);

  const auto degenerate = [] { return DegenerateSpectrum("phase correlation: cross-power spectrum is degenerate (flat image?)"); };
  if (is_flat(f) || is_flat(m)) throw degenerate();

  // Spectral content is judged without the window, whose fast sidelobe decay
  // leaves most bins of a smooth image far below the strongest one.
  std::vector<Complex> fs = prepare(f, false);
  std::vector<Complex> ms = prepare(m, false);
  dft.forward(fs);
  dft.forward(ms);
  double peak_mag = cross_power(fs, ms);
  if (peak_mag == 0.0 || 2 * weak_bins(fs, peak_mag) > fs.size()) throw degenerate();
  if (options.hann_window) {
    fs = prepare(f, true);
    ms = prepare(m, true);
    dft.forward(fs);
    dft.forward(ms);
    peak_mag = cross_power(fs, ms);
    if (peak_mag == 0.0) throw degenerate();
  }

  const double eps = 1e-12 * peak_mag;
  for (auto& c : fs) {
    const double mag = std::abs(c);
    if (!(mag >= eps) || mag == 0.0) {
      c = 0.0;
    } else {
      c /= mag;
    }
  }
  dft.inverse(fs);
  const double norm = 1.0 / static_cast<double>(fs.size());
  auto corr = [&](int x, int y) {
    return fs[static_cast<std::size_t>(wrap_index(y, h)) * w + wrap_index(x, w)].real() * norm;
  };

  int px = 0;
  int py = 0;
  double best = -std::numeric_limits<double>::infinity();
  const int x_end = constraint == AxisConstraint::y_only ? 1 : w;
  const int y_end = constraint == AxisConstraint::x_only ? 1 : h;
  for (int y = 0; y < y_end; ++y) {
    for (int x = 0; x < x_end; ++x) {
      const double v = corr(x, y);
      if (v > best) {
        best = v;
        px = x;
        py = y;
      }
    }
  }

  double ox = 0.0;
  double oy = 0.0;
  if (constraint != AxisConstraint::y_only) {
    ox = refine(corr(px - 1, py), best, corr(px + 1, py), options.subpixel);
  }
  if (constraint != AxisConstraint::x_only) {
    oy = refine(corr(px, py - 1), best, corr(px, py + 1), options.subpixel);
  }
  const int sx = px > w / 2 ? px - w : px;
  const int sy = py > h / 2 ? py - h : py;

  ShiftEstimate est;
  est.dx = constraint == AxisConstraint::y_only ? 0.0 : -(sx + ox);
  est.dy = constraint == AxisConstraint::x_only ? 0.0 : -(sy + oy);
  // Avoid reporting -0.
  if (est.dx == 0.0) est.dx = 0.0;
  if (est.dy == 0.0) est.dy = 0.0;
  est.peak_value = best;
  est.constraint = constraint;
  return est;
}

int default_reference_index(int count) { return (count + 1) / 2 - 1; }

MotionPlan plan_motion(const FrameSet& frames, int reference_index, AxisConstraint constraint,
                       const PhaseCorrelationOptions& options) {
  if (frames.size() < 2) throw DataError("motion plan: need at least two images");
  frames.check_consistent();
  if (reference_index < 0 || reference_index >= static_cast<int>(frames.size())) {
    throw ConfigError("motion plan: reference index out of range");
  }
  MotionPlan plan;
  plan.reference_index = reference_index;
  const ImageD& reference = *frames.images[static_cast<std::size_t>(reference_index)];
  for (int i = 0; i < static_cast<int>(frames.size()); ++i) {
    ImageShift s;
    s.estimate.constraint = constraint;
    if (i == reference_index) {
      s.estimate.peak_value = 1.0;
    } else {
      try {
        s.estimate = phase_correlate(reference, *frames.images[static_cast<std::size_t>(i)], constraint, options);
      } catch (const Error& e) {
        s.usable = false;
        s.error = e.what();
      }
    }
    plan.shifts.push_back(std::move(s));
  }
  return plan;
}

FrameSet align(const FrameSet& frames, const MotionPlan& plan, Interpolation interpolation) {
  frames.check_consistent();
  if (plan.shifts.size() != frames.size()) throw DataError("align: plan does not cover every image");
  const int w = frames.width();
  const int h = frames.height();
  FrameSet out;
  out.spec = frames.spec;
  out.timestamps = frames.timestamps;
  Mask valid = frames.valid ? *frames.valid : Mask(w, h, 1);

  for (std::size_t i = 0; i < frames.size(); ++i) {
    const ImageShift& s = plan.shifts[i];
    if (!s.usable) throw NumericalError("align: image " + std::to_string(i) + " has no usable shift: " + s.error);
    double dx = s.estimate.dx;
    double dy = s.estimate.dy;
    if (interpolation == Interpolation::nearest) {
      dx = std::round(dx);
      dy = std::round(dy);
    }
    if (dx == 0.0 && dy == 0.0) {
      out.images.push_back(frames.images[i]);
      continue;
    }
    const ImageD& src = *frames.images[i];
    ImageD dst(w, h, 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double sx = x + dx;
        const double sy = y + dy;
        if (sx < 0.0 || sy < 0.0 || sx > w - 1.0 || sy > h - 1.0) {
          valid(x, y) = 0;
          continue;
        }
        dst(x, y) = interpolation == Interpolation::nearest
                        ? src(static_cast<int>(sx), static_cast<int>(sy))
                        : sample_bilinear(src, sx, sy);
      }
    }
    out.images.push_back(make_handle(std::move(dst)));
  }
  out.valid = std::move(valid);
  return out;
}

std::string motion_plan_to_json(const MotionPlan& plan) {
  nlohmann::json j;
  j["reference_index"] = plan.reference_index;
  j["shifts"] = nlohmann::json::array();
  for (std::size_t i = 0; i < plan.shifts.size(); ++i) {
    const auto& s = plan.shifts[i];
    nlohmann::json e{{"image", i},
                     {"dx", s.estimate.dx},
                     {"dy", s.estimate.dy},
                     {"peak", s.estimate.peak_value},
                     {"constraint", to_string(s.estimate.constraint)},
                     {"usable", s.usable}};
    if (!s.usable) e["error"] = s.error;
    j["shifts"].push_back(std::move(e));
  }
  return j.dump(2);
}

}  // namespace slscan
