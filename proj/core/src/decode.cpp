#include "slscan/decode.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "slscan/error.hpp"

namespace slscan {

void FrameSet::check_consistent() const {
  if (images.empty()) throw DataError("frame set: no images");
  for (const auto& img : images) {
    if (!img) throw DataError("frame set: null image handle");
    if (!img->same_size(*images.front())) throw DataError("frame set: image dimensions differ");
  }
  if (!timestamps.empty() && timestamps.size() != images.size()) {
    throw DataError("frame set: timestamp count does not match image count");
  }
  if (valid && !valid->same_size(*images.front())) {
    throw DataError("frame set: validity mask dimensions differ");
  }
}

PixelPhase three_step_phase(double i1, double i2, double i3) {
  const double num = -kPhaseShiftSign * std::numbers::sqrt3 * (i2 - i3);
  const double den = 2.0 * i1 - i2 - i3;
  return {wrap_phase(std::atan2(num, den)), (i1 + i2 + i3) / 3.0,
          std::sqrt(num * num + den * den) / 3.0};
}

PixelPhase n_step_phase(std::span<const double> intensities) {
  const int n = static_cast<int>(intensities.size());
  if (n < 3) throw DataError("phase: at least 3 steps are required");
  double s = 0.0;
  double c = 0.0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double delta = kTwoPi * i / n;
    s += intensities[static_cast<std::size_t>(i)] * std::sin(delta);
    c += intensities[static_cast<std::size_t>(i)] * std::cos(delta);
    sum += intensities[static_cast<std::size_t>(i)];
  }
  return {wrap_phase(std::atan2(-kPhaseShiftSign * s, c)), sum / n,
          2.0 / n * std::sqrt(s * s + c * c)};
}

PixelPhase pixel_phase(std::span<const double> intensities) {
  if (intensities.size() == 3) return three_step_phase(intensities[0], intensities[1], intensities[2]);
  return n_step_phase(intensities);
}

WrappedPhase wrapped_phase(std::span<const ImageHandle> images) {
  const int n = static_cast<int>(images.size());
  if (n < 3) throw DataError("phase: at least 3 steps are required");
  for (const auto& img : images) {
    if (!img || !img->same_size(*images.front())) throw DataError("phase: image dimensions differ");
  }
  const int width = images.front()->width();
  const int height = images.front()->height();
  WrappedPhase out{ImageD(width, height), ImageD(width, height), ImageD(width, height)};
  std::vector<double> samples(static_cast<std::size_t>(n));
  const std::size_t count = images.front()->size();
  for (std::size_t px = 0; px < count; ++px) {
    for (int i = 0; i < n; ++i) samples[static_cast<std::size_t>(i)] = (*images[static_cast<std::size_t>(i)])[px];
    const PixelPhase p = pixel_phase(samples);
    out.phase[px] = p.phase;
    out.shading[px] = p.shading;
    out.modulation[px] = p.modulation;
  }
  return out;
}

PixelOrder unwrap_pixel(double phi_high, double phi_low, int n_fringe) {
  const double raw = std::round((n_fringe * phi_low - phi_high) / kTwoPi);
  const bool in_range = raw >= 0.0 && raw <= n_fringe - 1.0;
  const int k = static_cast<int>(std::clamp(raw, 0.0, n_fringe - 1.0));
  return {k, phi_high + kTwoPi * k, in_range};
}

Unwrapped unwrap_temporal(const ImageD& phi_high, const ImageD& phi_low, int n_fringe) {
  if (!phi_high.same_size(phi_low)) throw DataError("unwrap: phase maps differ in size");
  if (n_fringe < 1) throw ConfigError("unwrap: n_fringe must be >= 1");
  Unwrapped out{Image<int>(phi_high.width(), phi_high.height()),
                ImageD(phi_high.width(), phi_high.height()), Mask(phi_high.width(), phi_high.height())};
  for (std::size_t px = 0; px < phi_high.size(); ++px) {
    const PixelOrder o = unwrap_pixel(phi_high[px], phi_low[px], n_fringe);
    out.order[px] = o.order;
    out.absolute[px] = o.absolute;
    out.in_range[px] = o.in_range ? 1 : 0;
  }
  return out;
}

ProjectorCoordMap to_projector_coord(const ImageD& absolute, const Mask& mask, const PatternSpec& spec) {
  if (!absolute.same_size(mask)) throw DataError("projector coordinates: mask size differs");
  ProjectorCoordMap out{ImageD(absolute.width(), absolute.height()), encoded_axis(spec.orientation),
                        Mask(absolute.width(), absolute.height())};
  const double scale = spec.wavelength() / kTwoPi;
  const double extent = spec.extent();
  for (std::size_t px = 0; px < absolute.size(); ++px) {
    const double p = scale * absolute[px];
    out.coord[px] = p;
    out.mask[px] = (mask[px] != 0 && std::isfinite(p) && p >= 0.0 && p < extent) ? 1 : 0;
  }
  return out;
}

DecodeResult decode_full(const FrameSet& frames, const DecodeOptions& options) {
  frames.spec.validate();
  const int n = frames.spec.steps;
  if (static_cast<int>(frames.size()) != 2 * n) {
    throw DataError("decode: incomplete frame set (expected " + std::to_string(2 * n) + " images, got " +
                    std::to_string(frames.size()) + ")");
  }
  frames.check_consistent();
  const std::span<const ImageHandle> all(frames.images);
  WrappedPhase high = wrapped_phase(all.subspan(0, static_cast<std::size_t>(n)));
  WrappedPhase low = wrapped_phase(all.subspan(static_cast<std::size_t>(n), static_cast<std::size_t>(n)));
  Unwrapped unwrapped = unwrap_temporal(high.phase, low.phase, frames.spec.n_fringe);

  Mask mask(frames.width(), frames.height());
  for (std::size_t px = 0; px < mask.size(); ++px) {
    const bool ok = high.modulation[px] >= options.modulation_threshold &&
                    low.modulation[px] >= options.modulation_threshold && unwrapped.in_range[px] != 0 &&
                    (!frames.valid || (*frames.valid)[px] != 0);
    mask[px] = ok ? 1 : 0;
  }
  ProjectorCoordMap coords = to_projector_coord(unwrapped.absolute, mask, frames.spec);
  mask = coords.mask;

  DecodeResult result;
  result.phases.phi_high = std::move(high.phase);
  result.phases.phi_low = std::move(low.phase);
  result.phases.shading = std::move(high.shading);
  result.phases.modulation = std::move(high.modulation);
  result.phases.modulation_low = std::move(low.modulation);
  result.phases.order = std::move(unwrapped.order);
  result.phases.absolute = std::move(unwrapped.absolute);
  result.phases.mask = std::move(mask);
  result.coords = std::move(coords);
  return result;
}

}  // namespace slscan
