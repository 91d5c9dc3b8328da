#pragma once

#include <span>

#include "slscan/frame_set.hpp"
#include "slscan/image.hpp"
#include "slscan/patterns.hpp"

namespace slscan {

/// Default modulation threshold on the [0, 1] intensity scale.
inline constexpr double kDefaultModulationThreshold = 0.02;

struct PixelPhase {
  double phase;       // wrapped, [0, 2pi)
  double shading;     // A
  double modulation;  // B
};

/// Wraps an atan2 result into [0, 2pi).
inline double wrap_phase(double angle) {
  double w = angle < 0.0 ? angle + kTwoPi : angle;
  return w >= kTwoPi ? w - kTwoPi : w;
}

/// Three-step closed form: atan2(sqrt(3)(I2 - I3), 2 I1 - I2 - I3) mod 2pi.
PixelPhase three_step_phase(double i1, double i2, double i3);

/// Least-squares N-step estimator; agrees with three_step_phase at N = 3.
PixelPhase n_step_phase(std::span<const double> intensities);

/// Dispatches to the closed form for N = 3, otherwise the N-step estimator.
PixelPhase pixel_phase(std::span<const double> intensities);

struct WrappedPhase {
  ImageD phase;
  ImageD shading;
  ImageD modulation;
};

/// Per-pixel wrapped phase of N equally shifted images. Throws DataError on
/// N < 3 or mismatched sizes.
WrappedPhase wrapped_phase(std::span<const ImageHandle> images);

struct PixelOrder {
  int order;       // fringe order k, clamped into [0, n_fringe - 1]
  double absolute; // phi_h + 2 pi k
  bool in_range;   // k before clamping was inside [0, n_fringe - 1]
};

/// Temporal unwrapping of one pixel: k = round((n phi_l - phi_h) / 2pi).
PixelOrder unwrap_pixel(double phi_high, double phi_low, int n_fringe);

struct Unwrapped {
  Image<int> order;
  ImageD absolute;
  Mask in_range;
};

Unwrapped unwrap_temporal(const ImageD& phi_high, const ImageD& phi_low, int n_fringe);

enum class ProjectorAxis { u, v };

inline ProjectorAxis encoded_axis(Orientation o) {
  return o == Orientation::vertical ? ProjectorAxis::u : ProjectorAxis::v;
}

struct ProjectorCoordMap {
  ImageD coord;  // projector pixels along `axis`
  ProjectorAxis axis = ProjectorAxis::u;
  Mask mask;
};

/// p = lambda * Phi / 2pi. Pixels outside [0, extent) or already masked out are invalid.
ProjectorCoordMap to_projector_coord(const ImageD& absolute, const Mask& mask, const PatternSpec& spec);

struct PhaseMaps {
  ImageD phi_high;
  ImageD phi_low;
  ImageD shading;          // A of the high-frequency set
  ImageD modulation;       // B of the high-frequency set
  ImageD modulation_low;   // B of the unit-frequency set
  Image<int> order;
  ImageD absolute;
  Mask mask;
};

struct DecodeOptions {
  double modulation_threshold = kDefaultModulationThreshold;
};

struct DecodeResult {
  PhaseMaps phases;
  ProjectorCoordMap coords;
};

/// Full decode of a 2N-image frame set. Valid pixels need B >= threshold in both
/// sets, an in-range fringe order, an in-range projector coordinate, and the
/// frame set's own validity mask when present.
DecodeResult decode_full(const FrameSet& frames, const DecodeOptions& options = {});

}  // namespace slscan
