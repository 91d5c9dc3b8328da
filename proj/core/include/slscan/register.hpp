#pragma once

#include <string>
#include <vector>

#include "slscan/error.hpp"
#include "slscan/frame_set.hpp"
#include "slscan/image.hpp"

namespace slscan {

/// Which translation components may be nonzero. The sensor is assumed to move
/// along a single axis without rotating.
enum class AxisConstraint { none, x_only, y_only };

std::string to_string(AxisConstraint c);
AxisConstraint axis_constraint_from_string(const std::string& s);

enum class SubpixelMethod {
  none,
  sinc,       ///< exact for the sinc-shaped peak of an ideal fractional shift
  parabolic,  ///< 3-point parabola
};

struct PhaseCorrelationOptions {
  bool hann_window = true;
  SubpixelMethod subpixel = SubpixelMethod::sinc;
};

/// Displacement of `m` relative to `f`: m(x, y) ~ f(x - dx, y - dy).
struct ShiftEstimate {
  double dx = 0.0;
  double dy = 0.0;
  double peak_value = 0.0;  // height of the correlation peak, 1 for identical images
  AxisConstraint constraint = AxisConstraint::none;
};

class DegenerateSpectrum : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Phase correlation: inverse DFT of the normalized cross-power spectrum
/// F . conj(M) / |F . conj(M)|, whose peak sits at (-dx, -dy). Bins below
/// 1e-12 of the strongest are zeroed. Throws DegenerateSpectrum for flat images
/// and when more than half of the unwindowed cross-power bins are that weak.
ShiftEstimate phase_correlate(const ImageD& f, const ImageD& m, AxisConstraint constraint,
                              const PhaseCorrelationOptions& options = {});

struct ImageShift {
  ShiftEstimate estimate;
  bool usable = true;
  std::string error;  // set when unusable
};

struct MotionPlan {
  int reference_index = 0;
  std::vector<ImageShift> shifts;  // one per image; the reference is (0, 0)
};

/// Middle image: ceil(count / 2) - 1.
int default_reference_index(int count);

/// Registers every image against the reference image independently.
MotionPlan plan_motion(const FrameSet& frames, int reference_index, AxisConstraint constraint,
                       const PhaseCorrelationOptions& options = {});

enum class Interpolation { nearest, bilinear };

std::string to_string(Interpolation i);
Interpolation interpolation_from_string(const std::string& s);

/// Resamples each image into the reference frame: out_i(x, y) = in_i(x + dx_i, y + dy_i).
/// Pixels that would be read from outside an image are marked invalid in the
/// result's `valid` mask. Nearest interpolation rounds shifts to whole pixels.
/// Throws NumericalError if the plan marks any image unusable.
FrameSet align(const FrameSet& frames, const MotionPlan& plan, Interpolation interpolation);

std::string motion_plan_to_json(const MotionPlan& plan);

}  // namespace slscan
