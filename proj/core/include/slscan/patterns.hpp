#pragma once

#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "slscan/image.hpp"

namespace slscan {

/// Vertical patterns vary along projector x and encode u_p; horizontal patterns
/// vary along projector y and encode v_p.
enum class Orientation { vertical, horizontal };

enum class FringeSet { high, unit };

/// Sign of the per-step phase shift: pattern i (0-based) is
/// cos(phase + kPhaseShiftSign * 2*pi*i/N). Decoding reads the same constant.
inline constexpr double kPhaseShiftSign = -1.0;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct PatternSpec {
  Orientation orientation = Orientation::vertical;
  int steps = 3;
  int n_fringe = 16;
  int projector_width = 912;
  int projector_height = 1140;

  /// Throws ConfigError on an invalid spec.
  void validate() const;
  /// Projector pixels along the propagation axis.
  int extent() const noexcept {
    return orientation == Orientation::vertical ? projector_width : projector_height;
  }
  /// Fringe wavelength in projector pixels; may be fractional.
  double wavelength() const noexcept { return static_cast<double>(extent()) / n_fringe; }

  friend bool operator==(const PatternSpec&, const PatternSpec&) = default;
};

std::string to_string(Orientation o);
Orientation orientation_from_string(const std::string& s);

/// Phase shift applied to step `step` (0-based) of an N-step set.
inline double step_shift(int step, int steps) {
  return kPhaseShiftSign * kTwoPi * step / steps;
}

/// Analytic pattern intensity in [0, 1] at projector coordinate `p` along the
/// propagation axis.
double pattern_value(const PatternSpec& spec, FringeSet set, int step, double p);

/// 2N images: N high-frequency steps followed by N unit-frequency steps.
struct PatternSequence {
  PatternSpec spec;
  std::vector<ImageD> images;
  std::optional<int> quantized_bits;

  const ImageD& image(FringeSet set, int step) const {
    return images[static_cast<std::size_t>((set == FringeSet::high ? 0 : spec.steps) + step)];
  }
};

PatternSequence generate(const PatternSpec& spec);

/// Rounds every value to the nearest level of a `bits`-bit grid (half rounds up).
/// bits must be one of 8, 10, 12, 16. Idempotent.
PatternSequence quantize(const PatternSequence& seq, int bits);

double quantize_value(double value, int bits);

/// "pat_hf_1.pgm" style file name; `step` is 0-based, the name is 1-based.
std::string pattern_file_name(FringeSet set, int step, const std::string& extension = "pgm");

}  // namespace slscan
