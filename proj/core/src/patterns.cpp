#include "slscan/patterns.hpp"

#include <cmath>

#include "slscan/error.hpp"

namespace slscan {

void PatternSpec::validate() const {
  if (steps < 3) throw ConfigError("pattern: steps must be >= 3");
  if (n_fringe < 1) throw ConfigError("pattern: n_fringe must be >= 1");
  if (projector_width <= 0 || projector_height <= 0) {
    throw ConfigError("pattern: projector size must be positive");
  }
}

std::string to_string(Orientation o) {
  return o == Orientation::vertical ? "vertical" : "horizontal";
}

Orientation orientation_from_string(const std::string& s) {
  if (s == "vertical") return Orientation::vertical;
  if (s == "horizontal") return Orientation::horizontal;
  throw ConfigError("pattern: unknown orientation '" + s + "'");
}

double pattern_value(const PatternSpec& spec, FringeSet set, int step, double p) {
  const double fringes = set == FringeSet::high ? spec.n_fringe : 1.0;
  const double phase = kTwoPi * fringes * p / spec.extent();
  return 0.5 + 0.5 * std::cos(phase + step_shift(step, spec.steps));
}

PatternSequence generate(const PatternSpec& spec) {
  spec.validate();
  PatternSequence seq{spec, {}, std::nullopt};
  seq.images.reserve(static_cast<std::size_t>(2 * spec.steps));
  const bool vertical = spec.orientation == Orientation::vertical;
  for (FringeSet set : {FringeSet::high, FringeSet::unit}) {
    for (int step = 0; step < spec.steps; ++step) {
      // One profile along the propagation axis, replicated across the other.
      std::vector<double> profile(static_cast<std::size_t>(spec.extent()));
      for (int p = 0; p < spec.extent(); ++p) {
        profile[static_cast<std::size_t>(p)] = pattern_value(spec, set, step, p);
      }
      ImageD img(spec.projector_width, spec.projector_height);
      for (int y = 0; y < img.height(); ++y) {
        auto row = img.row(y);
        for (int x = 0; x < img.width(); ++x) {
          row[static_cast<std::size_t>(x)] =
              profile[static_cast<std::size_t>(vertical ? x : y)];
        }
      }
      seq.images.push_back(std::move(img));
    }
  }
  return seq;
}

double quantize_value(double value, int bits) {
  const double levels = std::ldexp(1.0, bits) - 1.0;
  return std::floor(std::clamp(value, 0.0, 1.0) * levels + 0.5) / levels;
}

PatternSequence quantize(const PatternSequence& seq, int bits) {
  if (bits != 8 && bits != 10 && bits != 12 && bits != 16) {
    throw ConfigError("quantize: bits must be one of 8, 10, 12, 16");
  }
  PatternSequence out = seq;
  for (auto& img : out.images) {
    for (double& v : img.pixels()) v = quantize_value(v, bits);
  }
  out.quantized_bits = bits;
  return out;
}

std::string pattern_file_name(FringeSet set, int step, const std::string& extension) {
  return std::string("pat_") + (set == FringeSet::high ? "hf" : "uf") + "_" +
         std::to_string(step + 1) + "." + extension;
}

}  // namespace slscan
