#pragma once

#include <optional>
#include <vector>

#include "slscan/image.hpp"
#include "slscan/patterns.hpp"

namespace slscan {

/// Camera images covering one projected pattern sequence, in projection order.
/// Intensities are on a [0, 1] scale. `valid`, when present, marks pixels that
/// carry data in every image (alignment shrinks it).
struct FrameSet {
  std::vector<ImageHandle> images;
  std::vector<double> timestamps;  // seconds
  PatternSpec spec;
  std::optional<Mask> valid;

  int width() const { return images.empty() ? 0 : images.front()->width(); }
  int height() const { return images.empty() ? 0 : images.front()->height(); }
  std::size_t size() const noexcept { return images.size(); }

  /// Throws DataError on mismatched dimensions or counts.
  void check_consistent() const;
};

}  // namespace slscan
