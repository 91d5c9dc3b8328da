#include "fft.hpp"

#include <algorithm>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace slscan::detail {

namespace {
// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Dft2d::Dft2d(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("dft: empty size");
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  scratch_ = reinterpret_cast<Complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  std::lock_guard lock(planner_mutex());
  auto* buf = reinterpret_cast<fftw_complex*>(scratch_);
  // Row-major: slowest dimension (rows = height) first.
  forward_plan_ = fftw_plan_dft_2d(height, width, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_2d(height, width, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Dft2d::~Dft2d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(scratch_);
}

void Dft2d::run(void* plan, std::vector<Complex>& data) const {
  const std::size_t n = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  if (data.size() != n) throw std::invalid_argument("dft: buffer size mismatch");
  std::copy(data.begin(), data.end(), scratch_);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch_);
  fftw_execute_dft(static_cast<fftw_plan>(plan), buf, buf);
  std::copy(scratch_, scratch_ + n, data.begin());
}

void Dft2d::forward(std::vector<Complex>& data) const { run(forward_plan_, data); }
void Dft2d::inverse(std::vector<Complex>& data) const { run(inverse_plan_, data); }

}  // namespace slscan::detail
