#pragma once

#include <complex>
#include <vector>

namespace slscan::detail {

using Complex = std::complex<double>;

/// 2D complex DFT of a row-major width x height buffer (FFTW backend).
/// Forward uses exp(-2 pi i ...); inverse is unnormalized.
class Dft2d {
 public:
  Dft2d(int width, int height);
  ~Dft2d();
  Dft2d(const Dft2d&) = delete;
  Dft2d& operator=(const Dft2d&) = delete;

  void forward(std::vector<Complex>& data) const;
  void inverse(std::vector<Complex>& data) const;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

 private:
  void run(void* plan, std::vector<Complex>& data) const;

  int width_;
  int height_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
  Complex* scratch_ = nullptr;
};

}  // namespace slscan::detail
