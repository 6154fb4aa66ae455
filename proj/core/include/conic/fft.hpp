#pragma once

// Batched 1D complex FFTs along either axis of an (nr x ntheta) row-major
// array. Transforms are unnormalised; backward(forward(x)) = n x.

#include <complex>
#include <memory>

namespace conic {

using cplx = std::complex<double>;

class GridFft {
 public:
  GridFft(int nr, int ntheta);
  ~GridFft();
  GridFft(const GridFft&) = delete;
  GridFft& operator=(const GridFft&) = delete;
  GridFft(GridFft&&) noexcept;
  GridFft& operator=(GridFft&&) noexcept;

  int nr() const;
  int ntheta() const;

  void forward_r(cplx* data) const;
  void backward_r(cplx* data) const;
  void forward_theta(cplx* data) const;
  void backward_theta(cplx* data) const;

 private:
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

// Angular frequency of FFT bin k for n samples with spacing d.
double fft_wavenumber(int k, int n, double d);

}  // namespace conic
