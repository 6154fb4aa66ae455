#include "conic/fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "conic/errors.hpp"
#include "conic/geometry.hpp"

namespace conic {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct GridFft::Plans {
  int nr = 0, ntheta = 0;
  fftw_plan fr = nullptr, br = nullptr, ft = nullptr, bt = nullptr;

  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    for (fftw_plan p : {fr, br, ft, bt})
      if (p) fftw_destroy_plan(p);
  }
};

GridFft::GridFft(int nr, int ntheta) : plans_(std::make_unique<Plans>()) {
  if (nr < 1 || ntheta < 1) throw DomainError("GridFft: empty grid");
  plans_->nr = nr;
  plans_->ntheta = ntheta;
  std::unique_ptr<cplx[]> scratch(new cplx[static_cast<std::size_t>(nr) * ntheta]);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.get());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  int n_r[] = {nr};
  int n_t[] = {ntheta};
  std::lock_guard<std::mutex> lock(planner_mutex());
  // along r: ntheta transforms, stride ntheta, consecutive transforms 1 apart
  plans_->fr = fftw_plan_many_dft(1, n_r, ntheta, buf, nullptr, ntheta, 1, buf, nullptr, ntheta, 1, FFTW_FORWARD, flags);
  plans_->br = fftw_plan_many_dft(1, n_r, ntheta, buf, nullptr, ntheta, 1, buf, nullptr, ntheta, 1, FFTW_BACKWARD, flags);
  // along theta: nr contiguous transforms
  plans_->ft = fftw_plan_many_dft(1, n_t, nr, buf, nullptr, 1, ntheta, buf, nullptr, 1, ntheta, FFTW_FORWARD, flags);
  plans_->bt = fftw_plan_many_dft(1, n_t, nr, buf, nullptr, 1, ntheta, buf, nullptr, 1, ntheta, FFTW_BACKWARD, flags);
  if (!plans_->fr || !plans_->br || !plans_->ft || !plans_->bt) throw Error("FFTW planning failed");
}

GridFft::~GridFft() = default;
GridFft::GridFft(GridFft&&) noexcept = default;
GridFft& GridFft::operator=(GridFft&&) noexcept = default;

int GridFft::nr() const { return plans_->nr; }
int GridFft::ntheta() const { return plans_->ntheta; }

void GridFft::forward_r(cplx* d) const {
  auto* p = reinterpret_cast<fftw_complex*>(d);
  fftw_execute_dft(plans_->fr, p, p);
}
void GridFft::backward_r(cplx* d) const {
  auto* p = reinterpret_cast<fftw_complex*>(d);
  fftw_execute_dft(plans_->br, p, p);
}
void GridFft::forward_theta(cplx* d) const {
  auto* p = reinterpret_cast<fftw_complex*>(d);
  fftw_execute_dft(plans_->ft, p, p);
}
void GridFft::backward_theta(cplx* d) const {
  auto* p = reinterpret_cast<fftw_complex*>(d);
  fftw_execute_dft(plans_->bt, p, p);
}

double fft_wavenumber(int k, int n, double d) {
  const int kk = k <= n / 2 ? k : k - n;
  return kTwoPi * kk / (n * d);
}

}  // namespace conic
