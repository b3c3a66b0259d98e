#include "fft.hpp"

#include <algorithm>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "afv/error.hpp"

namespace afv::detail {

namespace {
// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

RealFft::RealFft(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n == 0) throw Error(ErrorKind::argument, "FFT size must be positive");
  std::lock_guard lock(planner_mutex());
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  plans_->r2c = fftw_plan_dft_r2c_1d(int(n), in, out, FFTW_ESTIMATE);
  plans_->c2r = fftw_plan_dft_c2r_1d(int(n), out, in, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  if (!plans_->r2c || !plans_->c2r) throw Error(ErrorKind::numeric, "FFTW planning failed");
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->r2c);
  fftw_destroy_plan(plans_->c2r);
}

void RealFft::forward(std::span<const double> input, std::span<std::complex<double>> output) const {
  // Scratch buffers from fftw_alloc keep the SIMD alignment the plan was made with.
  double* in = fftw_alloc_real(n_);
  fftw_complex* out = fftw_alloc_complex(bins());
  std::copy_n(input.begin(), n_, in);
  fftw_execute_dft_r2c(plans_->r2c, in, out);
  for (std::size_t k = 0; k < bins(); ++k) output[k] = {out[k][0], out[k][1]};
  fftw_free(in);
  fftw_free(out);
}

void RealFft::inverse(std::span<const std::complex<double>> input, std::span<double> output) const {
  double* out = fftw_alloc_real(n_);
  fftw_complex* in = fftw_alloc_complex(bins());
  for (std::size_t k = 0; k < bins(); ++k) {
    in[k][0] = input[k].real();
    in[k][1] = input[k].imag();
  }
  fftw_execute_dft_c2r(plans_->c2r, in, out);
  const double scale = 1.0 / double(n_);
  for (std::size_t i = 0; i < n_; ++i) output[i] = out[i] * scale;
  fftw_free(in);
  fftw_free(out);
}

}  // namespace afv::detail
