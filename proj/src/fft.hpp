#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace afv::detail {

/// Real-input DFT of fixed length n via FFTW. Unnormalized forward transform
/// X[k] = sum_n x[n] exp(-2 pi i k n / N); inverse divides by N.
/// Plans are created once; transforms are safe to run concurrently.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  void forward(std::span<const double> input, std::span<std::complex<double>> output) const;
  void inverse(std::span<const std::complex<double>> input, std::span<double> output) const;

 private:
  struct Plans;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace afv::detail
