#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "afv/audio_io.hpp"

namespace afv {

enum class Window { hann, rectangular };

std::string to_string(Window window);
Window parse_window(const std::string& text);

/// Symmetric window of length n; Hann is 0.5 (1 - cos(2 pi k / (n - 1))).
std::vector<double> make_window(Window window, std::size_t n);

/// One-sided STFT of every channel of a chunk: snapshots x channels x bins.
class SpectralSnapshots {
 public:
  SpectralSnapshots(std::size_t snapshots, std::size_t channels, std::size_t fft_size, std::size_t hop,
                    Window window, double sample_rate);

  std::size_t snapshots() const noexcept { return snapshots_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t bins() const noexcept { return fft_size_ / 2 + 1; }
  std::size_t fft_size() const noexcept { return fft_size_; }
  std::size_t hop() const noexcept { return hop_; }
  Window window() const noexcept { return window_; }
  double bin_hz() const noexcept { return sample_rate_ / double(fft_size_); }

  std::complex<double>& at(std::size_t s, std::size_t m, std::size_t k) {
    return values_[(s * channels_ + m) * bins() + k];
  }
  const std::complex<double>& at(std::size_t s, std::size_t m, std::size_t k) const {
    return values_[(s * channels_ + m) * bins() + k];
  }
  /// Channel vector of snapshot `s` at bin `k`.
  Eigen::VectorXcd snapshot_vector(std::size_t s, std::size_t k) const;

 private:
  std::size_t snapshots_;
  std::size_t channels_;
  std::size_t fft_size_;
  std::size_t hop_;
  Window window_;
  double sample_rate_;
  std::vector<std::complex<double>> values_;
};

/// Number of full frames of `fft_size` at stride `hop` in `frames` samples.
std::size_t snapshot_count(std::size_t frames, std::size_t fft_size, std::size_t hop);

/// Snapshot s, channel m, bin k is FFT(window * x_m[s*hop, s*hop + fft_size))[k].
/// No window normalization is applied.
SpectralSnapshots stft_snapshots(const AudioChunk& chunk, std::size_t fft_size, std::size_t hop,
                                 Window window = Window::hann);

/// round(center_hz * fft_size / sample_rate); throws for 0 or >= Nyquist.
std::size_t band_bin(double center_hz, double sample_rate, std::size_t fft_size);

struct CrossSpectralMatrix {
  Eigen::MatrixXcd matrix;
  std::size_t bin = 0;
  std::size_t snapshot_count = 0;
  double loading_eps = 0.0;

  std::size_t channels() const noexcept { return std::size_t(matrix.rows()); }
};

inline constexpr double kDefaultLoadingEps = 1e-6;

/// Snapshot-averaged outer product R = (1/S) sum_s x_s x_s^H, plus diagonal
/// loading loading_eps * trace(R)/M * I. The result is exactly Hermitian.
CrossSpectralMatrix estimate_csm(const SpectralSnapshots& snapshots, std::size_t bin,
                                 double loading_eps = kDefaultLoadingEps);

/// Same estimator pooled over the snapshots of several chunks (CSM accumulation).
CrossSpectralMatrix estimate_csm(std::span<const SpectralSnapshots> history, std::size_t bin,
                                 double loading_eps = kDefaultLoadingEps);

}  // namespace afv
