#include "afv/spectral.hpp"

#include <cmath>
#include <numbers>

#include "afv/error.hpp"
#include "fft.hpp"

namespace afv {

std::string to_string(Window window) {
  return window == Window::hann ? "hann" : "rectangular";
}

Window parse_window(const std::string& text) {
  if (text == "hann") return Window::hann;
  if (text == "rectangular" || text == "rect") return Window::rectangular;
  throw Error(ErrorKind::argument, "unknown window '" + text + "'");
}

std::vector<double> make_window(Window window, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (window == Window::hann && n > 1) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(i) / double(n - 1)));
    }
  }
  return w;
}

SpectralSnapshots::SpectralSnapshots(std::size_t snapshots, std::size_t channels, std::size_t fft_size,
                                     std::size_t hop, Window window, double sample_rate)
    : snapshots_(snapshots),
      channels_(channels),
      fft_size_(fft_size),
      hop_(hop),
      window_(window),
      sample_rate_(sample_rate),
      values_(snapshots * channels * (fft_size / 2 + 1)) {}

Eigen::VectorXcd SpectralSnapshots::snapshot_vector(std::size_t s, std::size_t k) const {
  Eigen::VectorXcd x(channels_);
  for (std::size_t m = 0; m < channels_; ++m) x[Eigen::Index(m)] = at(s, m, k);
  return x;
}

std::size_t snapshot_count(std::size_t frames, std::size_t fft_size, std::size_t hop) {
  if (fft_size == 0 || hop == 0 || frames < fft_size) return 0;
  return (frames - fft_size) / hop + 1;
}

SpectralSnapshots stft_snapshots(const AudioChunk& chunk, std::size_t fft_size, std::size_t hop,
                                 Window window) {
  if (fft_size < 2) throw Error(ErrorKind::argument, "FFT size must be at least 2");
  if (hop == 0) throw Error(ErrorKind::argument, "STFT hop must be positive");
  if (chunk.frames() < fft_size) {
    throw Error(ErrorKind::argument, "chunk of " + std::to_string(chunk.frames()) +
                                         " frames is shorter than the FFT size " + std::to_string(fft_size));
  }
  const std::size_t count = snapshot_count(chunk.frames(), fft_size, hop);
  SpectralSnapshots out(count, chunk.channels(), fft_size, hop, window, chunk.sample_rate());

  const detail::RealFft fft(fft_size);
  const std::vector<double> w = make_window(window, fft_size);
  std::vector<double> frame(fft_size);
  std::vector<std::complex<double>> spectrum(fft.bins());
  for (std::size_t m = 0; m < chunk.channels(); ++m) {
    const auto x = chunk.channel(m);
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t n = 0; n < fft_size; ++n) frame[n] = w[n] * x[s * hop + n];
      fft.forward(frame, spectrum);
      for (std::size_t k = 0; k < fft.bins(); ++k) out.at(s, m, k) = spectrum[k];
    }
  }
  return out;
}

std::size_t band_bin(double center_hz, double sample_rate, std::size_t fft_size) {
  if (!(center_hz > 0.0) || !(center_hz < sample_rate / 2.0)) {
    throw Error(ErrorKind::argument, "band center " + std::to_string(center_hz) +
                                         " Hz is outside (0, Nyquist)");
  }
  const auto bin = static_cast<std::size_t>(std::llround(center_hz * double(fft_size) / sample_rate));
  if (bin == 0 || bin >= fft_size / 2) {
    throw Error(ErrorKind::argument, "band center " + std::to_string(center_hz) + " Hz rounds to bin " +
                                         std::to_string(bin) + ", outside the usable range");
  }
  return bin;
}

CrossSpectralMatrix estimate_csm(std::span<const SpectralSnapshots> history, std::size_t bin,
                                 double loading_eps) {
  if (history.empty()) throw Error(ErrorKind::argument, "CSM estimation needs at least one chunk");
  if (!(loading_eps >= 0.0)) throw Error(ErrorKind::argument, "diagonal loading must be >= 0");
  const std::size_t channels = history.front().channels();
  const auto M = Eigen::Index(channels);
  Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(M, M);
  std::size_t total = 0;
  for (const auto& snaps : history) {
    if (snaps.channels() != channels) throw Error(ErrorKind::argument, "CSM history channel mismatch");
    if (bin >= snaps.bins()) throw Error(ErrorKind::argument, "CSM bin out of range");
    for (std::size_t s = 0; s < snaps.snapshots(); ++s) {
      const Eigen::VectorXcd x = snaps.snapshot_vector(s, bin);
      R.noalias() += x * x.adjoint();
    }
    total += snaps.snapshots();
  }
  if (total == 0) throw Error(ErrorKind::argument, "CSM estimation needs at least one snapshot");
  R /= double(total);

  // Mirror the upper triangle so R == R^H holds bit-for-bit.
  for (Eigen::Index i = 0; i < M; ++i) {
    R(i, i) = R(i, i).real();
    for (Eigen::Index j = i + 1; j < M; ++j) R(j, i) = std::conj(R(i, j));
  }
  const double trace = R.diagonal().real().sum();
  if (loading_eps > 0.0) R.diagonal().array() += loading_eps * trace / double(M);
  return {std::move(R), bin, total, loading_eps};
}

CrossSpectralMatrix estimate_csm(const SpectralSnapshots& snapshots, std::size_t bin, double loading_eps) {
  return estimate_csm(std::span<const SpectralSnapshots>(&snapshots, 1), bin, loading_eps);
}

}  // namespace afv
