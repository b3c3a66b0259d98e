#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "afv/geometry.hpp"
#include "afv/spectral.hpp"

namespace afv {

enum class FieldScale { linear, db };

/// One scalar per steering-grid cell, row-major.
struct FieldMap {
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::vector<double> values;
  FieldScale scale = FieldScale::linear;
  double band_hz = 0.0;
  std::size_t chunk_index = 0;

  std::size_t size() const noexcept { return values.size(); }
  double at(std::size_t col, std::size_t row) const { return values.at(row * cols + col); }
  std::size_t argmax() const;
};

/// Phase-only unit-norm steering vector referenced to the grid point's
/// distance from the origin: a_m = exp(-2 pi i f (|g - r_m| - |g|) / c) / sqrt(M).
Eigen::VectorXcd steering_vector(const Point3& point, const ArrayGeometry& geometry, double freq_hz,
                                 double speed_of_sound = kDefaultSpeedOfSound);

/// Steering vectors for every grid cell as columns (M x cells).
Eigen::MatrixXcd steering_matrix(const SteeringGrid& grid, const ArrayGeometry& geometry, double freq_hz,
                                 double speed_of_sound = kDefaultSpeedOfSound);

struct SubspaceSplit {
  Eigen::MatrixXcd noise;       // M x (M - n) eigenvectors of the smallest eigenvalues
  Eigen::VectorXd eigenvalues;  // ascending
  double largest_eigenvalue() const { return eigenvalues[eigenvalues.size() - 1]; }
};

/// Hermitian eigendecomposition of the CSM split at `n_sources`.
/// Throws argument error unless 1 <= n_sources < M; numeric error if the solver fails.
SubspaceSplit split_subspaces(const CrossSpectralMatrix& csm, std::size_t n_sources);

Eigen::MatrixXcd noise_subspace(const CrossSpectralMatrix& csm, std::size_t n_sources);

inline constexpr double kMusicDenominatorFloor = 1e-12;

/// MUSIC pseudo-spectrum P(g) = 1 / max(||E_n^H a(g)||^2, 1e-12) for each column of `steering`.
FieldMap music_map(const Eigen::MatrixXcd& noise, const Eigen::MatrixXcd& steering, std::size_t cols,
                   std::size_t rows);
FieldMap music_map(const CrossSpectralMatrix& csm, const SteeringGrid& grid, const ArrayGeometry& geometry,
                   double freq_hz, std::size_t n_sources = 1,
                   double speed_of_sound = kDefaultSpeedOfSound);

/// Delay-and-sum power a(g)^H R a(g).
FieldMap bartlett_map(const CrossSpectralMatrix& csm, const Eigen::MatrixXcd& steering, std::size_t cols,
                      std::size_t rows);
FieldMap bartlett_map(const CrossSpectralMatrix& csm, const SteeringGrid& grid, const ArrayGeometry& geometry,
                      double freq_hz, double speed_of_sound = kDefaultSpeedOfSound);

inline constexpr double kDefaultFullScaleDb = 94.0;

/// Power that maps to 0 dB so that a full-scale tone on every one of
/// `channels` microphones (dominant eigenvalue M * (sum(w)/2)^2) reads
/// `full_scale_db` where the pseudo-spectrum equals 1.
double full_scale_ref_power(std::size_t channels, std::size_t fft_size, Window window,
                            double full_scale_db = kDefaultFullScaleDb);

/// L(g) = 10 log10(dominant_eigenvalue * P(g) / ref_power). Levels are
/// clamped at -300 dB so digital silence stays finite.
FieldMap to_spl(const FieldMap& linear, double dominant_eigenvalue, double ref_power);

}  // namespace afv
