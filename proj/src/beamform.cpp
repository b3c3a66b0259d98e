#include "afv/beamform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "afv/error.hpp"

namespace afv {

std::size_t FieldMap::argmax() const {
  if (values.empty()) throw Error(ErrorKind::argument, "argmax of an empty field");
  return std::size_t(std::max_element(values.begin(), values.end()) - values.begin());
}

Eigen::VectorXcd steering_vector(const Point3& point, const ArrayGeometry& geometry, double freq_hz,
                                 double speed_of_sound) {
  const auto M = Eigen::Index(geometry.size());
  const double norm = 1.0 / std::sqrt(double(M));
  const double k = 2.0 * std::numbers::pi * freq_hz / speed_of_sound;
  const double r0 = point.norm();
  Eigen::VectorXcd a(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    const double rm = (point - geometry[std::size_t(m)]).norm();
    a[m] = std::polar(norm, -k * (rm - r0));
  }
  return a;
}

Eigen::MatrixXcd steering_matrix(const SteeringGrid& grid, const ArrayGeometry& geometry, double freq_hz,
                                 double speed_of_sound) {
  Eigen::MatrixXcd A(Eigen::Index(geometry.size()), Eigen::Index(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    A.col(Eigen::Index(i)) = steering_vector(grid.points()[i], geometry, freq_hz, speed_of_sound);
  }
  return A;
}

SubspaceSplit split_subspaces(const CrossSpectralMatrix& csm, std::size_t n_sources) {
  const std::size_t M = csm.channels();
  if (n_sources < 1 || n_sources >= M) {
    throw Error(ErrorKind::argument, "source count must lie in [1, " + std::to_string(M - 1) + "], got " +
                                         std::to_string(n_sources));
  }
  if (!csm.matrix.allFinite()) throw Error(ErrorKind::numeric, "cross-spectral matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(csm.matrix);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::numeric, "Hermitian eigendecomposition did not converge");
  }
  const auto noise_dim = Eigen::Index(M - n_sources);
  return {solver.eigenvectors().leftCols(noise_dim), solver.eigenvalues()};
}

Eigen::MatrixXcd noise_subspace(const CrossSpectralMatrix& csm, std::size_t n_sources) {
  return split_subspaces(csm, n_sources).noise;
}

FieldMap music_map(const Eigen::MatrixXcd& noise, const Eigen::MatrixXcd& steering, std::size_t cols,
                   std::size_t rows) {
  if (std::size_t(steering.cols()) != cols * rows || steering.rows() != noise.rows()) {
    throw Error(ErrorKind::argument, "steering matrix does not match grid or subspace");
  }
  const Eigen::MatrixXcd projected = noise.adjoint() * steering;
  FieldMap map{cols, rows, std::vector<double>(cols * rows), FieldScale::linear};
  for (Eigen::Index i = 0; i < steering.cols(); ++i) {
    const double denom = projected.col(i).squaredNorm();
    map.values[std::size_t(i)] = 1.0 / std::max(denom, kMusicDenominatorFloor);
  }
  return map;
}

FieldMap music_map(const CrossSpectralMatrix& csm, const SteeringGrid& grid, const ArrayGeometry& geometry,
                   double freq_hz, std::size_t n_sources, double speed_of_sound) {
  const SubspaceSplit split = split_subspaces(csm, n_sources);
  FieldMap map = music_map(split.noise, steering_matrix(grid, geometry, freq_hz, speed_of_sound), grid.cols(),
                           grid.rows());
  map.band_hz = freq_hz;
  return map;
}

FieldMap bartlett_map(const CrossSpectralMatrix& csm, const Eigen::MatrixXcd& steering, std::size_t cols,
                      std::size_t rows) {
  if (std::size_t(steering.cols()) != cols * rows || steering.rows() != csm.matrix.rows()) {
    throw Error(ErrorKind::argument, "steering matrix does not match grid or CSM");
  }
  const Eigen::MatrixXcd RA = csm.matrix * steering;
  FieldMap map{cols, rows, std::vector<double>(cols * rows), FieldScale::linear};
  for (Eigen::Index i = 0; i < steering.cols(); ++i) {
    const double power = steering.col(i).dot(RA.col(i)).real();  // dot() conjugates the left operand
    map.values[std::size_t(i)] = std::max(power, 0.0);
  }
  return map;
}

FieldMap bartlett_map(const CrossSpectralMatrix& csm, const SteeringGrid& grid, const ArrayGeometry& geometry,
                      double freq_hz, double speed_of_sound) {
  FieldMap map = bartlett_map(csm, steering_matrix(grid, geometry, freq_hz, speed_of_sound), grid.cols(),
                              grid.rows());
  map.band_hz = freq_hz;
  return map;
}

double full_scale_ref_power(std::size_t channels, std::size_t fft_size, Window window, double full_scale_db) {
  const std::vector<double> w = make_window(window, fft_size);
  const double coherent_gain = std::accumulate(w.begin(), w.end(), 0.0) / 2.0;
  return double(channels) * coherent_gain * coherent_gain * std::pow(10.0, -full_scale_db / 10.0);
}

FieldMap to_spl(const FieldMap& linear, double dominant_eigenvalue, double ref_power) {
  if (!(ref_power > 0.0)) throw Error(ErrorKind::argument, "SPL reference power must be positive");
  FieldMap out = linear;
  out.scale = FieldScale::db;
  const double gain = std::max(dominant_eigenvalue, 0.0) / ref_power;
  for (double& v : out.values) v = 10.0 * std::log10(std::max(gain * v, 1e-30));
  return out;
}

}  // namespace afv
