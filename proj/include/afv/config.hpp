#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "afv/fieldpipe.hpp"
#include "afv/geometry.hpp"
#include "afv/spectral.hpp"

namespace afv {

struct CameraConfig {
  int width = 640;
  int height = 360;
  double diagonal_fov_deg = 72.0;
  friend bool operator==(const CameraConfig&, const CameraConfig&) = default;
};

struct GridConfig {
  std::size_t cols = 64;
  std::size_t rows = 36;
  double distance_m = 1.5;
  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

/// Every tunable of the acoustic-field pipeline. Default-constructed values
/// are the reference parameters; resolution order is defaults < config file < flags.
struct PipelineConfig {
  std::string geometry_path;  // empty: bundled 4x4 UMA-16 lattice
  Point3 array_offset_m = Point3::Zero();
  CameraConfig camera;
  GridConfig grid;

  std::size_t chunk_size = 2048;
  std::size_t fft_size = 1024;
  double overlap = 0.5;
  Window window = Window::hann;
  std::size_t csm_chunks = 1;
  double loading_eps = kDefaultLoadingEps;

  std::vector<BandConfig> bands = default_bands();
  std::size_t n_sources = 1;
  double speed_of_sound = kDefaultSpeedOfSound;
  double spl_ref_db = 94.0;

  std::size_t median_window = 8;
  double alpha = 0.5;
  bool stacked = true;
  std::pair<std::size_t, std::size_t> stereo_channels{0, 3};

  std::size_t hop() const;
  CameraModel camera_model() const;
  SteeringGrid steering_grid() const;
  ArrayGeometry load_array() const;

  /// Throws validation error describing the first bad field.
  void validate() const;

  nlohmann::json to_json() const;
  /// Overrides only the keys present in `doc`; unknown keys are rejected.
  void merge_json(const nlohmann::json& doc);

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

PipelineConfig load_config_file(const std::string& path, PipelineConfig base = {});

}  // namespace afv
