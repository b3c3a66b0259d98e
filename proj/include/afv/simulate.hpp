#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "afv/audio_io.hpp"
#include "afv/geometry.hpp"

namespace afv {

struct ToneSignal {
  double freq_hz = 0.0;
  friend bool operator==(const ToneSignal&, const ToneSignal&) = default;
};

/// White noise restricted to [lo_hz, hi_hz] by spectral masking.
struct BandNoiseSignal {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
  std::uint64_t seed = 0;
  friend bool operator==(const BandNoiseSignal&, const BandNoiseSignal&) = default;
};

using SourceSignal = std::variant<ToneSignal, BandNoiseSignal>;

/// Point source in camera coordinates. `level_dbfs` is the RMS level at 1 m
/// relative to a full-scale sine (a tone at 0 dBFS has amplitude 1).
struct SourceSpec {
  Point3 position = Point3(0.0, 0.0, 1.0);
  SourceSignal signal = ToneSignal{1000.0};
  double level_dbfs = -20.0;

  friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

struct SceneSpec {
  std::vector<SourceSpec> sources;
  /// Independent white sensor noise per channel, same level convention as
  /// sources; nullopt for a noiseless scene.
  std::optional<double> noise_floor_dbfs;
  std::uint64_t noise_seed = 0;
  double duration_s = 1.0;
  double sample_rate = 44100.0;

  /// Throws validation error naming the offending field.
  void validate() const;
  std::size_t frames() const;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

/// Free-field mix x_m(t) = sum_src s(t - r/c) / r + n_m(t). Tones are
/// delayed in closed form; band noise is periodic over the scene and delayed
/// by an exact FFT phase shift. Throws scene error naming the source that
/// dominates an output sample above full scale.
MultichannelBuffer synth_scene(const SceneSpec& scene, const ArrayGeometry& geometry,
                               double speed_of_sound = kDefaultSpeedOfSound);

struct TruthPixel {
  Pixel pixel;
  bool in_view = false;
};

TruthPixel ground_truth_pixel(const SourceSpec& source, const CameraModel& camera);

/// Versioned scene JSON ("schema": 1). Unknown fields are rejected; errors
/// carry a JSON path such as $.sources[0].signal.freq_hz.
SceneSpec scene_from_json(std::string_view text);
std::string scene_to_json(const SceneSpec& scene);

/// Ground-truth record for every source: position, pixel, grid cell.
nlohmann::json truth_json(const SceneSpec& scene, const CameraModel& camera, const SteeringGrid* grid = nullptr);

}  // namespace afv
