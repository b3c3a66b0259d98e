#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "afv/audio_io.hpp"
#include "afv/beamform.hpp"
#include "afv/config.hpp"
#include "afv/fieldpipe.hpp"
#include "afv/render.hpp"

namespace afv {

/// Wall-clock milliseconds spent in each stage for one frame.
struct FrameTiming {
  double chunking = 0.0;
  double stft = 0.0;
  double csm = 0.0;
  std::vector<double> music_per_band;
  double music_total = 0.0;
  double oracle = 0.0;
  double postprocess = 0.0;
  double render = 0.0;
  double total = 0.0;
};

struct StageTimings {
  std::vector<FrameTiming> frames;

  /// {"frames": n, "stages": {stage: {"mean_ms", "p95_ms"}}, "music_per_band": [...]}.
  nlohmann::json summary() const;
};

struct BandAnalysis {
  BandConfig band;
  std::size_t bin = 0;
  double freq_hz = 0.0;  // analyzed bin frequency
  double dominant_eigenvalue = 0.0;
  FieldMap music;  // linear pseudo-spectrum
  FieldMap spl;    // dB
  std::optional<FieldMap> bartlett;
};

struct ChunkAnalysis {
  std::size_t chunk_index = 0;
  std::vector<BandAnalysis> bands;
};

/// STFT -> CSM -> MUSIC -> SPL for every configured band of each chunk.
/// Keeps the last `csm_chunks` spectra for CSM pooling, so chunks must be
/// fed in stream order.
class FieldAnalyzer {
 public:
  FieldAnalyzer(const PipelineConfig& config, ArrayGeometry geometry, double sample_rate);

  /// `parallel` runs the bands on separate threads; results are identical to serial mode.
  ChunkAnalysis analyze(const AudioChunk& chunk, bool parallel = false, FrameTiming* timing = nullptr);

  void set_bartlett_oracle(bool enabled) { bartlett_ = enabled; }
  const SteeringGrid& grid() const noexcept { return grid_; }
  const ArrayGeometry& geometry() const noexcept { return geometry_; }
  double ref_power() const noexcept { return ref_power_; }

 private:
  struct Band {
    BandConfig config;
    std::size_t bin;
    double freq_hz;
    Eigen::MatrixXcd steering;
  };

  BandAnalysis analyze_band(const Band& band, double* music_ms) const;

  PipelineConfig config_;
  ArrayGeometry geometry_;
  SteeringGrid grid_;
  double sample_rate_;
  double ref_power_;
  bool bartlett_ = false;
  std::vector<Band> bands_;
  std::vector<SpectralSnapshots> history_;
};

/// Floors, clips, band average and temporal median. Stateful (median window).
class FieldPostprocessor {
 public:
  explicit FieldPostprocessor(const PipelineConfig& config);

  struct Output {
    std::vector<NormalizedField> band_fields;
    NormalizedField composite;
    NormalizedField filtered;  // after the temporal median
  };

  Output push(const ChunkAnalysis& analysis);

 private:
  std::vector<BandConfig> bands_;
  MedianWindow median_;
};

/// Supplies the conventional RGB frame shown at a given stream time.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual RgbFrame frame_at(double time_s) = 0;
};

/// Uniform mid-gray frames, used when no video is supplied.
class GrayFrameSource : public FrameSource {
 public:
  GrayFrameSource(int width, int height, std::uint8_t level = 128);
  RgbFrame frame_at(double time_s) override;

 private:
  RgbFrame frame_;
};

/// PNG sequence in a directory (sorted by file name) at a fixed frame rate.
class PngSequenceSource : public FrameSource {
 public:
  PngSequenceSource(const std::filesystem::path& dir, double fps, int width, int height);
  RgbFrame frame_at(double time_s) override;
  std::size_t size() const noexcept { return files_.size(); }

 private:
  std::vector<std::filesystem::path> files_;
  double fps_;
  int width_;
  int height_;
  std::size_t cached_index_ = SIZE_MAX;
  RgbFrame cached_;
};

/// Upsamples the field, overlays it on a grayscale copy of the conventional
/// frame, and stacks the pair when configured.
RgbFrame render_frame(const PipelineConfig& config, const NormalizedField& field, const RgbFrame& conventional);

/// Manifest metadata shared by all frame sequences of a run.
nlohmann::json sequence_metadata(const PipelineConfig& config, double sample_rate);

std::uint64_t frame_hash(const RgbFrame& frame);

struct PipelineOptions {
  std::filesystem::path out_dir;  // empty: render in memory only
  bool parallel_bands = false;
  bool bartlett_oracle = false;
  bool keep_fields = false;  // retain per-frame filtered fields in the result
};

struct PipelineResult {
  std::size_t frame_count = 0;
  nlohmann::json manifest;
  StageTimings timings;
  std::vector<std::uint64_t> frame_hashes;
  std::vector<NormalizedField> fields;
  nlohmann::json oracle;  // per-chunk MUSIC vs Bartlett argmax cells, when the oracle is on
};

/// Full chain: one rendered frame per full chunk. Errors are rethrown with the stage that raised them.
PipelineResult run_pipeline(const PipelineConfig& config, const MultichannelBuffer& audio, FrameSource* video,
                            const PipelineOptions& options);

struct BenchReport {
  std::size_t repeats = 0;
  StageTimings serial;
  StageTimings parallel;
  bool deterministic = true;  // identical frame hashes across every repeat and mode
  std::vector<std::uint64_t> reference_hashes;

  nlohmann::json to_json() const;
  std::string table() const;
};

BenchReport run_bench(const PipelineConfig& config, const MultichannelBuffer& audio, std::size_t repeats);

}  // namespace afv
