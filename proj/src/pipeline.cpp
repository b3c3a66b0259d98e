#include "afv/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "afv/error.hpp"

namespace afv {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename F>
auto in_stage(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(stage) + ": " + e.what());
  }
}

json stage_stats(std::vector<double> values) {
  if (values.empty()) return {{"mean_ms", 0.0}, {"p95_ms", 0.0}};
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
  std::sort(values.begin(), values.end());
  const auto rank = std::size_t(std::ceil(0.95 * double(values.size())));
  return {{"mean_ms", mean}, {"p95_ms", values[std::max<std::size_t>(rank, 1) - 1]}};
}

}  // namespace

json StageTimings::summary() const {
  auto collect = [&](auto member) {
    std::vector<double> v;
    for (const auto& f : frames) v.push_back(f.*member);
    return v;
  };
  json stages{{"chunking", stage_stats(collect(&FrameTiming::chunking))},
              {"stft", stage_stats(collect(&FrameTiming::stft))},
              {"csm", stage_stats(collect(&FrameTiming::csm))},
              {"music_total", stage_stats(collect(&FrameTiming::music_total))},
              {"oracle", stage_stats(collect(&FrameTiming::oracle))},
              {"postprocess", stage_stats(collect(&FrameTiming::postprocess))},
              {"render", stage_stats(collect(&FrameTiming::render))},
              {"total", stage_stats(collect(&FrameTiming::total))}};
  json per_band = json::array();
  const std::size_t bands = frames.empty() ? 0 : frames.front().music_per_band.size();
  for (std::size_t b = 0; b < bands; ++b) {
    std::vector<double> v;
    for (const auto& f : frames) v.push_back(f.music_per_band.at(b));
    per_band.push_back(stage_stats(std::move(v)));
  }
  return {{"frames", frames.size()}, {"stages", stages}, {"music_per_band", per_band}};
}

FieldAnalyzer::FieldAnalyzer(const PipelineConfig& config, ArrayGeometry geometry, double sample_rate)
    : config_(config),
      geometry_(std::move(geometry)),
      grid_(config.steering_grid()),
      sample_rate_(sample_rate),
      ref_power_(full_scale_ref_power(geometry_.size(), config.fft_size, config.window, config.spl_ref_db)) {
  config_.validate();
  if (config_.n_sources >= geometry_.size()) {
    throw Error(ErrorKind::validation, "config: n_sources must be below the microphone count (" +
                                           std::to_string(geometry_.size()) + ")");
  }
  for (const auto& band : config_.bands) {
    const std::size_t bin = band_bin(band.center_hz, sample_rate, config_.fft_size);
    const double freq = double(bin) * sample_rate / double(config_.fft_size);
    bands_.push_back({band, bin, freq, steering_matrix(grid_, geometry_, freq, config_.speed_of_sound)});
  }
}

BandAnalysis FieldAnalyzer::analyze_band(const Band& band, double* music_ms) const {
  const CrossSpectralMatrix csm = estimate_csm(history_, band.bin, config_.loading_eps);
  const auto start = Clock::now();
  const SubspaceSplit split = split_subspaces(csm, config_.n_sources);
  BandAnalysis out;
  out.band = band.config;
  out.bin = band.bin;
  out.freq_hz = band.freq_hz;
  out.dominant_eigenvalue = split.largest_eigenvalue();
  out.music = music_map(split.noise, band.steering, grid_.cols(), grid_.rows());
  out.music.band_hz = band.config.center_hz;
  out.spl = to_spl(out.music, out.dominant_eigenvalue, ref_power_);
  if (music_ms) *music_ms = ms_since(start);
  return out;
}

ChunkAnalysis FieldAnalyzer::analyze(const AudioChunk& chunk, bool parallel, FrameTiming* timing) {
  if (chunk.channels() != geometry_.size()) {
    throw Error(ErrorKind::validation, "audio has " + std::to_string(chunk.channels()) +
                                           " channels but the array geometry has " +
                                           std::to_string(geometry_.size()) + " microphones");
  }
  FrameTiming local;
  FrameTiming& t = timing ? *timing : local;
  t.music_per_band.assign(bands_.size(), 0.0);

  auto start = Clock::now();
  SpectralSnapshots snaps =
      in_stage("stft", [&] { return stft_snapshots(chunk, config_.fft_size, config_.hop(), config_.window); });
  if (history_.size() == config_.csm_chunks) history_.erase(history_.begin());
  history_.push_back(std::move(snaps));
  t.stft = ms_since(start);

  ChunkAnalysis result;
  result.chunk_index = chunk.index();
  result.bands.resize(bands_.size());

  if (!parallel) {
    // Serial mode keeps CSM estimation and the MUSIC scans in separate timed stages.
    start = Clock::now();
    std::vector<CrossSpectralMatrix> csms;
    in_stage("csm", [&] {
      for (const auto& band : bands_) csms.push_back(estimate_csm(history_, band.bin, config_.loading_eps));
    });
    t.csm = ms_since(start);

    const auto music_start = Clock::now();
    in_stage("music", [&] {
      for (std::size_t b = 0; b < bands_.size(); ++b) {
        const auto band_start = Clock::now();
        const SubspaceSplit split = split_subspaces(csms[b], config_.n_sources);
        BandAnalysis& out = result.bands[b];
        out.band = bands_[b].config;
        out.bin = bands_[b].bin;
        out.freq_hz = bands_[b].freq_hz;
        out.dominant_eigenvalue = split.largest_eigenvalue();
        out.music = music_map(split.noise, bands_[b].steering, grid_.cols(), grid_.rows());
        out.music.band_hz = bands_[b].config.center_hz;
        out.spl = to_spl(out.music, out.dominant_eigenvalue, ref_power_);
        t.music_per_band[b] = ms_since(band_start);
      }
    });
    t.music_total = ms_since(music_start);

    if (bartlett_) {
      start = Clock::now();
      for (std::size_t b = 0; b < bands_.size(); ++b) {
        result.bands[b].bartlett = bartlett_map(csms[b], bands_[b].steering, grid_.cols(), grid_.rows());
      }
      t.oracle = ms_since(start);
    }
  } else {
    // Each band owns its output slot; CSM time is folded into music_total here.
    const auto music_start = Clock::now();
    std::vector<std::exception_ptr> errors(bands_.size());
    std::vector<std::thread> workers;
    for (std::size_t b = 0; b < bands_.size(); ++b) {
      workers.emplace_back([&, b] {
        try {
          result.bands[b] = analyze_band(bands_[b], &t.music_per_band[b]);
        } catch (...) {
          errors[b] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
      if (e) in_stage("music", [&] { std::rethrow_exception(e); });
    }
    t.music_total = ms_since(music_start);

    if (bartlett_) {
      start = Clock::now();
      for (std::size_t b = 0; b < bands_.size(); ++b) {
        const CrossSpectralMatrix csm = estimate_csm(history_, bands_[b].bin, config_.loading_eps);
        result.bands[b].bartlett = bartlett_map(csm, bands_[b].steering, grid_.cols(), grid_.rows());
      }
      t.oracle = ms_since(start);
    }
  }
  for (auto& b : result.bands) {
    b.music.chunk_index = b.spl.chunk_index = chunk.index();
    if (b.bartlett) {
      b.bartlett->chunk_index = chunk.index();
      b.bartlett->band_hz = b.band.center_hz;
    }
  }
  return result;
}

FieldPostprocessor::FieldPostprocessor(const PipelineConfig& config)
    : bands_(config.bands), median_(config.median_window) {}

FieldPostprocessor::Output FieldPostprocessor::push(const ChunkAnalysis& analysis) {
  if (analysis.bands.size() != bands_.size()) throw Error(ErrorKind::argument, "band count mismatch");
  Output out;
  for (std::size_t b = 0; b < bands_.size(); ++b) {
    const FieldMap floored = floor_subtract(analysis.bands[b].spl, bands_[b].floor_db);
    out.band_fields.push_back(clip_top(floored, bands_[b].clip_db));
    out.band_fields.back().frame_index = analysis.chunk_index;
  }
  out.composite = composite(out.band_fields);
  out.composite.frame_index = analysis.chunk_index;
  out.filtered = median_.push(out.composite);
  return out;
}

GrayFrameSource::GrayFrameSource(int width, int height, std::uint8_t level) : frame_(width, height, level) {}

RgbFrame GrayFrameSource::frame_at(double) { return frame_; }

PngSequenceSource::PngSequenceSource(const std::filesystem::path& dir, double fps, int width, int height)
    : fps_(fps), width_(width), height_(height) {
  if (!(fps > 0.0)) throw Error(ErrorKind::argument, "video frame rate must be positive");
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::io, "video directory not found: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files_.push_back(entry.path());
  }
  std::sort(files_.begin(), files_.end());
  if (files_.empty()) throw Error(ErrorKind::io, "no PNG frames in " + dir.string());
}

RgbFrame PngSequenceSource::frame_at(double time_s) {
  const auto index = std::min(files_.size() - 1, std::size_t(std::max(0.0, std::floor(time_s * fps_))));
  if (index != cached_index_) {
    RgbFrame frame = read_png(files_[index]);
    if (frame.width() != width_ || frame.height() != height_) {
      throw Error(ErrorKind::validation, files_[index].string() + " is " + std::to_string(frame.width()) + "x" +
                                             std::to_string(frame.height()) + ", expected " + std::to_string(width_) +
                                             "x" + std::to_string(height_));
    }
    cached_ = std::move(frame);
    cached_index_ = index;
  }
  return cached_;
}

RgbFrame render_frame(const PipelineConfig& config, const NormalizedField& field, const RgbFrame& conventional) {
  if (conventional.width() != config.camera.width || conventional.height() != config.camera.height) {
    throw Error(ErrorKind::argument, "conventional frame does not match the camera resolution");
  }
  const ScalarImage image = upsample(field, config.camera.width, config.camera.height);
  RgbFrame af = overlay(grayscale(conventional), image, config.alpha);
  return config.stacked ? stack_pair(conventional, af) : af;
}

json sequence_metadata(const PipelineConfig& config, double sample_rate) {
  json centers = json::array(), floors = json::array(), clips = json::array();
  for (const auto& b : config.bands) {
    centers.push_back(b.center_hz);
    floors.push_back(b.floor_db);
    clips.push_back(b.clip_db);
  }
  return {{"fps", sample_rate / double(config.chunk_size)},
          {"fps_num", sample_rate},
          {"fps_den", config.chunk_size},
          {"resolution", {config.camera.width, config.camera.height}},
          {"stacked", config.stacked},
          {"bands", centers},
          {"floors", floors},
          {"clips", clips},
          {"grid", {{"cols", config.grid.cols}, {"rows", config.grid.rows}, {"distance_m", config.grid.distance_m}}},
          {"alpha", config.alpha},
          {"median_window", config.median_window}};
}

std::uint64_t frame_hash(const RgbFrame& frame) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  auto mix = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 1099511628211ull;
  };
  for (int shift = 0; shift < 32; shift += 8) {
    mix(std::uint8_t(unsigned(frame.width()) >> shift));
    mix(std::uint8_t(unsigned(frame.height()) >> shift));
  }
  for (std::uint8_t byte : frame.data()) mix(byte);
  return h;
}

namespace {

json oracle_record(const ChunkAnalysis& analysis, std::size_t cols) {
  json bands = json::array();
  for (const auto& b : analysis.bands) {
    const std::size_t m = b.music.argmax();
    const std::size_t o = b.bartlett->argmax();
    const auto dc = std::abs(double(m % cols) - double(o % cols));
    const auto dr = std::abs(double(m / cols) - double(o / cols));
    bands.push_back({{"band_hz", b.band.center_hz},
                     {"music_cell", {m % cols, m / cols}},
                     {"bartlett_cell", {o % cols, o / cols}},
                     {"within_one_cell", dc <= 1.0 && dr <= 1.0}});
  }
  return {{"chunk", analysis.chunk_index}, {"bands", bands}};
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, const MultichannelBuffer& audio, FrameSource* video,
                            const PipelineOptions& options) {
  in_stage("config", [&] { config.validate(); });
  ArrayGeometry geometry = in_stage("geometry", [&] { return config.load_array(); });
  if (audio.channels() != geometry.size()) {
    throw Error(ErrorKind::validation, "input: audio has " + std::to_string(audio.channels()) +
                                           " channels but the array geometry has " +
                                           std::to_string(geometry.size()) + " microphones");
  }
  FieldAnalyzer analyzer = in_stage("beamform", [&] { return FieldAnalyzer(config, geometry, audio.sample_rate()); });
  analyzer.set_bartlett_oracle(options.bartlett_oracle);
  FieldPostprocessor post(config);
  GrayFrameSource gray(config.camera.width, config.camera.height);
  FrameSource& source = video ? *video : gray;

  std::optional<FrameSequenceWriter> writer;
  if (!options.out_dir.empty()) {
    in_stage("output", [&] {
      writer.emplace(options.out_dir / "frames", sequence_metadata(config, audio.sample_rate()));
      const auto [left, right] = config.stereo_channels;
      write_wav(extract_stereo(audio, left, right), (options.out_dir / "stereo.wav").string(), SampleFormat::pcm16);
    });
  }

  PipelineResult result;
  auto start = Clock::now();
  const std::vector<AudioChunk> chunks = chunk_stream(audio, config.chunk_size);
  const double chunking_ms = ms_since(start) / double(std::max<std::size_t>(chunks.size(), 1));

  for (const auto& chunk : chunks) {
    const auto frame_start = Clock::now();
    FrameTiming timing;
    timing.chunking = chunking_ms;
    const ChunkAnalysis analysis = analyzer.analyze(chunk, options.parallel_bands, &timing);

    start = Clock::now();
    const FieldPostprocessor::Output fields = in_stage("postprocess", [&] { return post.push(analysis); });
    timing.postprocess = ms_since(start);

    start = Clock::now();
    const RgbFrame frame = in_stage("render", [&] {
      return render_frame(config, fields.filtered, source.frame_at(double(chunk.offset()) / audio.sample_rate()));
    });
    timing.render = ms_since(start);
    timing.total = ms_since(frame_start);

    if (writer) in_stage("output", [&] { writer->write(frame); });
    result.frame_hashes.push_back(frame_hash(frame));
    if (options.keep_fields) result.fields.push_back(fields.filtered);
    if (options.bartlett_oracle) result.oracle.push_back(oracle_record(analysis, config.grid.cols));
    result.timings.frames.push_back(std::move(timing));
  }
  result.frame_count = chunks.size();
  if (options.bartlett_oracle && !options.out_dir.empty()) {
    in_stage("output", [&] {
      const auto path = options.out_dir / "oracle.json";
      std::ofstream out(path, std::ios::trunc);
      if (!out || !(out << result.oracle.dump(2) << '\n')) throw Error(ErrorKind::io, "cannot write " + path.string());
    });
  }
  if (writer) {
    result.manifest = in_stage("output", [&] { return writer->finish(); });
  } else {
    result.manifest = sequence_metadata(config, audio.sample_rate());
    result.manifest["frame_count"] = result.frame_count;
  }
  return result;
}

json BenchReport::to_json() const {
  return {{"repeats", repeats},
          {"deterministic", deterministic},
          {"frames_per_run", reference_hashes.size()},
          {"serial", serial.summary()},
          {"parallel", parallel.summary()}};
}

std::string BenchReport::table() const {
  std::ostringstream out;
  char line[160];
  const json s = serial.summary()["stages"];
  const json p = parallel.summary()["stages"];
  std::snprintf(line, sizeof(line), "%-14s %12s %12s %12s %12s\n", "stage", "serial mean", "serial p95",
                "par. mean", "par. p95");
  out << line;
  for (const char* stage : {"chunking", "stft", "csm", "music_total", "oracle", "postprocess", "render", "total"}) {
    std::snprintf(line, sizeof(line), "%-14s %12.3f %12.3f %12.3f %12.3f\n", stage,
                  s[stage]["mean_ms"].get<double>(), s[stage]["p95_ms"].get<double>(),
                  p[stage]["mean_ms"].get<double>(), p[stage]["p95_ms"].get<double>());
    out << line;
  }
  const json bands = serial.summary()["music_per_band"];
  for (std::size_t b = 0; b < bands.size(); ++b) {
    std::snprintf(line, sizeof(line), "music[%zu]       %12.3f %12.3f\n", b, bands[b]["mean_ms"].get<double>(),
                  bands[b]["p95_ms"].get<double>());
    out << line;
  }
  out << "frames per run: " << reference_hashes.size() << ", repeats: " << repeats
      << ", deterministic: " << (deterministic ? "yes" : "NO") << '\n';
  return out.str();
}

BenchReport run_bench(const PipelineConfig& config, const MultichannelBuffer& audio, std::size_t repeats) {
  if (repeats == 0) throw Error(ErrorKind::argument, "bench needs at least one repeat");
  BenchReport report;
  report.repeats = repeats;
  for (bool parallel : {false, true}) {
    for (std::size_t r = 0; r < repeats; ++r) {
      PipelineOptions options;
      options.parallel_bands = parallel;
      PipelineResult run = run_pipeline(config, audio, nullptr, options);
      if (report.reference_hashes.empty() && !parallel && r == 0) {
        report.reference_hashes = run.frame_hashes;
      } else if (run.frame_hashes != report.reference_hashes) {
        report.deterministic = false;
      }
      auto& sink = parallel ? report.parallel.frames : report.serial.frames;
      sink.insert(sink.end(), run.timings.frames.begin(), run.timings.frames.end());
    }
  }
  return report;
}

}  // namespace afv
