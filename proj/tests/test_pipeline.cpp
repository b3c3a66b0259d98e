#include <cmath>
#include <fstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "afv/pipeline.hpp"
#include "afv/simulate.hpp"
#include "test_support.hpp"

using namespace afv;
using nlohmann::json;

namespace {

MultichannelBuffer tone_scene(double seconds, double noise_dbfs = -60.0) {
  SceneSpec s;
  s.sources.push_back({Point3(0.3, -0.2, 1.5), ToneSignal{4000.0}, -40.0});
  s.noise_floor_dbfs = noise_dbfs;
  s.noise_seed = 11;
  s.duration_s = seconds;
  return synth_scene(s, default_uma16_geometry());
}

MultichannelBuffer silence_scene(double seconds) {
  SceneSpec s;
  s.noise_floor_dbfs = -80.0;
  s.noise_seed = 12;
  s.duration_s = seconds;
  return synth_scene(s, default_uma16_geometry());
}

std::string error_text(const auto& f) {
  try {
    f();
  } catch (const Error& e) {
    return std::string(to_string(e.kind())) + " " + e.what();
  }
  return "ok";
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("default configuration") {
  const PipelineConfig c;
  CHECK(c.fft_size == 1024);
  CHECK(c.window == Window::hann);
  CHECK(c.overlap == 0.5);
  CHECK(c.hop() == 512);
  CHECK(c.chunk_size == 2048);
  CHECK(c.median_window == 8);
  CHECK(c.bands == default_bands());
  CHECK(c.camera.width == 640);
  CHECK(c.camera.height == 360);
  CHECK(c.camera.diagonal_fov_deg == 72.0);
  CHECK(c.grid.cols == 64);
  CHECK(c.grid.rows == 36);
  CHECK_NOTHROW(c.validate());
  CHECK(c.load_array().size() == 16);
}

TEST_CASE("config JSON round trip and bundled file") {
  PipelineConfig c;
  c.alpha = 0.3;
  c.bands[2].floor_db = 21.5;
  c.stereo_channels = {1, 2};
  c.array_offset_m = Point3(0.0, 0.05, -0.01);
  PipelineConfig back;
  back.merge_json(c.to_json());
  CHECK(back == c);

  const PipelineConfig bundled = load_config_file(std::string(AFV_SOURCE_DIR) + "/data/pipeline.json");
  CHECK(bundled == PipelineConfig{});
}

TEST_CASE("config resolution order: defaults < file < flags") {
  const auto dir = test::scratch_dir("pipeline_config");
  std::ofstream(dir / "c.json") << R"({"alpha": 0.25, "median_window": 4, "camera": {"width": 320}})";
  PipelineConfig c = load_config_file((dir / "c.json").string());
  CHECK(c.alpha == 0.25);
  CHECK(c.median_window == 4);
  CHECK(c.camera.width == 320);
  CHECK(c.camera.height == 360);  // untouched keys keep defaults
  c.merge_json(json{{"alpha", 0.75}});  // flag layer
  CHECK(c.alpha == 0.75);
  CHECK(c.median_window == 4);
}

TEST_CASE("config errors") {
  const auto dir = test::scratch_dir("pipeline_config_errors");
  CHECK(error_text([&] { load_config_file((dir / "nope.json").string()); }).rfind("argument", 0) == 0);
  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK(error_text([&] { load_config_file((dir / "bad.json").string()); }).rfind("parse", 0) == 0);
  PipelineConfig c;
  CHECK(error_text([&] { c.merge_json(json{{"fft_sise", 512}}); }).find("$.fft_sise") != std::string::npos);
  CHECK(error_text([&] { c.merge_json(json{{"camera", {{"depth", 3}}}}); }).find("$.camera.depth") !=
        std::string::npos);
  CHECK(error_text([&] { c.merge_json(json{{"fft_size", "big"}}); }).rfind("schema", 0) == 0);
  PipelineConfig bad;
  bad.alpha = 1.5;
  CHECK(error_text([&] { bad.validate(); }).rfind("validation", 0) == 0);
  bad = PipelineConfig{};
  bad.chunk_size = 512;
  CHECK(error_text([&] { bad.validate(); }).rfind("validation", 0) == 0);
}

TEST_CASE("pipeline writes frames, manifest and stereo audio") {
  const auto dir = test::scratch_dir("pipeline_run");
  const MultichannelBuffer audio = tone_scene(0.5);
  PipelineOptions options;
  options.out_dir = dir;
  options.keep_fields = true;
  const PipelineResult r = run_pipeline(PipelineConfig{}, audio, nullptr, options);
  CHECK(r.frame_count == 10);  // floor(22050 / 2048)
  CHECK(r.manifest["frame_count"] == 10);
  CHECK(r.manifest["fps"].get<double>() == 44100.0 / 2048.0);
  CHECK(r.manifest["resolution"] == json::array({640, 360}));
  CHECK(r.manifest["frame_height"] == 720);
  CHECK(r.manifest["floors"] == json::array({18.0, 20.0, 23.0, 27.0}));
  CHECK(std::filesystem::exists(dir / "frames" / "frame_000009.png"));

  const RgbFrame last = read_png(dir / "frames" / "frame_000009.png");
  CHECK(frame_hash(last) == r.frame_hashes.back());
  // Top half is the untouched gray conventional frame.
  CHECK(last.crop_rows(0, 360) == RgbFrame(640, 360, 128));

  const MultichannelBuffer stereo = read_wav((dir / "stereo.wav").string());
  CHECK(stereo.channels() == 2);
  CHECK(stereo.frames() == audio.frames());
  for (std::size_t n = 0; n < audio.frames(); n += 97) {
    CHECK(std::abs(stereo.channel(0)[n] - audio.channel(0)[n]) <= 1.0 / 32768.0);
    CHECK(std::abs(stereo.channel(1)[n] - audio.channel(3)[n]) <= 1.0 / 32768.0);
  }

  // The field peaks at the source cell: (0.3, -0.2, 1.5) projects to cell (42, 11).
  REQUIRE(r.fields.size() == 10);
  const auto peak = test::brute_argmax(r.fields.back().values);
  CHECK(std::abs(int(peak % 64) - 42) <= 1);
  CHECK(std::abs(int(peak / 64) - 11) <= 1);
}

TEST_CASE("silence renders the uniform jet(0) blend") {
  const MultichannelBuffer audio = silence_scene(0.3);
  PipelineConfig config;
  config.stacked = false;
  PipelineOptions options;
  options.keep_fields = true;
  const PipelineResult r = run_pipeline(config, audio, nullptr, options);
  for (const auto& f : r.fields) CHECK(f.all_zero());
  RgbFrame expected(640, 360);
  for (int y = 0; y < 360; ++y)
    for (int x = 0; x < 640; ++x) expected.set(x, y, 64, 64, 128);
  for (auto h : r.frame_hashes) CHECK(h == frame_hash(expected));
}

TEST_CASE("overlay-only and png video source") {
  const auto dir = test::scratch_dir("pipeline_video");
  RgbFrame a(640, 360, 0);
  RgbFrame b(640, 360, 255);
  write_png(a, dir / "v0.png");
  write_png(b, dir / "v1.png");
  PngSequenceSource video(dir, 10.0, 640, 360);
  CHECK(video.size() == 2);
  CHECK(video.frame_at(0.05) == a);
  CHECK(video.frame_at(0.15) == b);
  CHECK(video.frame_at(99.0) == b);

  PipelineConfig config;
  config.stacked = true;
  const MultichannelBuffer audio = silence_scene(0.2);
  PipelineOptions options;
  options.out_dir = dir / "out";
  run_pipeline(config, audio, &video, options);
  const RgbFrame first = read_png(dir / "out" / "frames" / "frame_000000.png");
  CHECK(first.crop_rows(0, 360) == a);
  CHECK(int(first.at(5, 365, 2)) == 64);  // 0.5 * 0 + 0.5 * 127.5

  CHECK(error_text([&] { PngSequenceSource(dir / "missing", 10.0, 640, 360); }).rfind("I/O error", 0) == 0);
  PngSequenceSource wrong(dir, 10.0, 320, 180);
  CHECK(error_text([&] { wrong.frame_at(0.0); }).rfind("validation", 0) == 0);
}

TEST_CASE("bartlett oracle report") {
  const auto dir = test::scratch_dir("pipeline_oracle");
  PipelineOptions options;
  options.out_dir = dir;
  options.bartlett_oracle = true;
  const PipelineResult r = run_pipeline(PipelineConfig{}, tone_scene(0.3), nullptr, options);
  REQUIRE(r.oracle.size() == r.frame_count);
  const json& band = r.oracle.back()["bands"][1];
  CHECK(band["band_hz"] == 4000.0);
  CHECK(band["music_cell"] == json::array({42, 11}));
  CHECK(band["bartlett_cell"] == json::array({42, 11}));
  CHECK(band["within_one_cell"] == true);
  std::ifstream in(dir / "oracle.json");
  CHECK(json::parse(in) == r.oracle);

  CHECK(run_pipeline(PipelineConfig{}, tone_scene(0.1), nullptr, {}).oracle.is_null());
}

TEST_CASE("errors carry the stage label") {
  const MultichannelBuffer audio = tone_scene(0.1);
  PipelineConfig config;
  config.geometry_path = "/nonexistent/array.xml";
  CHECK(error_text([&] { run_pipeline(config, audio, nullptr, {}); }).find("geometry: ") != std::string::npos);

  const MultichannelBuffer stereo(2, 4096, 44100.0);
  CHECK(error_text([&] { run_pipeline(PipelineConfig{}, stereo, nullptr, {}); }).rfind("validation error input:", 0) == 0);

  config = PipelineConfig{};
  config.bands[0].center_hz = 30000.0;
  CHECK(error_text([&] { run_pipeline(config, audio, nullptr, {}); }).find("beamform: ") != std::string::npos);
}

TEST_CASE("parallel bands give identical frames and fields") {
  const MultichannelBuffer audio = tone_scene(0.3);
  PipelineConfig config;
  PipelineOptions serial;
  serial.keep_fields = true;
  PipelineOptions parallel = serial;
  parallel.parallel_bands = true;
  const PipelineResult a = run_pipeline(config, audio, nullptr, serial);
  const PipelineResult b = run_pipeline(config, audio, nullptr, parallel);
  CHECK(a.frame_hashes == b.frame_hashes);
  for (std::size_t i = 0; i < a.fields.size(); ++i) CHECK(a.fields[i].values == b.fields[i].values);
}

TEST_CASE("csm pooling and the bartlett oracle") {
  const MultichannelBuffer audio = tone_scene(0.3);
  PipelineConfig config;
  config.csm_chunks = 4;
  FieldAnalyzer analyzer(config, default_uma16_geometry(), 44100.0);
  analyzer.set_bartlett_oracle(true);
  const auto chunks = chunk_stream(audio, 2048);
  ChunkAnalysis last;
  for (const auto& c : chunks) last = analyzer.analyze(c);
  const BandAnalysis& band = last.bands[1];
  CHECK(band.bin == 93);
  CHECK(band.freq_hz == doctest::Approx(4005.17578125));
  REQUIRE(band.bartlett);
  CHECK(band.bartlett->argmax() == analyzer.grid().index(42, 11));
  CHECK(band.music.argmax() == analyzer.grid().index(42, 11));
  // Peak SPL of a -40 dBFS tone sits well above the 20 dB floor.
  const double peak = *std::max_element(band.spl.values.begin(), band.spl.values.end());
  CHECK(peak > 60.0);
}

TEST_CASE("bench determinism and timing accounting") {
  const MultichannelBuffer audio = tone_scene(0.25);
  const BenchReport report = run_bench(PipelineConfig{}, audio, 3);
  CHECK(report.repeats == 3);
  CHECK(report.deterministic);
  CHECK(report.reference_hashes.size() == 5);
  CHECK(report.serial.frames.size() == 15);
  CHECK(report.parallel.frames.size() == 15);
  for (const auto& f : report.serial.frames) {
    double per_band = 0.0;
    for (double t : f.music_per_band) {
      CHECK(t >= 0.0);
      per_band += t;
    }
    CHECK(std::abs(per_band - f.music_total) <= 0.05 * f.music_total);
    for (double t : {f.chunking, f.stft, f.csm, f.music_total, f.oracle, f.postprocess, f.render})
      CHECK(t >= 0.0);
    CHECK(f.total + 1e-9 >= f.stft + f.csm + f.music_total + f.postprocess + f.render);
  }
  const json j = report.to_json();
  CHECK(j["serial"]["music_per_band"].size() == 4);
  CHECK(j["deterministic"] == true);
  CHECK(report.table().find("deterministic: yes") != std::string::npos);
  CHECK(error_text([&] { run_bench(PipelineConfig{}, audio, 0); }).rfind("argument", 0) == 0);
}

}  // TEST_SUITE
