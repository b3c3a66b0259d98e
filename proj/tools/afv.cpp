// afv: acoustic field video command-line tool.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "afv/audio_io.hpp"
#include "afv/config.hpp"
#include "afv/error.hpp"
#include "afv/pipeline.hpp"
#include "afv/simulate.hpp"
#include "afv/vlm_pack.hpp"

namespace {

using nlohmann::json;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw afv::Error(afv::ErrorKind::io, "cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw afv::Error(afv::ErrorKind::io, "cannot write " + path);
  out << text;
}

// Flags shared by every subcommand that runs the acoustic pipeline. Only
// flags given on the command line override the config file.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::string> geometry;
  std::optional<int> width, height;
  std::optional<double> fov;
  std::optional<std::size_t> grid_cols, grid_rows;
  std::optional<double> grid_distance;
  std::optional<std::size_t> chunk_size, fft_size, csm_chunks, n_sources, median_window;
  std::optional<double> overlap, spl_ref, alpha, speed_of_sound, loading_eps;
  std::optional<std::string> window;
  std::vector<double> bands, floors, clips;
  std::vector<std::size_t> stereo;
  bool stacked = false;
  bool overlay_only = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "pipeline JSON config file")->check(CLI::ExistingFile);
    app->add_option("--geometry", geometry, "array geometry XML (default: bundled 4x4 UMA-16 lattice)");
    app->add_option("--width", width, "camera width in pixels");
    app->add_option("--height", height, "camera height in pixels");
    app->add_option("--fov", fov, "camera diagonal field of view in degrees");
    app->add_option("--grid-cols", grid_cols, "steering grid columns");
    app->add_option("--grid-rows", grid_rows, "steering grid rows");
    app->add_option("--grid-distance", grid_distance, "steering plane distance in meters");
    app->add_option("--chunk-size", chunk_size, "frames per pipeline chunk");
    app->add_option("--fft-size", fft_size, "STFT length");
    app->add_option("--overlap", overlap, "STFT overlap fraction");
    app->add_option("--window", window, "STFT window (hann, rectangular)");
    app->add_option("--bands", bands, "band center frequencies in Hz")->delimiter(',');
    app->add_option("--floors", floors, "per-band noise floors in dB")->delimiter(',');
    app->add_option("--clips", clips, "per-band top dynamic range in dB")->delimiter(',');
    app->add_option("--csm-chunks", csm_chunks, "chunks pooled into each CSM");
    app->add_option("--loading-eps", loading_eps, "relative diagonal loading of the CSM");
    app->add_option("--n-sources", n_sources, "MUSIC signal subspace dimension");
    app->add_option("--spl-ref", spl_ref, "dB level assigned to a full-scale on-axis tone");
    app->add_option("--speed-of-sound", speed_of_sound, "m/s");
    app->add_option("--median-window", median_window, "temporal median length in frames");
    app->add_option("--alpha", alpha, "overlay blend alpha");
    app->add_option("--stereo-channels", stereo, "stereo pair channel indices L,R")->delimiter(',')->expected(2);
    auto* s = app->add_flag("--stacked", stacked, "emit conventional/acoustic-field stacked frames");
    app->add_flag("--overlay-only", overlay_only, "emit only the acoustic-field overlay")->excludes(s);
  }

  afv::PipelineConfig resolve() const {
    afv::PipelineConfig c;
    if (!config_path.empty()) c = afv::load_config_file(config_path, c);
    if (geometry) c.geometry_path = *geometry;
    if (width) c.camera.width = *width;
    if (height) c.camera.height = *height;
    if (fov) c.camera.diagonal_fov_deg = *fov;
    if (grid_cols) c.grid.cols = *grid_cols;
    if (grid_rows) c.grid.rows = *grid_rows;
    if (grid_distance) c.grid.distance_m = *grid_distance;
    if (chunk_size) c.chunk_size = *chunk_size;
    if (fft_size) c.fft_size = *fft_size;
    if (overlap) c.overlap = *overlap;
    if (window) c.window = afv::parse_window(*window);
    if (csm_chunks) c.csm_chunks = *csm_chunks;
    if (loading_eps) c.loading_eps = *loading_eps;
    if (n_sources) c.n_sources = *n_sources;
    if (spl_ref) c.spl_ref_db = *spl_ref;
    if (speed_of_sound) c.speed_of_sound = *speed_of_sound;
    if (median_window) c.median_window = *median_window;
    if (alpha) c.alpha = *alpha;
    if (stacked) c.stacked = true;
    if (overlay_only) c.stacked = false;
    if (!stereo.empty()) c.stereo_channels = {stereo.at(0), stereo.at(1)};

    if (!bands.empty()) {
      if (bands.size() != c.bands.size() && (floors.size() != bands.size() || clips.size() != bands.size())) {
        throw afv::Error(afv::ErrorKind::argument,
                         "changing the number of bands requires --floors and --clips of the same length");
      }
      c.bands.resize(bands.size());
      for (std::size_t i = 0; i < bands.size(); ++i) c.bands[i].center_hz = bands[i];
    }
    auto apply = [&](const std::vector<double>& values, double afv::BandConfig::*field, const char* flag) {
      if (values.empty()) return;
      if (values.size() != c.bands.size()) {
        throw afv::Error(afv::ErrorKind::argument, std::string(flag) + " needs one value per band");
      }
      for (std::size_t i = 0; i < values.size(); ++i) c.bands[i].*field = values[i];
    };
    apply(floors, &afv::BandConfig::floor_db, "--floors");
    apply(clips, &afv::BandConfig::clip_db, "--clips");
    c.validate();
    return c;
  }
};

json field_to_json(const afv::FieldMap& map) { return map.values; }

json analysis_to_json(const afv::ChunkAnalysis& a) {
  json bands = json::array();
  for (const auto& b : a.bands) {
    json entry{{"center_hz", b.band.center_hz},
               {"bin", b.bin},
               {"freq_hz", b.freq_hz},
               {"dominant_eigenvalue", b.dominant_eigenvalue},
               {"argmax", b.spl.argmax()},
               {"spl_db", field_to_json(b.spl)}};
    if (b.bartlett) {
      entry["bartlett"] = field_to_json(*b.bartlett);
      entry["bartlett_argmax"] = b.bartlett->argmax();
    }
    bands.push_back(std::move(entry));
  }
  return {{"chunk_index", a.chunk_index}, {"bands", bands}};
}

afv::ChunkAnalysis analysis_from_json(const json& frame, const afv::PipelineConfig& config) {
  afv::ChunkAnalysis a;
  a.chunk_index = frame.at("chunk_index").get<std::size_t>();
  const auto& bands = frame.at("bands");
  if (bands.size() != config.bands.size()) {
    throw afv::Error(afv::ErrorKind::schema, "maps file band count does not match the config");
  }
  for (std::size_t b = 0; b < bands.size(); ++b) {
    afv::BandAnalysis band;
    band.band = config.bands[b];
    band.spl.cols = config.grid.cols;
    band.spl.rows = config.grid.rows;
    band.spl.scale = afv::FieldScale::db;
    band.spl.values = bands[b].at("spl_db").get<std::vector<double>>();
    band.spl.chunk_index = a.chunk_index;
    if (band.spl.values.size() != config.grid.cols * config.grid.rows) {
      throw afv::Error(afv::ErrorKind::schema, "maps file grid does not match the config");
    }
    a.bands.push_back(std::move(band));
  }
  return a;
}

std::unique_ptr<afv::FrameSource> open_video(const std::string& dir, double fps, const afv::PipelineConfig& c) {
  if (dir.empty()) return nullptr;
  return std::make_unique<afv::PngSequenceSource>(dir, fps, c.camera.width, c.camera.height);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"afv: microphone-array audio to acoustic field video"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "synthesize array audio for a scene JSON");
  std::string scene_path, synth_out, truth_out, synth_format = "float32";
  ConfigFlags synth_flags;
  synth->add_option("--scene", scene_path, "scene JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "output WAV")->required();
  synth->add_option("--truth", truth_out, "ground-truth JSON output");
  synth->add_option("--format", synth_format, "pcm16, pcm24 or float32");
  synth_flags.attach(synth);

  // beamform
  auto* beamform = app.add_subcommand("beamform", "per-band SPL maps for every chunk");
  std::string bf_audio, bf_out, bf_oracle = "none";
  ConfigFlags bf_flags;
  beamform->add_option("--audio", bf_audio, "multichannel WAV")->required()->check(CLI::ExistingFile);
  beamform->add_option("--out", bf_out, "maps JSON output")->required();
  beamform->add_option("--oracle", bf_oracle, "also emit Bartlett maps")->check(CLI::IsMember({"none", "bartlett"}));
  bf_flags.attach(beamform);

  // render
  auto* render = app.add_subcommand("render", "post-process maps JSON and render the frame sequence");
  std::string rd_maps, rd_out, rd_video;
  double rd_video_fps = 30.0, rd_rate = 44100.0;
  ConfigFlags rd_flags;
  render->add_option("--maps", rd_maps, "maps JSON from `afv beamform`")->required()->check(CLI::ExistingFile);
  render->add_option("--out", rd_out, "output directory")->required();
  render->add_option("--video", rd_video, "directory of RGB PNG frames");
  render->add_option("--video-fps", rd_video_fps, "frame rate of --video");
  rd_flags.attach(render);

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "audio (+ optional video) to acoustic field video frames");
  std::string pl_audio, pl_out, pl_video, pl_oracle = "none";
  double pl_video_fps = 30.0;
  bool pl_parallel = false;
  ConfigFlags pl_flags;
  pipeline->add_option("--audio", pl_audio, "multichannel WAV")->required()->check(CLI::ExistingFile);
  pipeline->add_option("--out", pl_out, "output directory")->required();
  pipeline->add_option("--video", pl_video, "directory of RGB PNG frames");
  pipeline->add_option("--video-fps", pl_video_fps, "frame rate of --video");
  pipeline->add_option("--oracle", pl_oracle, "write a MUSIC/Bartlett argmax report to oracle.json")
      ->check(CLI::IsMember({"none", "bartlett"}));
  pipeline->add_flag("--parallel", pl_parallel, "compute bands on parallel threads");
  pl_flags.attach(pipeline);

  // pack
  auto* pack = app.add_subcommand("pack", "build a VLM request manifest");
  std::string pk_mode = "conventional_plus_af", pk_question, pk_frames, pk_audio, pk_out;
  pack->add_option("--mode", pk_mode, "conventional, conventional_plus_af or live");
  pack->add_option("--question", pk_question, "question text");
  pack->add_option("--frames", pk_frames, "frame manifest.json")->required();
  pack->add_option("--audio", pk_audio, "stereo WAV")->required();
  pack->add_option("--out", pk_out, "request JSON output")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "per-stage timings, serial and parallel");
  std::string bn_audio, bn_json;
  std::size_t bn_repeats = 3;
  double bn_seconds = 1.0;
  ConfigFlags bn_flags;
  bench->add_option("--audio", bn_audio, "multichannel WAV (default: synthetic single-tone scene)")
      ->check(CLI::ExistingFile);
  bench->add_option("--seconds", bn_seconds, "length of the synthetic input");
  bench->add_option("--repeats", bn_repeats, "runs per mode");
  bench->add_option("--json", bn_json, "write the report as JSON");
  bn_flags.attach(bench);

  // config
  auto* config = app.add_subcommand("config", "print the effective pipeline config");
  ConfigFlags cf_flags;
  cf_flags.attach(config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      const afv::PipelineConfig c = synth_flags.resolve();
      const afv::SceneSpec scene = afv::scene_from_json(read_text(scene_path));
      const afv::MultichannelBuffer audio = afv::synth_scene(scene, c.load_array(), c.speed_of_sound);
      afv::write_wav(audio, synth_out, afv::parse_sample_format(synth_format));
      if (!truth_out.empty()) {
        const afv::SteeringGrid grid = c.steering_grid();
        write_text(truth_out, afv::truth_json(scene, c.camera_model(), &grid).dump(2) + "\n");
      }
      std::cout << "wrote " << audio.channels() << " channels x " << audio.frames() << " frames to " << synth_out
                << '\n';
    } else if (*beamform) {
      const afv::PipelineConfig c = bf_flags.resolve();
      const afv::MultichannelBuffer audio = afv::read_wav(bf_audio);
      afv::FieldAnalyzer analyzer(c, c.load_array(), audio.sample_rate());
      analyzer.set_bartlett_oracle(bf_oracle == "bartlett");
      json frames = json::array();
      for (const auto& chunk : afv::chunk_stream(audio, c.chunk_size)) {
        frames.push_back(analysis_to_json(analyzer.analyze(chunk)));
      }
      json doc{{"schema", 1},
               {"sample_rate", audio.sample_rate()},
               {"config", c.to_json()},
               {"grid", {{"cols", c.grid.cols}, {"rows", c.grid.rows}}},
               {"frames", frames}};
      write_text(bf_out, doc.dump() + "\n");
      std::cout << "wrote " << frames.size() << " frames of band maps to " << bf_out << '\n';
    } else if (*render) {
      const afv::PipelineConfig c = rd_flags.resolve();
      json doc;
      try {
        doc = json::parse(read_text(rd_maps));
      } catch (const json::parse_error& e) {
        throw afv::Error(afv::ErrorKind::parse, std::string("maps file: ") + e.what());
      }
      rd_rate = doc.value("sample_rate", rd_rate);
      auto video = open_video(rd_video, rd_video_fps, c);
      afv::GrayFrameSource gray(c.camera.width, c.camera.height);
      afv::FrameSource& source = video ? *video : static_cast<afv::FrameSource&>(gray);
      afv::FieldPostprocessor post(c);
      afv::FrameSequenceWriter writer(std::filesystem::path(rd_out) / "frames", afv::sequence_metadata(c, rd_rate));
      for (const auto& frame : doc.at("frames")) {
        const afv::ChunkAnalysis a = analysis_from_json(frame, c);
        const auto fields = post.push(a);
        writer.write(afv::render_frame(c, fields.filtered, source.frame_at(double(a.chunk_index * c.chunk_size) / rd_rate)));
      }
      writer.finish();
      std::cout << "rendered " << writer.count() << " frames to " << rd_out << '\n';
    } else if (*pipeline) {
      const afv::PipelineConfig c = pl_flags.resolve();
      const afv::MultichannelBuffer audio = afv::read_wav(pl_audio);
      auto video = open_video(pl_video, pl_video_fps, c);
      afv::PipelineOptions options;
      options.out_dir = pl_out;
      options.parallel_bands = pl_parallel;
      options.bartlett_oracle = pl_oracle == "bartlett";
      const afv::PipelineResult result = afv::run_pipeline(c, audio, video.get(), options);
      write_text((std::filesystem::path(pl_out) / "timings.json").string(), result.timings.summary().dump(2) + "\n");
      std::cout << "rendered " << result.frame_count << " frames at " << result.manifest["fps"].get<double>()
                << " fps to " << pl_out << '\n';
    } else if (*pack) {
      const afv::PromptMode mode = afv::parse_prompt_mode(pk_mode);
      const afv::RequestManifest request = afv::package_request(mode, {pk_frames, pk_audio}, pk_question);
      write_text(pk_out, request.to_json() + "\n");
      std::cout << "wrote request manifest " << pk_out << '\n';
    } else if (*bench) {
      const afv::PipelineConfig c = bn_flags.resolve();
      afv::MultichannelBuffer audio;
      if (!bn_audio.empty()) {
        audio = afv::read_wav(bn_audio);
      } else {
        afv::SceneSpec scene;
        scene.duration_s = bn_seconds;
        scene.noise_floor_dbfs = -60.0;
        scene.noise_seed = 1;
        scene.sources.push_back({afv::Point3(0.3, -0.1, c.grid.distance_m), afv::ToneSignal{4000.0}, -40.0});
        audio = afv::synth_scene(scene, c.load_array(), c.speed_of_sound);
      }
      const afv::BenchReport report = afv::run_bench(c, audio, bn_repeats);
      std::cout << report.table();
      if (!bn_json.empty()) write_text(bn_json, report.to_json().dump(2) + "\n");
    } else if (*config) {
      std::cout << cf_flags.resolve().to_json().dump(2) << '\n';
    }
  } catch (const afv::Error& e) {
    std::cerr << "afv: " << afv::to_string(e.kind()) << ": " << e.what() << '\n';
    return afv::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "afv: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
