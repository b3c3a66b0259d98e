#include "afv/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "afv/error.hpp"

namespace afv {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw Error(ErrorKind::schema, path + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw Error(ErrorKind::schema, path + "." + key + ": unknown config key");
  }
}

template <typename T>
void read(const json& obj, const std::string& path, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_same_v<T, std::size_t>) {
      if (!it->is_number_unsigned()) throw Error(ErrorKind::schema, "");
    } else if constexpr (std::is_same_v<T, int>) {
      if (!it->is_number_integer()) throw Error(ErrorKind::schema, "");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw Error(ErrorKind::schema, "");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw Error(ErrorKind::schema, "");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw Error(ErrorKind::schema, "");
    }
    out = it->get<T>();
  } catch (const std::exception&) {
    throw Error(ErrorKind::schema, path + "." + key + ": wrong type");
  }
}

void fail(const std::string& what) { throw Error(ErrorKind::validation, "config: " + what); }

}  // namespace

std::size_t PipelineConfig::hop() const {
  return static_cast<std::size_t>(std::llround(double(fft_size) * (1.0 - overlap)));
}

CameraModel PipelineConfig::camera_model() const {
  return CameraModel(camera.width, camera.height, camera.diagonal_fov_deg);
}

SteeringGrid PipelineConfig::steering_grid() const {
  return build_grid(camera_model(), grid.cols, grid.rows, grid.distance_m);
}

ArrayGeometry PipelineConfig::load_array() const {
  ArrayGeometry g = geometry_path.empty() ? default_uma16_geometry() : load_geometry(geometry_path);
  return array_offset_m.isZero(0.0) ? g : g.translated(array_offset_m);
}

void PipelineConfig::validate() const {
  if (camera.width <= 0 || camera.height <= 0) fail("camera resolution must be positive");
  if (!(camera.diagonal_fov_deg > 0.0 && camera.diagonal_fov_deg < 180.0)) fail("diagonal_fov_deg must lie in (0, 180)");
  if (grid.cols < 2 || grid.rows < 2) fail("grid needs at least 2x2 cells");
  if (grid.cols > std::size_t(camera.width) || grid.rows > std::size_t(camera.height)) {
    fail("grid must not be finer than the camera resolution");
  }
  if (!(grid.distance_m > 0.0)) fail("grid distance must be positive");
  if (!array_offset_m.allFinite()) fail("array offset must be finite");
  if (fft_size < 2) fail("fft_size must be at least 2");
  if (!(overlap >= 0.0 && overlap < 1.0)) fail("overlap must lie in [0, 1)");
  if (hop() == 0) fail("overlap leaves a zero STFT hop");
  if (chunk_size < fft_size) fail("chunk_size must be at least fft_size");
  if (csm_chunks == 0) fail("csm_chunks must be at least 1");
  if (!(loading_eps >= 0.0)) fail("loading_eps must be >= 0");
  if (bands.empty()) fail("at least one band is required");
  for (const auto& b : bands) {
    try {
      b.validate();
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  if (n_sources == 0) fail("n_sources must be at least 1");
  if (!(speed_of_sound > 0.0)) fail("speed_of_sound must be positive");
  if (!std::isfinite(spl_ref_db)) fail("spl_ref_db must be finite");
  if (median_window == 0) fail("median_window must be at least 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  if (stereo_channels.first == stereo_channels.second) fail("stereo channels must be distinct");
}

json PipelineConfig::to_json() const {
  json bands_json = json::array();
  for (const auto& b : bands) {
    bands_json.push_back({{"center_hz", b.center_hz}, {"floor_db", b.floor_db}, {"clip_db", b.clip_db}});
  }
  return {
      {"geometry", geometry_path.empty() ? json(nullptr) : json(geometry_path)},
      {"array_offset_m", {array_offset_m.x(), array_offset_m.y(), array_offset_m.z()}},
      {"camera", {{"width", camera.width}, {"height", camera.height}, {"diagonal_fov_deg", camera.diagonal_fov_deg}}},
      {"grid", {{"cols", grid.cols}, {"rows", grid.rows}, {"distance_m", grid.distance_m}}},
      {"chunk_size", chunk_size},
      {"fft_size", fft_size},
      {"overlap", overlap},
      {"window", to_string(window)},
      {"csm_chunks", csm_chunks},
      {"loading_eps", loading_eps},
      {"bands", bands_json},
      {"n_sources", n_sources},
      {"speed_of_sound", speed_of_sound},
      {"spl_ref_db", spl_ref_db},
      {"median_window", median_window},
      {"alpha", alpha},
      {"stacked", stacked},
      {"stereo_channels", {stereo_channels.first, stereo_channels.second}},
  };
}

void PipelineConfig::merge_json(const json& doc) {
  check_keys(doc, "$", {"geometry", "array_offset_m", "camera", "grid", "chunk_size", "fft_size", "overlap",
                        "window", "csm_chunks", "loading_eps", "bands", "n_sources", "speed_of_sound",
                        "spl_ref_db", "median_window", "alpha", "stacked", "stereo_channels"});
  if (auto it = doc.find("geometry"); it != doc.end()) {
    if (it->is_null()) {
      geometry_path.clear();
    } else {
      read(doc, "$", "geometry", geometry_path);
    }
  }
  if (auto it = doc.find("array_offset_m"); it != doc.end()) {
    if (!it->is_array() || it->size() != 3 || !std::all_of(it->begin(), it->end(), [](auto& v) { return v.is_number(); })) {
      throw Error(ErrorKind::schema, "$.array_offset_m: expected [x, y, z]");
    }
    array_offset_m = Point3((*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>());
  }
  if (auto it = doc.find("camera"); it != doc.end()) {
    check_keys(*it, "$.camera", {"width", "height", "diagonal_fov_deg"});
    read(*it, "$.camera", "width", camera.width);
    read(*it, "$.camera", "height", camera.height);
    read(*it, "$.camera", "diagonal_fov_deg", camera.diagonal_fov_deg);
  }
  if (auto it = doc.find("grid"); it != doc.end()) {
    check_keys(*it, "$.grid", {"cols", "rows", "distance_m"});
    read(*it, "$.grid", "cols", grid.cols);
    read(*it, "$.grid", "rows", grid.rows);
    read(*it, "$.grid", "distance_m", grid.distance_m);
  }
  read(doc, "$", "chunk_size", chunk_size);
  read(doc, "$", "fft_size", fft_size);
  read(doc, "$", "overlap", overlap);
  if (doc.contains("window")) {
    std::string w;
    read(doc, "$", "window", w);
    window = parse_window(w);
  }
  read(doc, "$", "csm_chunks", csm_chunks);
  read(doc, "$", "loading_eps", loading_eps);
  if (auto it = doc.find("bands"); it != doc.end()) {
    if (!it->is_array()) throw Error(ErrorKind::schema, "$.bands: expected an array");
    std::vector<BandConfig> parsed;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "$.bands[" + std::to_string(i) + "]";
      const json& b = (*it)[i];
      check_keys(b, path, {"center_hz", "floor_db", "clip_db"});
      for (const char* key : {"center_hz", "floor_db", "clip_db"}) {
        if (!b.contains(key)) throw Error(ErrorKind::schema, path + "." + key + ": required");
      }
      BandConfig band;
      read(b, path, "center_hz", band.center_hz);
      read(b, path, "floor_db", band.floor_db);
      read(b, path, "clip_db", band.clip_db);
      parsed.push_back(band);
    }
    bands = std::move(parsed);
  }
  read(doc, "$", "n_sources", n_sources);
  read(doc, "$", "speed_of_sound", speed_of_sound);
  read(doc, "$", "spl_ref_db", spl_ref_db);
  read(doc, "$", "median_window", median_window);
  read(doc, "$", "alpha", alpha);
  read(doc, "$", "stacked", stacked);
  if (auto it = doc.find("stereo_channels"); it != doc.end()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_unsigned() || !(*it)[1].is_number_unsigned()) {
      throw Error(ErrorKind::schema, "$.stereo_channels: expected [left, right] channel indices");
    }
    stereo_channels = {(*it)[0].get<std::size_t>(), (*it)[1].get<std::size_t>()};
  }
}

PipelineConfig load_config_file(const std::string& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::argument, "cannot open config file " + path);
  std::stringstream text;
  text << in.rdbuf();
  json doc;
  try {
    doc = json::parse(text.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, "config " + path + ": " + e.what());
  }
  base.merge_json(doc);
  return base;
}

}  // namespace afv
