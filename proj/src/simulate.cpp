#include "afv/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <set>

#include "afv/error.hpp"
#include "fft.hpp"

namespace afv {

namespace {

using nlohmann::json;

double rms_amplitude(double level_dbfs) { return std::pow(10.0, level_dbfs / 20.0) / std::numbers::sqrt2; }

std::string source_path(std::size_t i) { return "$.sources[" + std::to_string(i) + "]"; }

std::vector<double> white_noise(std::size_t n, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

// Band-limited noise, periodic over n samples, then one delayed copy per mic.
std::vector<std::vector<double>> band_noise_channels(const BandNoiseSignal& sig, double level_dbfs,
                                                     const std::vector<double>& delays_s, double sample_rate,
                                                     std::size_t n) {
  const detail::RealFft fft(n);
  std::mt19937_64 rng(sig.seed);
  const std::vector<double> white = white_noise(n, 1.0, rng);
  std::vector<std::complex<double>> spectrum(fft.bins());
  fft.forward(white, spectrum);

  double power = 0.0;  // Parseval on the one-sided spectrum
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const double f = double(k) * sample_rate / double(n);
    // Nyquist bin dropped: a fractional delay cannot be applied to it in a real signal.
    const bool nyquist = (n % 2 == 0) && k == n / 2;
    if (k == 0 || nyquist || f < sig.lo_hz || f > sig.hi_hz) {
      spectrum[k] = 0.0;
      continue;
    }
    power += 2.0 * std::norm(spectrum[k]);
  }
  power /= double(n) * double(n);
  if (power <= 0.0) {
    throw Error(ErrorKind::scene, "band noise band [" + std::to_string(sig.lo_hz) + ", " +
                                      std::to_string(sig.hi_hz) + "] Hz contains no FFT bin");
  }
  const double gain = rms_amplitude(level_dbfs) / std::sqrt(power);

  std::vector<std::vector<double>> channels;
  std::vector<std::complex<double>> shifted(spectrum.size());
  for (double delay : delays_s) {
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
      const double f = double(k) * sample_rate / double(n);
      shifted[k] = spectrum[k] * gain * std::polar(1.0, -2.0 * std::numbers::pi * f * delay);
    }
    std::vector<double> x(n);
    fft.inverse(shifted, x);
    channels.push_back(std::move(x));
  }
  return channels;
}

void require_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw Error(ErrorKind::schema, path + ": expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!keys.count(key)) throw Error(ErrorKind::schema, path + "." + key + ": unknown field");
  }
}

double get_number(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorKind::schema, path + "." + key + ": required field missing");
  if (!it->is_number()) throw Error(ErrorKind::schema, path + "." + key + ": expected a number");
  return it->get<double>();
}

std::uint64_t get_seed(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) return 0;
  if (!it->is_number_unsigned()) throw Error(ErrorKind::schema, path + "." + key + ": expected a non-negative integer");
  return it->get<std::uint64_t>();
}

json signal_to_json(const SourceSignal& signal) {
  if (const auto* tone = std::get_if<ToneSignal>(&signal)) {
    return {{"kind", "tone"}, {"freq_hz", tone->freq_hz}};
  }
  const auto& noise = std::get<BandNoiseSignal>(signal);
  return {{"kind", "band_noise"}, {"lo_hz", noise.lo_hz}, {"hi_hz", noise.hi_hz}, {"seed", noise.seed}};
}

SourceSignal signal_from_json(const json& obj, const std::string& path) {
  if (!obj.is_object()) throw Error(ErrorKind::schema, path + ": expected an object");
  auto kind = obj.find("kind");
  if (kind == obj.end() || !kind->is_string()) throw Error(ErrorKind::schema, path + ".kind: expected a string");
  if (*kind == "tone") {
    require_keys(obj, path, {"kind", "freq_hz"});
    return ToneSignal{get_number(obj, path, "freq_hz")};
  }
  if (*kind == "band_noise") {
    require_keys(obj, path, {"kind", "lo_hz", "hi_hz", "seed"});
    return BandNoiseSignal{get_number(obj, path, "lo_hz"), get_number(obj, path, "hi_hz"),
                           get_seed(obj, path, "seed")};
  }
  throw Error(ErrorKind::schema, path + ".kind: unknown signal kind '" + kind->get<std::string>() + "'");
}

}  // namespace

std::size_t SceneSpec::frames() const { return static_cast<std::size_t>(std::llround(duration_s * sample_rate)); }

void SceneSpec::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw Error(ErrorKind::validation, "$.sample_rate: must be positive");
  }
  if (!(duration_s > 0.0) || !std::isfinite(duration_s) || frames() == 0) {
    throw Error(ErrorKind::validation, "$.duration_s: must be positive");
  }
  if (noise_floor_dbfs && !(*noise_floor_dbfs <= 0.0)) {
    throw Error(ErrorKind::validation, "$.noise_floor_dbfs: must be <= 0 dBFS");
  }
  const double nyquist = sample_rate / 2.0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    const std::string path = source_path(i);
    if (!s.position.allFinite() || !(s.position.z() > 0.0)) {
      throw Error(ErrorKind::validation, path + ".position: source must lie in front of the camera (z > 0)");
    }
    if (!(s.level_dbfs <= 0.0)) throw Error(ErrorKind::validation, path + ".level_dbfs: must be <= 0 dBFS");
    if (const auto* tone = std::get_if<ToneSignal>(&s.signal)) {
      if (!(tone->freq_hz > 0.0 && tone->freq_hz < nyquist)) {
        throw Error(ErrorKind::validation, path + ".signal.freq_hz: must lie in (0, Nyquist)");
      }
    } else {
      const auto& band = std::get<BandNoiseSignal>(s.signal);
      if (!(band.lo_hz >= 0.0 && band.lo_hz < band.hi_hz && band.hi_hz <= nyquist)) {
        throw Error(ErrorKind::validation, path + ".signal: need 0 <= lo_hz < hi_hz <= Nyquist");
      }
    }
  }
}

MultichannelBuffer synth_scene(const SceneSpec& scene, const ArrayGeometry& geometry, double speed_of_sound) {
  scene.validate();
  if (!(speed_of_sound > 0.0)) throw Error(ErrorKind::argument, "speed of sound must be positive");
  const std::size_t n = scene.frames();
  const std::size_t M = geometry.size();
  const double fs = scene.sample_rate;

  std::vector<std::vector<std::vector<double>>> contributions;  // source x mic x sample
  for (const auto& src : scene.sources) {
    std::vector<double> distances(M), delays(M);
    for (std::size_t m = 0; m < M; ++m) {
      distances[m] = (src.position - geometry[m]).norm();
      delays[m] = distances[m] / speed_of_sound;
    }
    std::vector<std::vector<double>> channels;
    if (const auto* tone = std::get_if<ToneSignal>(&src.signal)) {
      const double amplitude = std::pow(10.0, src.level_dbfs / 20.0);
      const double w = 2.0 * std::numbers::pi * tone->freq_hz;
      for (std::size_t m = 0; m < M; ++m) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = amplitude * std::sin(w * (double(i) / fs - delays[m]));
        channels.push_back(std::move(x));
      }
    } else {
      channels = band_noise_channels(std::get<BandNoiseSignal>(src.signal), src.level_dbfs, delays, fs, n);
    }
    for (std::size_t m = 0; m < M; ++m) {
      for (double& v : channels[m]) v /= distances[m];
    }
    contributions.push_back(std::move(channels));
  }

  std::vector<std::vector<double>> mix(M, std::vector<double>(n, 0.0));
  for (const auto& src : contributions) {
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t i = 0; i < n; ++i) mix[m][i] += src[m][i];
    }
  }
  if (scene.noise_floor_dbfs) {
    std::mt19937_64 rng(scene.noise_seed);
    const double sigma = rms_amplitude(*scene.noise_floor_dbfs);
    for (std::size_t m = 0; m < M; ++m) {
      const std::vector<double> noise = white_noise(n, sigma, rng);
      for (std::size_t i = 0; i < n; ++i) mix[m][i] += noise[i];
    }
  }

  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(mix[m][i]) <= 1.0) continue;
      std::size_t hot = 0;
      for (std::size_t s = 1; s < contributions.size(); ++s) {
        if (std::abs(contributions[s][m][i]) > std::abs(contributions[hot][m][i])) hot = s;
      }
      const std::string who = contributions.empty() ? "sensor noise" : "source " + std::to_string(hot);
      throw Error(ErrorKind::scene, "scene clips on channel " + std::to_string(m) + " at sample " +
                                        std::to_string(i) + " (" + who + " dominates); lower its level");
    }
  }
  return MultichannelBuffer(std::move(mix), fs);
}

TruthPixel ground_truth_pixel(const SourceSpec& source, const CameraModel& camera) {
  const Pixel p = project(camera, source.position);
  return {p, camera.contains(p)};
}

SceneSpec scene_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("scene JSON: ") + e.what());
  }
  require_keys(doc, "$", {"schema", "sample_rate", "duration_s", "noise_floor_dbfs", "noise_seed", "sources"});
  auto schema = doc.find("schema");
  if (schema == doc.end() || !schema->is_number_integer() || *schema != 1) {
    throw Error(ErrorKind::schema, "$.schema: expected 1");
  }

  SceneSpec scene;
  scene.duration_s = get_number(doc, "$", "duration_s");
  if (doc.contains("sample_rate")) scene.sample_rate = get_number(doc, "$", "sample_rate");
  scene.noise_seed = get_seed(doc, "$", "noise_seed");
  if (auto it = doc.find("noise_floor_dbfs"); it != doc.end() && !it->is_null()) {
    scene.noise_floor_dbfs = get_number(doc, "$", "noise_floor_dbfs");
  }
  auto sources = doc.find("sources");
  if (sources == doc.end() || !sources->is_array()) throw Error(ErrorKind::schema, "$.sources: expected an array");
  for (std::size_t i = 0; i < sources->size(); ++i) {
    const json& s = (*sources)[i];
    const std::string path = source_path(i);
    require_keys(s, path, {"position", "signal", "level_dbfs"});
    auto pos = s.find("position");
    if (pos == s.end() || !pos->is_array() || pos->size() != 3 ||
        !std::all_of(pos->begin(), pos->end(), [](const json& v) { return v.is_number(); })) {
      throw Error(ErrorKind::schema, path + ".position: expected [x, y, z] numbers");
    }
    if (!s.contains("signal")) throw Error(ErrorKind::schema, path + ".signal: required field missing");
    SourceSpec src;
    src.position = Point3((*pos)[0].get<double>(), (*pos)[1].get<double>(), (*pos)[2].get<double>());
    src.signal = signal_from_json(s["signal"], path + ".signal");
    src.level_dbfs = get_number(s, path, "level_dbfs");
    scene.sources.push_back(src);
  }
  scene.validate();
  return scene;
}

std::string scene_to_json(const SceneSpec& scene) {
  json doc;
  doc["schema"] = 1;
  doc["sample_rate"] = scene.sample_rate;
  doc["duration_s"] = scene.duration_s;
  doc["noise_floor_dbfs"] = scene.noise_floor_dbfs ? json(*scene.noise_floor_dbfs) : json(nullptr);
  doc["noise_seed"] = scene.noise_seed;
  doc["sources"] = json::array();
  for (const auto& s : scene.sources) {
    doc["sources"].push_back({{"position", {s.position.x(), s.position.y(), s.position.z()}},
                              {"signal", signal_to_json(s.signal)},
                              {"level_dbfs", s.level_dbfs}});
  }
  return doc.dump(2);
}

json truth_json(const SceneSpec& scene, const CameraModel& camera, const SteeringGrid* grid) {
  json out = json::array();
  for (std::size_t i = 0; i < scene.sources.size(); ++i) {
    const auto& s = scene.sources[i];
    const TruthPixel t = ground_truth_pixel(s, camera);
    json entry{{"index", i},
               {"position", {s.position.x(), s.position.y(), s.position.z()}},
               {"pixel", {t.pixel.u, t.pixel.v}},
               {"in_view", t.in_view},
               {"signal", signal_to_json(s.signal)},
               {"level_dbfs", s.level_dbfs}};
    if (grid) {
      if (auto cell = grid->cell_of(t.pixel)) {
        entry["cell"] = {cell->col, cell->row};
      } else {
        entry["cell"] = nullptr;
      }
    }
    out.push_back(entry);
  }
  return {{"camera", {{"width", camera.width()}, {"height", camera.height()},
                      {"diagonal_fov_deg", camera.diagonal_fov_deg()}}},
          {"sources", out}};
}

}  // namespace afv
