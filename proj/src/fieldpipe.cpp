#include "afv/fieldpipe.hpp"

#include <algorithm>
#include <cmath>

#include "afv/error.hpp"

namespace afv {

void BandConfig::validate() const {
  if (!(center_hz > 0.0)) throw Error(ErrorKind::validation, "band center frequency must be positive");
  if (!(floor_db >= 0.0)) throw Error(ErrorKind::validation, "band noise floor must be >= 0 dB");
  if (!(clip_db > 0.0)) throw Error(ErrorKind::validation, "band clip range must be > 0 dB");
}

std::vector<BandConfig> default_bands() {
  return {{2000.0, 18.0, 0.2}, {4000.0, 20.0, 0.2}, {6000.0, 23.0, 0.5}, {8000.0, 27.0, 0.5}};
}

NormalizedField NormalizedField::zeros(std::size_t cols, std::size_t rows, std::size_t frame_index) {
  return {cols, rows, std::vector<double>(cols * rows, 0.0), frame_index};
}

bool NormalizedField::all_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

FieldMap floor_subtract(const FieldMap& map_db, double floor_db) {
  FieldMap out = map_db;
  for (double& v : out.values) v = std::max(v - floor_db, 0.0);
  return out;
}

NormalizedField clip_top(const FieldMap& map, double clip_db) {
  if (!(clip_db > 0.0)) throw Error(ErrorKind::argument, "clip range must be positive");
  NormalizedField out = NormalizedField::zeros(map.cols, map.rows, map.chunk_index);
  if (map.values.empty()) return out;
  const double top = *std::max_element(map.values.begin(), map.values.end());
  if (!(top > 0.0)) return out;
  const double bottom = top - clip_db;
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const double v = map.values[i];
    // top - (top - clip) need not round back to clip; pin the maximum to exactly 1.
    out.values[i] = v >= top ? 1.0 : std::clamp((std::max(v, bottom) - bottom) / clip_db, 0.0, 1.0);
  }
  return out;
}

NormalizedField composite(std::span<const NormalizedField> fields) {
  if (fields.empty()) throw Error(ErrorKind::argument, "composite of zero fields");
  const auto& first = fields.front();
  for (const auto& f : fields) {
    if (f.cols != first.cols || f.rows != first.rows || f.values.size() != first.values.size()) {
      throw Error(ErrorKind::argument, "composite fields have mismatched grids");
    }
  }
  NormalizedField out = NormalizedField::zeros(first.cols, first.rows, first.frame_index);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    double sum = 0.0;
    for (const auto& f : fields) sum += f.values[i];
    out.values[i] = std::clamp(sum / double(fields.size()), 0.0, 1.0);
  }
  return out;
}

MedianWindow::MedianWindow(std::size_t window) : capacity_(window) {
  if (window == 0) throw Error(ErrorKind::argument, "median window must hold at least one frame");
}

NormalizedField MedianWindow::push(const NormalizedField& field) {
  if (!history_.empty() && (field.cols != history_.front().cols || field.rows != history_.front().rows)) {
    throw Error(ErrorKind::argument, "median window grid mismatch");
  }
  if (history_.size() == capacity_) history_.pop_front();
  history_.push_back(field);

  NormalizedField out = NormalizedField::zeros(field.cols, field.rows, field.frame_index);
  const std::size_t n = history_.size();
  const std::size_t mid = (n - 1) / 2;
  scratch_.resize(n);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    for (std::size_t h = 0; h < n; ++h) scratch_[h] = history_[h].values[i];
    std::nth_element(scratch_.begin(), scratch_.begin() + std::ptrdiff_t(mid), scratch_.end());
    out.values[i] = scratch_[mid];
  }
  return out;
}

ScalarImage upsample(const NormalizedField& field, int width, int height) {
  if (width <= 0 || height <= 0 || std::size_t(width) < field.cols || std::size_t(height) < field.rows) {
    throw Error(ErrorKind::argument, "upsample target must be at least the grid size");
  }
  ScalarImage img{width, height, std::vector<double>(std::size_t(width) * std::size_t(height))};
  const double sx = double(field.cols) / width;
  const double sy = double(field.rows) / height;
  const double max_gx = double(field.cols - 1);
  const double max_gy = double(field.rows - 1);
  for (int y = 0; y < height; ++y) {
    const double gy = std::clamp((y + 0.5) * sy - 0.5, 0.0, max_gy);
    const std::size_t r0 = std::min(std::size_t(gy), field.rows - 1);
    const std::size_t r1 = std::min(r0 + 1, field.rows - 1);
    const double fy = gy - double(r0);
    for (int x = 0; x < width; ++x) {
      const double gx = std::clamp((x + 0.5) * sx - 0.5, 0.0, max_gx);
      const std::size_t c0 = std::min(std::size_t(gx), field.cols - 1);
      const std::size_t c1 = std::min(c0 + 1, field.cols - 1);
      const double fx = gx - double(c0);
      const double top = field.at(c0, r0) * (1.0 - fx) + field.at(c1, r0) * fx;
      const double bottom = field.at(c0, r1) * (1.0 - fx) + field.at(c1, r1) * fx;
      img.values[std::size_t(y) * std::size_t(width) + std::size_t(x)] =
          std::clamp(top * (1.0 - fy) + bottom * fy, 0.0, 1.0);
    }
  }
  return img;
}

}  // namespace afv
