#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "afv/beamform.hpp"

namespace afv {

struct BandConfig {
  double center_hz = 0.0;
  double floor_db = 0.0;  // subtracted from the SPL map, >= 0
  double clip_db = 0.0;   // retained dynamic range below the map maximum, > 0

  void validate() const;
  friend bool operator==(const BandConfig&, const BandConfig&) = default;
};

/// Default 2/4/6/8 kHz bands with their noise floors and top-range clips.
std::vector<BandConfig> default_bands();

/// Per-cell values in [0, 1].
struct NormalizedField {
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::vector<double> values;
  std::size_t frame_index = 0;

  static NormalizedField zeros(std::size_t cols, std::size_t rows, std::size_t frame_index = 0);
  double at(std::size_t col, std::size_t row) const { return values.at(row * cols + col); }
  std::size_t size() const noexcept { return values.size(); }
  bool all_zero() const;
};

/// max(L - floor_db, 0) per cell.
FieldMap floor_subtract(const FieldMap& map_db, double floor_db);

/// Maps the top `clip_db` below the maximum onto [0, 1]; everything lower is 0.
/// A map with no positive value yields all zeros.
NormalizedField clip_top(const FieldMap& map, double clip_db);

/// Cellwise mean. Throws argument error for an empty set or mismatched grids.
NormalizedField composite(std::span<const NormalizedField> fields);

/// Sliding cellwise median over the last `window` fields (lower median for
/// even counts). Emits from the first push using whatever history exists.
/// Stateful; one instance per stream.
class MedianWindow {
 public:
  explicit MedianWindow(std::size_t window = 8);

  NormalizedField push(const NormalizedField& field);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return history_.size(); }
  void clear() { history_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<NormalizedField> history_;
  std::vector<double> scratch_;
};

/// Row-major scalar image.
struct ScalarImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values.at(std::size_t(y) * std::size_t(width) + std::size_t(x)); }
};

/// Bilinear resampling with grid cell centers as sample points; edges clamp.
ScalarImage upsample(const NormalizedField& field, int width, int height);

}  // namespace afv
