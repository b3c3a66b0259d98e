#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace afv {

// Camera coordinates: origin at the camera, +x right, +y down, +z forward.
using Point3 = Eigen::Vector3d;

inline constexpr double kDefaultSpeedOfSound = 343.0;  // m/s at 20 degC

/// Microphone positions in meters, indexed by device channel.
class ArrayGeometry {
 public:
  /// Throws validation error for fewer than two mics or coincident positions.
  explicit ArrayGeometry(std::vector<Point3> mics, std::string name = {});

  const std::string& name() const noexcept { return name_; }
  const std::vector<Point3>& mics() const noexcept { return mics_; }
  std::size_t size() const noexcept { return mics_.size(); }
  const Point3& operator[](std::size_t channel) const { return mics_.at(channel); }

  /// Copy of this geometry shifted by `offset` (array-to-camera extrinsic).
  ArrayGeometry translated(const Point3& offset) const;

 private:
  std::vector<Point3> mics_;
  std::string name_;
};

/// Parses the `<arraygeometry>` XML format: one `<pos name=".." x=".." y=".." z=".."/>`
/// child per microphone, in channel order. `z` defaults to 0 when absent.
ArrayGeometry parse_geometry(std::string_view xml_text);
/// Shortest decimal representation, so parse_geometry() restores every coordinate exactly.
std::string serialize_geometry(const ArrayGeometry& geometry);
ArrayGeometry load_geometry(const std::string& path);

/// 4x4 planar lattice at 42 mm pitch approximating a UMA-16 board, channels in
/// row-major order from the upper-left microphone (as seen from the camera).
ArrayGeometry default_uma16_geometry();

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

class CameraModel {
 public:
  /// Pinhole camera; focal length follows from the diagonal field of view.
  /// The principal point defaults to the image center.
  CameraModel(int width, int height, double diagonal_fov_deg,
              std::optional<Pixel> principal = std::nullopt);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double diagonal_fov_deg() const noexcept { return diagonal_fov_deg_; }
  double focal_px() const noexcept { return focal_px_; }
  const Pixel& principal() const noexcept { return principal_; }
  double horizontal_fov_deg() const;
  double vertical_fov_deg() const;

  bool contains(const Pixel& p) const noexcept {
    return p.u >= 0.0 && p.v >= 0.0 && p.u < width_ && p.v < height_;
  }

 private:
  int width_;
  int height_;
  double diagonal_fov_deg_;
  double focal_px_;
  Pixel principal_;
};

/// Throws behind_camera error for z <= 0.
Pixel project(const CameraModel& camera, const Point3& point);

struct GridCell {
  std::size_t col = 0;
  std::size_t row = 0;
};

/// Camera-aligned planar steering surface: one candidate source location per
/// cell, on the ray through the cell's pixel center at depth `distance_m`.
class SteeringGrid {
 public:
  SteeringGrid(const CameraModel& camera, std::size_t cols, std::size_t rows, double distance_m);

  const CameraModel& camera() const noexcept { return camera_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return points_.size(); }
  double distance_m() const noexcept { return distance_m_; }

  /// Row-major: index = row * cols + col.
  const std::vector<Point3>& points() const noexcept { return points_; }
  const Point3& point(std::size_t col, std::size_t row) const { return points_.at(index(col, row)); }
  std::size_t index(std::size_t col, std::size_t row) const noexcept { return row * cols_ + col; }
  GridCell cell(std::size_t index) const noexcept { return {index % cols_, index / cols_}; }

  double cell_width_px() const noexcept { return double(camera_.width()) / double(cols_); }
  double cell_height_px() const noexcept { return double(camera_.height()) / double(rows_); }
  Pixel cell_center(std::size_t col, std::size_t row) const noexcept;
  /// Cell containing pixel `p`, or nullopt when it lies outside the image.
  std::optional<GridCell> cell_of(const Pixel& p) const noexcept;

 private:
  CameraModel camera_;
  std::size_t cols_;
  std::size_t rows_;
  double distance_m_;
  std::vector<Point3> points_;
};

SteeringGrid build_grid(const CameraModel& camera, std::size_t cols, std::size_t rows,
                        double distance_m);

}  // namespace afv
