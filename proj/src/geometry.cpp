#include "afv/geometry.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "afv/error.hpp"

namespace afv {

namespace {

namespace pt = boost::property_tree;

constexpr double kMinMicSeparation = 1e-6;

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

ArrayGeometry::ArrayGeometry(std::vector<Point3> mics, std::string name)
    : mics_(std::move(mics)), name_(std::move(name)) {
  if (mics_.size() < 2) {
    throw Error(ErrorKind::validation,
                "array geometry needs at least 2 microphones, got " + std::to_string(mics_.size()));
  }
  for (std::size_t i = 0; i < mics_.size(); ++i) {
    if (!mics_[i].allFinite()) {
      throw Error(ErrorKind::validation, "microphone " + std::to_string(i) + " has a non-finite position");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if ((mics_[i] - mics_[j]).norm() <= kMinMicSeparation) {
        throw Error(ErrorKind::validation, "microphones " + std::to_string(j) + " and " +
                                               std::to_string(i) + " share a position");
      }
    }
  }
}

ArrayGeometry ArrayGeometry::translated(const Point3& offset) const {
  std::vector<Point3> moved = mics_;
  for (auto& p : moved) p += offset;
  return ArrayGeometry(std::move(moved), name_);
}

ArrayGeometry parse_geometry(std::string_view xml_text) {
  pt::ptree tree;
  std::istringstream in{std::string(xml_text)};
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorKind::parse, "geometry XML line " + std::to_string(e.line()) + ": " + e.message());
  }

  auto root = tree.get_child_optional("arraygeometry");
  if (!root) throw Error(ErrorKind::schema, "geometry XML: missing <arraygeometry> root element");

  std::string name = root->get<std::string>("<xmlattr>.name", "");
  std::vector<Point3> mics;
  for (const auto& [tag, node] : *root) {
    if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
    if (tag != "pos") {
      throw Error(ErrorKind::schema, "geometry XML: unexpected element <" + tag + ">");
    }
    const std::size_t index = mics.size();
    const std::string label = node.get<std::string>("<xmlattr>.name", "#" + std::to_string(index));
    Point3 p = Point3::Zero();
    for (int axis = 0; axis < 3; ++axis) {
      const std::string attr = std::string(1, char('x' + axis));
      auto text = node.get_optional<std::string>("<xmlattr>." + attr);
      if (!text) {
        if (axis == 2) continue;
        throw Error(ErrorKind::schema, "geometry XML: mic " + label + " is missing attribute '" + attr + "'");
      }
      auto value = parse_double(*text);
      if (!value) {
        throw Error(ErrorKind::schema, "geometry XML: mic " + label + " has non-numeric " + attr + "=\"" +
                                           *text + "\"");
      }
      p[axis] = *value;
    }
    mics.push_back(p);
  }
  return ArrayGeometry(std::move(mics), std::move(name));
}

std::string serialize_geometry(const ArrayGeometry& geometry) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<arraygeometry";
  if (!geometry.name().empty()) out << " name=\"" << xml_escape(geometry.name()) << '"';
  out << ">\n";
  for (std::size_t i = 0; i < geometry.size(); ++i) {
    const Point3& p = geometry[i];
    out << "  <pos name=\"Point " << (i + 1) << "\" x=\"" << format_double(p.x()) << "\" y=\""
        << format_double(p.y()) << '"';
    if (p.z() != 0.0) out << " z=\"" << format_double(p.z()) << '"';
    out << "/>\n";
  }
  out << "</arraygeometry>\n";
  return out.str();
}

ArrayGeometry load_geometry(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open geometry file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_geometry(text.str());
}

ArrayGeometry default_uma16_geometry() {
  constexpr double pitch = 0.042;
  std::vector<Point3> mics;
  for (int row = 0; row < 4; ++row) {
    for (int col = 0; col < 4; ++col) {
      mics.emplace_back((col - 1.5) * pitch, (row - 1.5) * pitch, 0.0);
    }
  }
  return ArrayGeometry(std::move(mics), "uma16_4x4_42mm");
}

CameraModel::CameraModel(int width, int height, double diagonal_fov_deg, std::optional<Pixel> principal)
    : width_(width), height_(height), diagonal_fov_deg_(diagonal_fov_deg) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::argument, "camera resolution must be positive");
  }
  if (!(diagonal_fov_deg > 0.0 && diagonal_fov_deg < 180.0)) {
    throw Error(ErrorKind::argument, "diagonal field of view must lie in (0, 180) degrees");
  }
  const double half_diag = std::hypot(double(width), double(height)) / 2.0;
  focal_px_ = half_diag / std::tan(diagonal_fov_deg * std::numbers::pi / 360.0);
  principal_ = principal.value_or(Pixel{width / 2.0, height / 2.0});
}

double CameraModel::horizontal_fov_deg() const {
  return 2.0 * std::atan(width_ / 2.0 / focal_px_) * 180.0 / std::numbers::pi;
}

double CameraModel::vertical_fov_deg() const {
  return 2.0 * std::atan(height_ / 2.0 / focal_px_) * 180.0 / std::numbers::pi;
}

Pixel project(const CameraModel& camera, const Point3& point) {
  if (!(point.z() > 0.0)) {
    throw Error(ErrorKind::behind_camera, "cannot project a point with z <= 0");
  }
  return {camera.principal().u + camera.focal_px() * point.x() / point.z(),
          camera.principal().v + camera.focal_px() * point.y() / point.z()};
}

SteeringGrid::SteeringGrid(const CameraModel& camera, std::size_t cols, std::size_t rows, double distance_m)
    : camera_(camera), cols_(cols), rows_(rows), distance_m_(distance_m) {
  if (cols < 2 || rows < 2) throw Error(ErrorKind::argument, "steering grid needs at least 2x2 cells");
  if (!(distance_m > 0.0) || !std::isfinite(distance_m)) {
    throw Error(ErrorKind::argument, "steering grid distance must be positive");
  }
  points_.reserve(cols * rows);
  const double f = camera_.focal_px();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const Pixel px = cell_center(c, r);
      points_.emplace_back((px.u - camera_.principal().u) * distance_m / f,
                           (px.v - camera_.principal().v) * distance_m / f, distance_m);
    }
  }
}

Pixel SteeringGrid::cell_center(std::size_t col, std::size_t row) const noexcept {
  return {(double(col) + 0.5) * cell_width_px(), (double(row) + 0.5) * cell_height_px()};
}

std::optional<GridCell> SteeringGrid::cell_of(const Pixel& p) const noexcept {
  if (!camera_.contains(p)) return std::nullopt;
  auto col = static_cast<std::size_t>(p.u / cell_width_px());
  auto row = static_cast<std::size_t>(p.v / cell_height_px());
  return GridCell{std::min(col, cols_ - 1), std::min(row, rows_ - 1)};
}

SteeringGrid build_grid(const CameraModel& camera, std::size_t cols, std::size_t rows, double distance_m) {
  return SteeringGrid(camera, cols, rows, distance_m);
}

}  // namespace afv
