#include <cmath>
#include <numbers>

#include <doctest.h>

#include "afv/geometry.hpp"
#include "test_support.hpp"

using namespace afv;

TEST_SUITE("geometry") {

TEST_CASE("parse 4x4 lattice and the bundled file") {
  std::string xml = "<?xml version=\"1.0\"?>\n<arraygeometry name=\"lattice\">\n";
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      xml += "<pos name=\"p" + std::to_string(r * 4 + c) + "\" x=\"" + std::to_string((c - 1.5) * 0.042) +
             "\" y=\"" + std::to_string((r - 1.5) * 0.042) + "\" z=\"0\"/>\n";
    }
  }
  xml += "</arraygeometry>\n";
  const ArrayGeometry g = parse_geometry(xml);
  CHECK(g.size() == 16);
  CHECK(g.name() == "lattice");
  CHECK(g[0].x() == doctest::Approx(-0.063));
  CHECK(g[15].y() == doctest::Approx(0.063));

  const ArrayGeometry bundled = load_geometry(std::string(AFV_SOURCE_DIR) + "/data/uma16.xml");
  const ArrayGeometry builtin = default_uma16_geometry();
  REQUIRE(bundled.size() == builtin.size());
  for (std::size_t i = 0; i < bundled.size(); ++i) CHECK((bundled[i] - builtin[i]).norm() < 1e-15);
}

TEST_CASE("two-mic pair has a 12.6 cm aperture") {
  const ArrayGeometry g = parse_geometry(
      "<arraygeometry><pos x=\"-0.063\" y=\"0\" z=\"0\"/><pos x=\"0.063\" y=\"0\" z=\"0\"/></arraygeometry>");
  CHECK((g[1] - g[0]).norm() == doctest::Approx(0.126).epsilon(1e-12));
  const ArrayGeometry uma = default_uma16_geometry();
  CHECK((uma[3] - uma[0]).norm() == doctest::Approx(0.126).epsilon(1e-12));
}

TEST_CASE("parse errors") {
  CHECK(test::error_kind_of([] { parse_geometry("<arraygeometry><pos x=\"0\" y=\"0\"/></arraygeometry>"); }) ==
        ErrorKind::validation);
  CHECK(test::error_kind_of([] {
          parse_geometry("<arraygeometry><pos x=\"0\" y=\"0\"/><pos x=\"0\" y=\"0\"/></arraygeometry>");
        }) == ErrorKind::validation);

  try {
    parse_geometry("<arraygeometry>\n<pos x=\"0\" y=\"0\"/>\n<pos x=\"1\"\n</arraygeometry>");
    FAIL("malformed XML accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
  try {
    parse_geometry("<arraygeometry><pos name=\"m0\" x=\"0\" y=\"0\"/><pos name=\"m1\" x=\"abc\" y=\"0\"/></arraygeometry>");
    FAIL("non-numeric attribute accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::schema);
    CHECK(std::string(e.what()).find("m1") != std::string::npos);
  }
  try {
    parse_geometry("<arraygeometry><pos name=\"m0\" x=\"0\" y=\"0\"/><pos name=\"m1\" x=\"1\"/></arraygeometry>");
    FAIL("missing attribute accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::schema);
    CHECK(std::string(e.what()).find("m1") != std::string::npos);
  }
  CHECK(test::error_kind_of([] { parse_geometry("<other/>"); }) == ErrorKind::schema);
}

TEST_CASE("serialize edge cases") {
  const ArrayGeometry unnamed({Point3(0.1, 0.2, 0.0), Point3(-0.1, 0.2, 0.0)});
  const std::string xml = serialize_geometry(unnamed);
  CHECK(xml.find("<arraygeometry>") != std::string::npos);
  CHECK(xml.find(" z=") == std::string::npos);
  const ArrayGeometry back = parse_geometry(xml);
  CHECK(back.mics() == unnamed.mics());

  const ArrayGeometry raised({Point3(0.1, 0.2, 0.03), Point3(-0.1, 0.2, -0.01)}, "a<b");
  const std::string xml2 = serialize_geometry(raised);
  CHECK(xml2.find("z=\"0.03\"") != std::string::npos);
  const ArrayGeometry back2 = parse_geometry(xml2);
  CHECK(back2.mics() == raised.mics());
  CHECK(back2.name() == "a<b");
}

TEST_CASE("camera focal length and field of view") {
  const CameraModel cam(640, 360, 72.0);
  CHECK(cam.focal_px() == doctest::Approx(505.4).epsilon(0.5 / 505.4));
  CHECK(std::abs(cam.horizontal_fov_deg() - 64.7) <= 0.2);
  CHECK(cam.principal().u == 320.0);
  CHECK(cam.principal().v == 180.0);
  CHECK(test::error_kind_of([] { CameraModel(640, 360, 180.0); }) == ErrorKind::argument);
  CHECK(test::error_kind_of([] { CameraModel(640, 360, 0.0); }) == ErrorKind::argument);
}

TEST_CASE("focal length decreases with field of view") {
  double previous = INFINITY;
  for (double fov = 1.0; fov < 180.0; fov += 0.5) {
    const double f = CameraModel(640, 360, fov).focal_px();
    CHECK(f < previous);
    previous = f;
  }
}

TEST_CASE("projection") {
  const CameraModel cam(640, 360, 72.0);
  const Pixel axis = project(cam, Point3(0.0, 0.0, 1.5));
  CHECK(axis.u == 320.0);
  CHECK(axis.v == 180.0);
  // u = 320 + 505.34 * 0.1 / 1.0
  const Pixel p = project(cam, Point3(0.1, 0.0, 1.0));
  CHECK(std::abs(p.u - 370.5) < 0.05);
  CHECK(p.v == 180.0);
  CHECK(test::error_kind_of([&] { project(cam, Point3(0.0, 0.0, -1.0)); }) == ErrorKind::behind_camera);
  CHECK(test::error_kind_of([&] { project(cam, Point3(0.0, 0.0, 0.0)); }) == ErrorKind::behind_camera);
}

TEST_CASE("steering grid") {
  const CameraModel cam(640, 360, 72.0);
  const SteeringGrid grid = build_grid(cam, 64, 36, 1.5);
  CHECK(grid.size() == 2304);
  // Cells (31..32, 17..18) straddle the principal point.
  const Pixel center = project(cam, grid.point(32, 18));
  CHECK(std::abs(center.u - 320.0) <= 5.0);
  CHECK(std::abs(center.v - 180.0) <= 5.0);

  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const Point3& g = grid.point(c, r);
      CHECK(g.z() == 1.5);
      const Pixel px = project(cam, g);
      CHECK(std::abs(px.u - (c + 0.5) * 10.0) <= 0.51);
      CHECK(std::abs(px.v - (r + 0.5) * 10.0) <= 0.51);
      const auto cell = grid.cell_of(px);
      REQUIRE(cell);
      CHECK(cell->col == c);
      CHECK(cell->row == r);
    }
  }
  // Corner cells reach into the frustum corners.
  CHECK(project(cam, grid.point(0, 0)).u < 10.0);
  CHECK(project(cam, grid.point(63, 35)).v > 350.0);

  CHECK(test::error_kind_of([&] { build_grid(cam, 1, 36, 1.5); }) == ErrorKind::argument);
  CHECK(test::error_kind_of([&] { build_grid(cam, 64, 36, 0.0); }) == ErrorKind::argument);
  CHECK_FALSE(grid.cell_of(Pixel{-1.0, 5.0}));
  CHECK_FALSE(grid.cell_of(Pixel{640.0, 5.0}));
}

TEST_CASE("translated geometry") {
  const ArrayGeometry g = default_uma16_geometry().translated(Point3(0.0, 0.05, 0.0));
  CHECK(g[0].y() == doctest::Approx(-0.013));
}

}  // TEST_SUITE
