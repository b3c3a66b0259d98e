#include <cmath>
#include <fstream>
#include <random>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "afv/render.hpp"
#include "test_support.hpp"

using namespace afv;

namespace {

RgbFrame random_frame(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RgbFrame f(w, h);
  for (auto& b : f.data()) b = std::uint8_t(rng() & 0xFF);
  return f;
}

}  // namespace

TEST_SUITE("render") {

TEST_CASE("jet control points") {
  const Rgb lo = jet(0.0);
  CHECK(lo.r == 0.0);
  CHECK(lo.g == 0.0);
  CHECK(lo.b == 0.5);
  const Rgb hi = jet(1.0);
  CHECK(hi.r == 0.5);
  CHECK(hi.g == 0.0);
  CHECK(hi.b == 0.0);
  const Rgb mid = jet(0.5);
  CHECK(mid.r == 0.5);
  CHECK(mid.g == 1.0);
  CHECK(mid.b == 0.5);
  const Rgb cyan = jet(0.375);
  CHECK(cyan.r == 0.0);
  CHECK(cyan.g == 1.0);
  CHECK(cyan.b == 1.0);
  const Rgb under = jet(-3.0);
  CHECK(under.b == 0.5);
  const Rgb over = jet(7.0);
  CHECK(over.r == 0.5);
}

TEST_CASE("grayscale luma") {
  RgbFrame f(3, 1);
  f.set(0, 0, 255, 0, 0);
  f.set(1, 0, 0, 255, 0);
  f.set(2, 0, 10, 20, 30);
  const RgbFrame g = grayscale(f);
  CHECK(int(g.at(0, 0, 0)) == 76);   // 76.245
  CHECK(int(g.at(1, 0, 1)) == 150);  // 149.685
  CHECK(int(g.at(2, 0, 2)) == 18);   // 2.99 + 11.74 + 3.42
  for (int ch = 0; ch < 3; ++ch) CHECK(g.at(0, 0, ch) == g.at(0, 0, 0));
}

TEST_CASE("overlay blend") {
  const RgbFrame gray(2, 1, 128);
  const ScalarImage field{2, 1, {0.0, 1.0}};
  const RgbFrame out = overlay(gray, field, 0.5);
  // 0.5 * 128 + 0.5 * 255 * (0, 0, 0.5) = (64, 64, 127.75)
  CHECK(int(out.at(0, 0, 0)) == 64);
  CHECK(int(out.at(0, 0, 1)) == 64);
  CHECK(int(out.at(0, 0, 2)) == 128);
  CHECK(int(out.at(1, 0, 0)) == 128);
  CHECK(int(out.at(1, 0, 2)) == 64);

  CHECK(overlay(gray, field, 0.0) == gray);
  const RgbFrame full = overlay(gray, field, 1.0);
  CHECK(int(full.at(0, 0, 2)) == 128);
  CHECK(int(full.at(1, 0, 0)) == 128);
  CHECK(test::error_kind_of([&] { overlay(gray, field, 1.5); }) == ErrorKind::argument);
  CHECK(test::error_kind_of([&] { overlay(gray, ScalarImage{3, 1, {0, 0, 0}}, 0.5); }) == ErrorKind::argument);
}

TEST_CASE("stacked pair layout") {
  const RgbFrame top = random_frame(640, 360, 1);
  const RgbFrame bottom = random_frame(640, 360, 2);
  const RgbFrame s = stack_pair(top, bottom);
  CHECK(s.width() == 640);
  CHECK(s.height() == 720);
  CHECK(s.crop_rows(0, 360) == top);
  CHECK(s.crop_rows(360, 360) == bottom);
  CHECK(s.at(17, 400, 1) == bottom.at(17, 40, 1));
  CHECK(test::error_kind_of([&] { stack_pair(top, RgbFrame(640, 300)); }) == ErrorKind::argument);
  CHECK(test::error_kind_of([&] { s.crop_rows(700, 30); }) == ErrorKind::argument);
}

TEST_CASE("png round trip is lossless") {
  const auto dir = test::scratch_dir("render_png");
  const RgbFrame f = random_frame(37, 23, 3);
  write_png(f, dir / "x.png");
  CHECK(read_png(dir / "x.png") == f);

  {
    std::ofstream bad(dir / "bad.png");
    bad << "not a png";
  }
  CHECK(test::error_kind_of([&] { read_png(dir / "bad.png"); }) == ErrorKind::format);
  CHECK(test::error_kind_of([&] { read_png(dir / "none.png"); }) == ErrorKind::io);
}

TEST_CASE("frame sequence writer") {
  const auto dir = test::scratch_dir("render_seq");
  CHECK(frame_filename(0) == "frame_000000.png");
  CHECK(frame_filename(123456) == "frame_123456.png");

  std::vector<RgbFrame> frames{random_frame(8, 4, 1), random_frame(8, 4, 2), random_frame(8, 4, 3)};
  const nlohmann::json meta{{"fps", 21.533203125}, {"stacked", false}};
  const nlohmann::json manifest = write_frame_sequence(frames, dir / "seq", meta);
  CHECK(manifest["frame_count"] == 3);
  CHECK(manifest["schema"] == 1);
  CHECK(manifest["frames"][2] == "frame_000002.png");
  CHECK(manifest["fps"] == 21.533203125);
  CHECK(manifest["frame_width"] == 8);

  std::ifstream in(dir / "seq" / "manifest.json");
  CHECK(nlohmann::json::parse(in) == manifest);
  for (std::size_t i = 0; i < frames.size(); ++i) CHECK(read_png(dir / "seq" / frame_filename(i)) == frames[i]);
}

}  // TEST_SUITE
