#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "afv/fieldpipe.hpp"
#include "test_support.hpp"

using namespace afv;

namespace {

FieldMap db_map(std::vector<double> v, std::size_t cols = 0) {
  const std::size_t c = cols ? cols : v.size();
  return {c, v.size() / c, std::move(v), FieldScale::db};
}

NormalizedField field_of(std::vector<double> v, std::size_t cols = 0) {
  const std::size_t c = cols ? cols : v.size();
  return {c, v.size() / c, std::move(v), 0};
}

}  // namespace

TEST_SUITE("fieldpipe") {

TEST_CASE("default bands") {
  const auto bands = default_bands();
  REQUIRE(bands.size() == 4);
  CHECK(bands[0] == BandConfig{2000.0, 18.0, 0.2});
  CHECK(bands[1] == BandConfig{4000.0, 20.0, 0.2});
  CHECK(bands[2] == BandConfig{6000.0, 23.0, 0.5});
  CHECK(bands[3] == BandConfig{8000.0, 27.0, 0.5});
  CHECK(test::error_kind_of([] { BandConfig{4000.0, -1.0, 0.2}.validate(); }) == ErrorKind::validation);
  CHECK(test::error_kind_of([] { BandConfig{4000.0, 20.0, 0.0}.validate(); }) == ErrorKind::validation);
}

TEST_CASE("floor subtraction") {
  const FieldMap m = floor_subtract(db_map({10.0, 20.0, 25.5, -300.0}), 20.0);
  CHECK(m.values == std::vector<double>{0.0, 0.0, 5.5, 0.0});
}

TEST_CASE("top clip keeps only the upper range") {
  // max 30 dB, clip 0.2: [29.8, 30] -> [0, 1].
  const NormalizedField f = clip_top(db_map({30.0, 29.9, 29.8, 29.0, 0.0}), 0.2);
  CHECK(f.values[0] == 1.0);
  CHECK(f.values[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(f.values[2] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(f.values[3] == 0.0);
  CHECK(f.values[4] == 0.0);
}

TEST_CASE("top clip on a flat or empty map") {
  CHECK(clip_top(db_map({0.0, 0.0, 0.0}), 0.2).all_zero());
  const NormalizedField flat = clip_top(db_map({4.0, 4.0}), 0.5);
  CHECK(flat.values == std::vector<double>{1.0, 1.0});
  CHECK(test::error_kind_of([] { clip_top(db_map({1.0}), 0.0); }) == ErrorKind::argument);
}

TEST_CASE("composite is the cellwise mean") {
  const std::vector<NormalizedField> fs{field_of({1.0, 0.0}), field_of({0.0, 0.0}), field_of({0.0, 0.5}),
                                        field_of({0.0, 0.5})};
  const NormalizedField c = composite(fs);
  CHECK(c.values[0] == 0.25);
  CHECK(c.values[1] == 0.25);
  CHECK(test::error_kind_of([] { composite({}); }) == ErrorKind::argument);
  const std::vector<NormalizedField> bad{field_of({1.0, 0.0}), field_of({1.0, 0.0, 0.0})};
  CHECK(test::error_kind_of([&] { composite(bad); }) == ErrorKind::argument);
}

TEST_CASE("median window warm-up and lower median") {
  MedianWindow w(8);
  CHECK(w.push(field_of({5.0})).values[0] == 5.0);
  CHECK(w.push(field_of({1.0})).values[0] == 1.0);  // lower of {1, 5}
  CHECK(w.push(field_of({3.0})).values[0] == 3.0);
  CHECK(w.push(field_of({9.0})).values[0] == 3.0);  // {1, 3, 5, 9}
  for (int i = 0; i < 8; ++i) w.push(field_of({0.0}));
  CHECK(w.size() == 8);
  CHECK(w.push(field_of({1.0})).values[0] == 0.0);
}

TEST_CASE("median suppresses a single-frame transient") {
  MedianWindow w(8);
  for (int i = 0; i < 8; ++i) w.push(field_of({0.0, 0.2}));
  const NormalizedField out = w.push(field_of({1.0, 0.2}));
  CHECK(out.values[0] == 0.0);
  CHECK(out.values[1] == 0.2);
}

TEST_CASE("median matches sorting a history copy") {
  MedianWindow w(5);
  std::vector<double> history;
  for (int i = 0; i < 40; ++i) {
    const double v = std::fmod(i * 0.37, 1.0);
    history.push_back(v);
    if (history.size() > 5) history.erase(history.begin());
    std::vector<double> sorted = history;
    std::sort(sorted.begin(), sorted.end());
    CHECK(w.push(field_of({v})).values[0] == sorted[(sorted.size() - 1) / 2]);
  }
  CHECK(test::error_kind_of([] { MedianWindow(0); }) == ErrorKind::argument);
  CHECK(test::error_kind_of([&] { w.push(field_of({0.0, 1.0})); }) == ErrorKind::argument);
}

TEST_CASE("bilinear upsampling uses cell centers") {
  const NormalizedField f = field_of({0.0, 1.0, 0.0, 1.0}, 2);  // 2x2: left column 0, right 1
  const ScalarImage img = upsample(f, 20, 10);
  CHECK(img.width == 20);
  CHECK(img.height == 10);
  // Cell centers at x = 5 and 15 (pixel centers 4.5..5.5); edges clamp.
  CHECK(img.at(0, 0) == 0.0);
  CHECK(img.at(4, 3) == 0.0);
  CHECK(img.at(15, 3) == 1.0);
  CHECK(img.at(19, 9) == 1.0);
  CHECK(img.at(9, 0) == doctest::Approx(0.45));
  CHECK(img.at(10, 0) == doctest::Approx(0.55));

  const NormalizedField g = field_of({0.3, 0.3, 0.3, 0.3, 0.3, 0.3}, 3);
  const ScalarImage flat = upsample(g, 640, 360);
  for (double v : flat.values) CHECK(v == doctest::Approx(0.3));

  // Integer-factor upsampling reproduces the cell value at each cell center.
  const NormalizedField h = field_of({0.1, 0.9, 0.4, 0.0, 0.7, 0.2}, 3);
  const ScalarImage big = upsample(h, 30, 20);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      const double left = big.at(int(c * 10 + 4), int(r * 10 + 4));
      const double right = big.at(int(c * 10 + 5), int(r * 10 + 5));
      CHECK(std::abs((left + right) / 2.0 - h.at(c, r)) < 0.1);
    }
  CHECK(test::error_kind_of([&] { upsample(h, 2, 20); }) == ErrorKind::argument);

  // At the grid resolution the image is the field itself.
  const ScalarImage same = upsample(h, 3, 2);
  CHECK(same.values == h.values);
}

}  // TEST_SUITE
