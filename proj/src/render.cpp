#include "afv/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "afv/error.hpp"

namespace afv {

namespace {

double ramp(double x) { return std::clamp(1.5 - std::abs(x), 0.0, 1.0); }

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

Rgb jet(double v) {
  v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
  return {ramp(4.0 * v - 3.0), ramp(4.0 * v - 2.0), ramp(4.0 * v - 1.0)};
}

RgbFrame::RgbFrame(int width, int height, std::uint8_t fill)
    : RgbFrame(width, height, std::vector<std::uint8_t>(std::size_t(std::max(width, 0)) *
                                                            std::size_t(std::max(height, 0)) * 3,
                                                        fill)) {}

RgbFrame::RgbFrame(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 0 || height < 0 || pixels_.size() != std::size_t(width) * std::size_t(height) * 3) {
    throw Error(ErrorKind::argument, "RGB frame buffer does not match its dimensions");
  }
}

void RgbFrame::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const std::size_t o = offset(x, y);
  pixels_[o] = r;
  pixels_[o + 1] = g;
  pixels_[o + 2] = b;
}

RgbFrame RgbFrame::crop_rows(int y0, int rows) const {
  if (y0 < 0 || rows < 0 || y0 + rows > height_) throw Error(ErrorKind::argument, "row crop out of bounds");
  const auto begin = pixels_.begin() + std::ptrdiff_t(offset(0, y0));
  return RgbFrame(width_, rows,
                  std::vector<std::uint8_t>(begin, begin + std::ptrdiff_t(std::size_t(rows) * width_ * 3)));
}

RgbFrame grayscale(const RgbFrame& frame) {
  RgbFrame out(frame.width(), frame.height());
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      const std::uint8_t luma =
          to_byte(0.299 * frame.at(x, y, 0) + 0.587 * frame.at(x, y, 1) + 0.114 * frame.at(x, y, 2));
      out.set(x, y, luma, luma, luma);
    }
  }
  return out;
}

RgbFrame overlay(const RgbFrame& gray, const ScalarImage& field, double alpha) {
  if (gray.width() != field.width || gray.height() != field.height) {
    throw Error(ErrorKind::argument, "overlay field and frame dimensions differ");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::argument, "overlay alpha must lie in [0, 1]");
  RgbFrame out(gray.width(), gray.height());
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      const Rgb c = jet(field.at(x, y));
      const double comps[3] = {c.r, c.g, c.b};
      for (int ch = 0; ch < 3; ++ch) {
        out.at(x, y, ch) = to_byte((1.0 - alpha) * gray.at(x, y, ch) + alpha * 255.0 * comps[ch]);
      }
    }
  }
  return out;
}

RgbFrame stack_pair(const RgbFrame& conventional, const RgbFrame& af) {
  if (conventional.width() != af.width() || conventional.height() != af.height()) {
    throw Error(ErrorKind::argument, "stacked pair frames must have equal dimensions");
  }
  std::vector<std::uint8_t> pixels(conventional.data().begin(), conventional.data().end());
  pixels.insert(pixels.end(), af.data().begin(), af.data().end());
  return RgbFrame(conventional.width(), conventional.height() * 2, std::move(pixels));
}

std::string frame_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06zu.png", index);
  return buf;
}

FrameSequenceWriter::FrameSequenceWriter(std::filesystem::path dir, nlohmann::json metadata)
    : dir_(std::move(dir)), metadata_(std::move(metadata)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    throw Error(ErrorKind::io, "cannot create frame directory " + dir_.string());
  }
}

void FrameSequenceWriter::write(const RgbFrame& frame) {
  const std::string name = frame_filename(files_.size());
  try {
    write_png(frame, dir_ / name);
  } catch (const Error& e) {
    throw Error(e.kind(), "frame " + std::to_string(files_.size()) + ": " + e.what());
  }
  width_ = frame.width();
  height_ = frame.height();
  files_.push_back(name);
}

nlohmann::json FrameSequenceWriter::finish() {
  nlohmann::json manifest = metadata_;
  manifest["schema"] = 1;
  manifest["frame_count"] = files_.size();
  manifest["frames"] = files_;
  if (!files_.empty()) {
    manifest["frame_width"] = width_;
    manifest["frame_height"] = height_;
  }
  std::ofstream out(dir_ / "manifest.json", std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + (dir_ / "manifest.json").string());
  out << manifest.dump(2) << '\n';
  return manifest;
}

nlohmann::json write_frame_sequence(std::span<const RgbFrame> frames, const std::filesystem::path& dir,
                                    const nlohmann::json& metadata) {
  FrameSequenceWriter writer(dir, metadata);
  for (const auto& f : frames) writer.write(f);
  return writer.finish();
}

}  // namespace afv
