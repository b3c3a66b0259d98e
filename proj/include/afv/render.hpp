#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "afv/fieldpipe.hpp"

namespace afv {

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

/// Classic piecewise-linear jet: 0 -> dark blue (0, 0, 0.5), 1 -> dark red (0.5, 0, 0).
/// Inputs outside [0, 1] are clamped.
Rgb jet(double v);

/// Interleaved 8-bit RGB image.
class RgbFrame {
 public:
  RgbFrame() = default;
  RgbFrame(int width, int height, std::uint8_t fill = 0);
  RgbFrame(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const std::uint8_t> data() const noexcept { return pixels_; }
  std::span<std::uint8_t> data() noexcept { return pixels_; }

  std::uint8_t& at(int x, int y, int channel) { return pixels_[offset(x, y) + std::size_t(channel)]; }
  std::uint8_t at(int x, int y, int channel) const { return pixels_[offset(x, y) + std::size_t(channel)]; }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  /// Rows [y0, y0 + rows) as a new frame.
  RgbFrame crop_rows(int y0, int rows) const;

  friend bool operator==(const RgbFrame&, const RgbFrame&) = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return (std::size_t(y) * std::size_t(width_) + std::size_t(x)) * 3;
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Luma y = 0.299 r + 0.587 g + 0.114 b, rounded, replicated to all channels.
RgbFrame grayscale(const RgbFrame& frame);

/// out = (1 - alpha) * gray + alpha * 255 * jet(field), rounded to nearest.
RgbFrame overlay(const RgbFrame& gray, const ScalarImage& field, double alpha);

/// Conventional frame on top, acoustic-field frame below.
RgbFrame stack_pair(const RgbFrame& conventional, const RgbFrame& af);

void write_png(const RgbFrame& frame, const std::filesystem::path& path);
RgbFrame read_png(const std::filesystem::path& path);

std::string frame_filename(std::size_t index);

/// Streams frames to `dir` as lossless PNGs named frame_%06d.png and writes
/// manifest.json on finish(). `metadata` is merged into the manifest.
class FrameSequenceWriter {
 public:
  FrameSequenceWriter(std::filesystem::path dir, nlohmann::json metadata);

  void write(const RgbFrame& frame);
  /// Writes the manifest and returns it.
  nlohmann::json finish();

  std::size_t count() const noexcept { return files_.size(); }

 private:
  std::filesystem::path dir_;
  nlohmann::json metadata_;
  std::vector<std::string> files_;
  int width_ = 0;
  int height_ = 0;
};

nlohmann::json write_frame_sequence(std::span<const RgbFrame> frames, const std::filesystem::path& dir,
                                    const nlohmann::json& metadata);

}  // namespace afv
