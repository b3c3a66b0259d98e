#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace afv {

/// Channel-major multichannel audio, samples nominally in [-1, 1].
class MultichannelBuffer {
 public:
  MultichannelBuffer() = default;
  /// Throws validation error for ragged channels or a non-positive rate.
  MultichannelBuffer(std::vector<std::vector<double>> channels, double sample_rate);
  /// `channels` x `frames` of silence.
  MultichannelBuffer(std::size_t channels, std::size_t frames, double sample_rate);

  std::size_t channels() const noexcept { return data_.size(); }
  std::size_t frames() const noexcept { return data_.empty() ? 0 : data_.front().size(); }
  double sample_rate() const noexcept { return sample_rate_; }
  double duration_s() const noexcept { return double(frames()) / sample_rate_; }

  std::span<const double> channel(std::size_t index) const { return data_.at(index); }
  std::span<double> channel(std::size_t index) { return data_.at(index); }

  friend bool operator==(const MultichannelBuffer&, const MultichannelBuffer&) = default;

 private:
  std::vector<std::vector<double>> data_;
  double sample_rate_ = 1.0;
};

/// Read-only window of `frames` samples starting at `offset` in every channel.
class AudioChunk {
 public:
  AudioChunk(const MultichannelBuffer& buffer, std::size_t index, std::size_t offset, std::size_t frames);

  std::size_t index() const noexcept { return index_; }
  std::size_t offset() const noexcept { return offset_; }
  std::size_t frames() const noexcept { return frames_; }
  std::size_t channels() const noexcept { return buffer_->channels(); }
  double sample_rate() const noexcept { return buffer_->sample_rate(); }
  std::span<const double> channel(std::size_t m) const {
    return buffer_->channel(m).subspan(offset_, frames_);
  }

 private:
  const MultichannelBuffer* buffer_;
  std::size_t index_;
  std::size_t offset_;
  std::size_t frames_;
};

/// floor(frames / chunk_size) contiguous chunks; the partial tail is dropped.
/// The chunks borrow `buffer`, which must outlive them.
std::vector<AudioChunk> chunk_stream(const MultichannelBuffer& buffer, std::size_t chunk_size);

enum class SampleFormat { pcm16, pcm24, float32 };

SampleFormat parse_sample_format(const std::string& text);

MultichannelBuffer read_wav(const std::string& path);
void write_wav(const MultichannelBuffer& buffer, const std::string& path,
               SampleFormat format = SampleFormat::float32);

/// Two-channel copy: channel 0 from `left`, channel 1 from `right`.
MultichannelBuffer extract_stereo(const MultichannelBuffer& buffer, std::size_t left, std::size_t right);

}  // namespace afv
