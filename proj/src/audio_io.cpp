#include "afv/audio_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "afv/error.hpp"

namespace afv {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

// KSDATAFORMAT_SUBTYPE_* GUID tail shared by PCM and IEEE float.
constexpr std::array<std::uint8_t, 14> kGuidTail = {0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80,
                                                    0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71};

std::uint32_t read_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::uint16_t read_u16(const std::uint8_t* p) { return std::uint16_t(p[0] | p[1] << 8); }

class ByteWriter {
 public:
  void u16(std::uint16_t v) { bytes(v, 2); }
  void u32(std::uint32_t v) { bytes(v, 4); }
  void tag(const char* t) { out_.insert(out_.end(), t, t + 4); }
  void bytes(std::uint32_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(std::uint8_t(v >> (8 * i)));
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

int bits_of(SampleFormat format) {
  switch (format) {
    case SampleFormat::pcm16: return 16;
    case SampleFormat::pcm24: return 24;
    case SampleFormat::float32: return 32;
  }
  return 32;
}

}  // namespace

MultichannelBuffer::MultichannelBuffer(std::vector<std::vector<double>> channels, double sample_rate)
    : data_(std::move(channels)), sample_rate_(sample_rate) {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw Error(ErrorKind::validation, "sample rate must be positive");
  }
  for (const auto& ch : data_) {
    if (ch.size() != data_.front().size()) {
      throw Error(ErrorKind::validation, "all channels must have the same length");
    }
  }
}

MultichannelBuffer::MultichannelBuffer(std::size_t channels, std::size_t frames, double sample_rate)
    : MultichannelBuffer(std::vector<std::vector<double>>(channels, std::vector<double>(frames, 0.0)),
                         sample_rate) {}

AudioChunk::AudioChunk(const MultichannelBuffer& buffer, std::size_t index, std::size_t offset,
                       std::size_t frames)
    : buffer_(&buffer), index_(index), offset_(offset), frames_(frames) {
  if (offset + frames > buffer.frames()) {
    throw Error(ErrorKind::argument, "audio chunk exceeds buffer bounds");
  }
}

std::vector<AudioChunk> chunk_stream(const MultichannelBuffer& buffer, std::size_t chunk_size) {
  if (chunk_size == 0) throw Error(ErrorKind::argument, "chunk size must be positive");
  std::vector<AudioChunk> chunks;
  const std::size_t count = buffer.frames() / chunk_size;
  chunks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) chunks.emplace_back(buffer, i, i * chunk_size, chunk_size);
  return chunks;
}

SampleFormat parse_sample_format(const std::string& text) {
  if (text == "pcm16" || text == "16") return SampleFormat::pcm16;
  if (text == "pcm24" || text == "24") return SampleFormat::pcm24;
  if (text == "float32" || text == "float" || text == "32") return SampleFormat::float32;
  throw Error(ErrorKind::argument, "unknown sample format '" + text + "' (pcm16, pcm24, float32)");
}

MultichannelBuffer read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorKind::format, path + ": not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* header = bytes.data() + pos;
    const std::uint32_t size = read_u32(header + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(header, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) throw Error(ErrorKind::io, path + ": truncated fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      block_align = read_u16(f + 12);
      bits = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw Error(ErrorKind::format, path + ": short WAVE_FORMAT_EXTENSIBLE header");
        format = read_u16(f + 24);
        if (std::memcmp(f + 26, kGuidTail.data(), kGuidTail.size()) != 0) {
          throw Error(ErrorKind::format, path + ": unsupported extensible subformat");
        }
      }
      have_fmt = true;
    } else if (std::memcmp(header, "data", 4) == 0) {
      if (body + size > bytes.size()) throw Error(ErrorKind::io, path + ": truncated data chunk");
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw Error(ErrorKind::format, path + ": missing fmt chunk");
  if (!data) throw Error(ErrorKind::io, path + ": missing data chunk");

  const bool is_pcm = format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
  const bool is_float = format == kFormatFloat && bits == 32;
  if (!is_pcm && !is_float) {
    throw Error(ErrorKind::format, path + ": unsupported codec (format " + std::to_string(format) + ", " +
                                       std::to_string(bits) + " bits)");
  }
  if (channels == 0 || rate == 0) throw Error(ErrorKind::format, path + ": invalid channel count or rate");
  const std::size_t bytes_per_sample = bits / 8;
  if (block_align != channels * bytes_per_sample) throw Error(ErrorKind::format, path + ": inconsistent block align");
  if (data_size % block_align != 0) throw Error(ErrorKind::io, path + ": truncated sample frame");

  const std::size_t frames = data_size / block_align;
  std::vector<std::vector<double>> samples(channels, std::vector<double>(frames));
  const double scale = is_pcm ? std::ldexp(1.0, -(bits - 1)) : 1.0;
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t m = 0; m < channels; ++m) {
      const std::uint8_t* s = data + n * block_align + m * bytes_per_sample;
      double value = 0.0;
      if (is_float) {
        value = std::bit_cast<float>(read_u32(s));
      } else if (bits == 16) {
        value = std::int16_t(read_u16(s)) * scale;
      } else if (bits == 24) {
        std::int32_t v = std::int32_t(std::uint32_t(s[0]) << 8 | std::uint32_t(s[1]) << 16 |
                                      std::uint32_t(s[2]) << 24) >> 8;
        value = v * scale;
      } else {
        value = std::int32_t(read_u32(s)) * scale;
      }
      samples[m][n] = value;
    }
  }
  return MultichannelBuffer(std::move(samples), double(rate));
}

void write_wav(const MultichannelBuffer& buffer, const std::string& path, SampleFormat format) {
  if (buffer.channels() == 0) throw Error(ErrorKind::argument, "cannot write a WAV file with zero channels");
  const double rate = buffer.sample_rate();
  if (rate != std::floor(rate) || rate > 4294967295.0) {
    throw Error(ErrorKind::argument, "WAV sample rate must be an integer");
  }
  const int bits = bits_of(format);
  const std::uint16_t channels = static_cast<std::uint16_t>(buffer.channels());
  const std::uint16_t block_align = static_cast<std::uint16_t>(channels * bits / 8);
  const std::uint64_t data_size = std::uint64_t(buffer.frames()) * block_align;
  if (data_size > 0xFFFFFFFFull - 80) throw Error(ErrorKind::argument, "audio too long for a WAV file");
  const bool extensible = channels > 2 || bits > 16;
  const std::uint16_t tag = format == SampleFormat::float32 ? kFormatFloat : kFormatPcm;

  ByteWriter w;
  w.tag("RIFF");
  w.u32(std::uint32_t((extensible ? 60 : 36) + data_size));
  w.tag("WAVE");
  w.tag("fmt ");
  w.u32(extensible ? 40 : 16);
  w.u16(extensible ? kFormatExtensible : tag);
  w.u16(channels);
  w.u32(std::uint32_t(rate));
  w.u32(std::uint32_t(rate) * block_align);
  w.u16(block_align);
  w.u16(std::uint16_t(bits));
  if (extensible) {
    w.u16(22);
    w.u16(std::uint16_t(bits));
    w.u32(0);  // channel mask: unspecified speaker layout
    w.u16(tag);
    w.data().insert(w.data().end(), kGuidTail.begin(), kGuidTail.end());
  }
  w.tag("data");
  w.u32(std::uint32_t(data_size));

  const double full_scale = std::ldexp(1.0, bits - 1);
  for (std::size_t n = 0; n < buffer.frames(); ++n) {
    for (std::size_t m = 0; m < channels; ++m) {
      const double x = buffer.channel(m)[n];
      if (format == SampleFormat::float32) {
        w.u32(std::bit_cast<std::uint32_t>(static_cast<float>(x)));
      } else {
        const double q = std::clamp(std::round(x * full_scale), -full_scale, full_scale - 1.0);
        w.bytes(static_cast<std::uint32_t>(static_cast<std::int32_t>(q)), bits / 8);
      }
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(w.data().data()), std::streamsize(w.data().size()));
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

MultichannelBuffer extract_stereo(const MultichannelBuffer& buffer, std::size_t left, std::size_t right) {
  if (left >= buffer.channels() || right >= buffer.channels()) {
    throw Error(ErrorKind::argument, "stereo channel index out of range (buffer has " +
                                         std::to_string(buffer.channels()) + " channels)");
  }
  if (left == right) throw Error(ErrorKind::argument, "stereo channels must be distinct");
  std::vector<std::vector<double>> out;
  for (std::size_t m : {left, right}) {
    auto ch = buffer.channel(m);
    out.emplace_back(ch.begin(), ch.end());
  }
  return MultichannelBuffer(std::move(out), buffer.sample_rate());
}

}  // namespace afv
