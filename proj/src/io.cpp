#include "convbf/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

namespace convbf {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t get_u16(const std::vector<unsigned char>& b, size_t at) {
  return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

std::uint32_t get_u32(const std::vector<unsigned char>& b, size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_tag(std::vector<unsigned char>& b, const char* tag) { b.insert(b.end(), tag, tag + 4); }

[[noreturn]] void malformed(const std::string& path, size_t offset, const std::string& what) {
  std::ostringstream msg;
  msg << "wav: " << what << " at byte offset " << offset << " in " << path;
  throw IoError(msg.str());
}

}  // namespace

AudioBuffer read_wav(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("wav: cannot open " + path);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(file)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < 12) malformed(path, 0, "file too short for RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) malformed(path, 0, "missing RIFF tag");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) malformed(path, 8, "missing WAVE tag");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  size_t data_at = 0, data_size = 0;
  bool have_data = false;

  size_t at = 12;
  while (at + 8 <= bytes.size()) {
    const size_t chunk_size = get_u32(bytes, at + 4);
    const size_t body = at + 8;
    if (std::memcmp(bytes.data() + at, "fmt ", 4) == 0) {
      if (chunk_size < 16 || body + chunk_size > bytes.size())
        malformed(path, at, "truncated fmt chunk");
      format = get_u16(bytes, body);
      channels = get_u16(bytes, body + 2);
      rate = get_u32(bytes, body + 4);
      bits = get_u16(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (chunk_size < 40) malformed(path, at, "truncated extensible fmt chunk");
        format = get_u16(bytes, body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + at, "data", 4) == 0) {
      data_at = body;
      data_size = std::min(chunk_size, bytes.size() - body);
      have_data = true;
      break;
    }
    at = body + chunk_size + (chunk_size & 1);
  }
  if (!have_fmt) malformed(path, at, "missing fmt chunk");
  if (!have_data) malformed(path, at, "missing data chunk");
  if (channels == 0) malformed(path, 22, "zero channel count");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw Unsupported("wav: unsupported encoding (format " + std::to_string(format) + ", " +
                      std::to_string(bits) + " bits) in " + path);

  const size_t sample_bytes = bits / 8;
  const size_t frames = data_size / (sample_bytes * channels);
  AudioBuffer buffer;
  buffer.sample_rate = rate;
  buffer.samples.resize(channels, static_cast<Index>(frames));
  for (size_t t = 0; t < frames; ++t) {
    for (size_t c = 0; c < channels; ++c) {
      const size_t offset = data_at + (t * channels + c) * sample_bytes;
      double value;
      if (pcm16) {
        value = static_cast<std::int16_t>(get_u16(bytes, offset)) / 32768.0;
      } else {
        value = std::bit_cast<float>(get_u32(bytes, offset));
      }
      buffer.samples(static_cast<Index>(c), static_cast<Index>(t)) = value;
    }
  }
  return buffer;
}

void write_wav(const std::string& path, const AudioBuffer& buffer, SampleFormat format) {
  const auto channels = static_cast<std::uint16_t>(buffer.channels());
  if (channels == 0) throw InvalidArgument("wav: cannot write a buffer without channels");
  const std::uint16_t bits = format == SampleFormat::kPcm16 ? 16 : 32;
  const std::uint32_t block = channels * (bits / 8u);
  const auto frames = static_cast<std::uint32_t>(buffer.length());
  const std::uint32_t data_size = block * frames;

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == SampleFormat::kPcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, channels);
  const auto rate = static_cast<std::uint32_t>(std::lround(buffer.sample_rate));
  put_u32(out, rate);
  put_u32(out, rate * block);
  put_u16(out, static_cast<std::uint16_t>(block));
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_size);

  for (std::uint32_t t = 0; t < frames; ++t) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      const double value = buffer.samples(c, t);
      if (format == SampleFormat::kPcm16) {
        const double scaled = std::clamp(std::round(value * 32768.0), -32768.0, 32767.0);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
      } else {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
      }
    }
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("wav: cannot open " + path + " for writing");
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("wav: write failed for " + path);
}

void resample_check(const AudioBuffer& buffer, double expected_rate) {
  if (buffer.sample_rate != expected_rate || !(buffer.sample_rate > 0.0)) {
    std::ostringstream msg;
    msg << "sample rate " << buffer.sample_rate << " Hz does not match expected "
        << expected_rate << " Hz (no resampling is performed)";
    throw InvalidArgument(msg.str());
  }
}

}  // namespace convbf
