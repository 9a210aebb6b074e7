#include "convbf/psd.hpp"

#include <array>
#include <atomic>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <vector>

namespace convbf {

namespace detail {

void warn_gain_clamped(double gain) {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true))
    std::cerr << "warning: spectral gain " << gain << " outside [0, 1], clamping\n";
}

}  // namespace detail

namespace {

constexpr std::array<char, 4> kMagic{'G', 'M', 'S', 'K'};

std::uint32_t load_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void store_u32(std::uint32_t v, unsigned char* p) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

}  // namespace

MaskGainProvider::MaskGainProvider(Eigen::MatrixXf gains) : gains_(std::move(gains)) {
  bool clamped = false;
  for (Index i = 0; i < gains_.size(); ++i) {
    float& g = gains_.data()[i];
    if (!(g >= 0.0f && g <= 1.0f)) {
      clamped = true;
      g = std::isnan(g) ? 0.0f : std::clamp(g, 0.0f, 1.0f);
    }
  }
  if (clamped) std::cerr << "warning: gain mask values outside [0, 1] were clamped\n";
}

std::unique_ptr<GainProvider> identity_provider() {
  return std::make_unique<IdentityGainProvider>();
}

Eigen::MatrixXf read_gain_mask(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("gain mask: cannot open " + path);
  unsigned char header[12];
  if (!file.read(reinterpret_cast<char*>(header), sizeof header))
    throw IoError("gain mask: truncated header in " + path);
  if (std::memcmp(header, kMagic.data(), 4) != 0) throw IoError("gain mask: bad magic in " + path);
  const std::uint32_t bins = load_u32(header + 4);
  const std::uint32_t frames = load_u32(header + 8);

  const std::size_t count = static_cast<std::size_t>(bins) * frames;
  std::vector<unsigned char> payload(count * 4);
  if (!file.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size())))
    throw IoError("gain mask: truncated payload in " + path);

  Eigen::MatrixXf gains(bins, frames);
  for (std::uint32_t k = 0; k < bins; ++k) {
    for (std::uint32_t n = 0; n < frames; ++n) {
      const std::size_t offset = (static_cast<std::size_t>(k) * frames + n) * 4;
      gains(k, n) = std::bit_cast<float>(load_u32(payload.data() + offset));
    }
  }
  return gains;
}

void write_gain_mask(const std::string& path, const Eigen::MatrixXf& gains) {
  std::vector<unsigned char> bytes(12 + static_cast<std::size_t>(gains.size()) * 4);
  std::memcpy(bytes.data(), kMagic.data(), 4);
  store_u32(static_cast<std::uint32_t>(gains.rows()), bytes.data() + 4);
  store_u32(static_cast<std::uint32_t>(gains.cols()), bytes.data() + 8);
  std::size_t offset = 12;
  for (Index k = 0; k < gains.rows(); ++k) {
    for (Index n = 0; n < gains.cols(); ++n) {
      store_u32(std::bit_cast<std::uint32_t>(gains(k, n)), bytes.data() + offset);
      offset += 4;
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw IoError("gain mask: cannot write " + path);
}

std::unique_ptr<MaskGainProvider> mask_file_provider(const std::string& path, Index bins,
                                                     Index frames) {
  Eigen::MatrixXf gains = read_gain_mask(path);
  if (gains.rows() != bins || gains.cols() != frames)
    throw InvalidArgument("gain mask: file is " + std::to_string(gains.rows()) + "x" +
                          std::to_string(gains.cols()) + ", utterance needs " +
                          std::to_string(bins) + "x" + std::to_string(frames));
  return std::make_unique<MaskGainProvider>(std::move(gains));
}

}  // namespace convbf
