#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "convbf/io.hpp"
#include "test_util.hpp"

using namespace convbf;

namespace {

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
T field(const std::vector<char>& bytes, size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

void spit(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Canonical 44-byte header plus payload.
std::vector<char> make_wav(std::uint16_t format, std::uint16_t channels, std::uint16_t bits,
                           const std::vector<char>& payload) {
  std::vector<char> b;
  auto put = [&](const void* p, size_t n) { b.insert(b.end(), (const char*)p, (const char*)p + n); };
  auto u32 = [&](std::uint32_t v) { put(&v, 4); };
  auto u16 = [&](std::uint16_t v) { put(&v, 2); };
  put("RIFF", 4);
  u32(static_cast<std::uint32_t>(36 + payload.size()));
  put("WAVEfmt ", 8);
  u32(16);
  u16(format);
  u16(channels);
  u32(16000);
  u32(16000u * channels * bits / 8);
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(bits);
  put("data", 4);
  u32(static_cast<std::uint32_t>(payload.size()));
  put(payload.data(), payload.size());
  return b;
}

}  // namespace

TEST(Wav, Float32RoundTripBitExact) {
  const auto dir = testutil::temp_dir("wav1");
  AudioBuffer buf;
  buf.samples = testutil::random_signal(8, 3000, 1) * 0.2;
  buf.samples = buf.samples.cast<float>().cast<double>();
  write_wav((dir / "a.wav").string(), buf, SampleFormat::kFloat32);
  const AudioBuffer back = read_wav((dir / "a.wav").string());
  EXPECT_EQ(back.sample_rate, 16000.0);
  EXPECT_EQ(back.samples, buf.samples);
}

TEST(Wav, Pcm16WithinOneLsb) {
  const auto dir = testutil::temp_dir("wav2");
  AudioBuffer buf;
  buf.samples = (testutil::random_signal(2, 2000, 2) * 0.3).cwiseMax(-1.0).cwiseMin(1.0);
  write_wav((dir / "p.wav").string(), buf, SampleFormat::kPcm16);
  const AudioBuffer back = read_wav((dir / "p.wav").string());
  EXPECT_LE((back.samples - buf.samples).cwiseAbs().maxCoeff(), 1.0 / 32768.0);
}

TEST(Wav, Pcm16Scale) {
  const auto dir = testutil::temp_dir("wav3");
  std::vector<char> payload(4);
  const std::int16_t values[2] = {-32768, 16384};
  std::memcpy(payload.data(), values, 4);
  spit(dir / "s.wav", make_wav(1, 1, 16, payload));
  const AudioBuffer b = read_wav((dir / "s.wav").string());
  ASSERT_EQ(b.length(), 2);
  EXPECT_EQ(b.samples(0, 0), -1.0);
  EXPECT_EQ(b.samples(0, 1), 0.5);
}

TEST(Wav, ZeroLengthData) {
  const auto dir = testutil::temp_dir("wav4");
  spit(dir / "z.wav", make_wav(3, 2, 32, {}));
  const AudioBuffer b = read_wav((dir / "z.wav").string());
  EXPECT_EQ(b.channels(), 2);
  EXPECT_EQ(b.length(), 0);
}

TEST(Wav, HeaderFieldsParseBack) {
  const auto dir = testutil::temp_dir("wav5");
  for (Index channels : {1, 8}) {
    AudioBuffer buf;
    buf.samples = testutil::random_signal(channels, 100, 3) * 0.1;
    for (auto format : {SampleFormat::kPcm16, SampleFormat::kFloat32}) {
      const auto path = dir / "h.wav";
      write_wav(path.string(), buf, format);
      const auto bytes = slurp(path);
      const std::uint16_t bits = format == SampleFormat::kPcm16 ? 16 : 32;
      const std::uint32_t data_bytes = static_cast<std::uint32_t>(channels * 100 * bits / 8);
      EXPECT_EQ(std::string(bytes.data(), 4), "RIFF");
      EXPECT_EQ(field<std::uint32_t>(bytes, 4), bytes.size() - 8);
      EXPECT_EQ(std::string(bytes.data() + 8, 8), "WAVEfmt ");
      EXPECT_EQ(field<std::uint16_t>(bytes, 20), format == SampleFormat::kPcm16 ? 1 : 3);
      EXPECT_EQ(field<std::uint16_t>(bytes, 22), channels);
      EXPECT_EQ(field<std::uint32_t>(bytes, 24), 16000u);
      EXPECT_EQ(field<std::uint32_t>(bytes, 28), 16000u * channels * bits / 8);
      EXPECT_EQ(field<std::uint16_t>(bytes, 32), channels * bits / 8);
      EXPECT_EQ(field<std::uint16_t>(bytes, 34), bits);
      EXPECT_EQ(std::string(bytes.data() + 36, 4), "data");
      EXPECT_EQ(field<std::uint32_t>(bytes, 40), data_bytes);
      EXPECT_EQ(bytes.size(), 44u + data_bytes);
    }
  }
}

TEST(Wav, MalformedAndUnsupported) {
  const auto dir = testutil::temp_dir("wav6");
  spit(dir / "junk.wav", {'R', 'I', 'F', 'X', 0, 0, 0, 0});
  try {
    read_wav((dir / "junk.wav").string());
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
  }
  auto truncated = make_wav(1, 1, 16, std::vector<char>(10));
  truncated.resize(30);
  spit(dir / "trunc.wav", truncated);
  EXPECT_THROW(read_wav((dir / "trunc.wav").string()), IoError);
  spit(dir / "alaw.wav", make_wav(6, 1, 8, std::vector<char>(4)));
  EXPECT_THROW(read_wav((dir / "alaw.wav").string()), Unsupported);
  EXPECT_THROW(read_wav((dir / "missing.wav").string()), IoError);
  AudioBuffer buf;
  buf.samples = Eigen::MatrixXd::Zero(1, 4);
  EXPECT_THROW(write_wav("/nonexistent_dir/x.wav", buf), IoError);
}

TEST(ResampleCheck, Rates) {
  AudioBuffer buf;
  buf.sample_rate = 16000;
  EXPECT_NO_THROW(resample_check(buf, 16000));
  buf.sample_rate = 48000;
  try {
    resample_check(buf, 16000);
    FAIL();
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("48000"), std::string::npos);
    EXPECT_NE(msg.find("16000"), std::string::npos);
  }
  buf.sample_rate = 0;
  EXPECT_THROW(resample_check(buf, 16000), InvalidArgument);
}
