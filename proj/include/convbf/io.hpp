#ifndef CONVBF_IO_HPP
#define CONVBF_IO_HPP

#include <string>

#include "convbf/types.hpp"

namespace convbf {

struct AudioBuffer {
  Eigen::MatrixXd samples;  // channels x frames
  double sample_rate = 16000.0;

  Index channels() const { return samples.rows(); }
  Index length() const { return samples.cols(); }
};

enum class SampleFormat { kPcm16, kFloat32 };

/// RIFF/WAVE reader for PCM16 and IEEE float32 (plain or extensible).
AudioBuffer read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioBuffer& buffer,
               SampleFormat format = SampleFormat::kFloat32);

/// Throws when the buffer is not at the expected rate; never resamples.
void resample_check(const AudioBuffer& buffer, double expected_rate);

}  // namespace convbf

#endif  // CONVBF_IO_HPP
