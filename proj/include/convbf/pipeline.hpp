#ifndef CONVBF_PIPELINE_HPP
#define CONVBF_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "convbf/beamform.hpp"
#include "convbf/conv_apa.hpp"
#include "convbf/io.hpp"

namespace convbf {

enum class Method { kRefMic, kDelaySum, kSdMvdr, kMpdrApa, kConvMpdrApa, kConvSdMvdr };

Method parse_method(const std::string& name);
std::string method_name(Method method);
bool is_adaptive(Method method);

inline constexpr double kTargetLevelDbfs = -20.0;

struct ProcessOptions {
  ApaParams params;
  bool prior_pass = true;
  unsigned threads = 1;
  const GainProvider* gain = nullptr;
  double loading = kDefaultDiagonalLoading;
  double c = kSpeedOfSound;
  /// Adaptive methods scale the input so the reference microphone sits at
  /// -20 dBFS RMS, and undo the scaling at the output.
  bool normalize = true;
};

/// Time-domain RMS of the reference channel estimated from its STFT.
double reference_rms(const Spectrogram& spec, Index reference_mic = 0);

/// Convolutional MPDR-APA over a whole utterance, bins in parallel.
Spectrogram run_conv_apa(const Spectrogram& spec, const SteeringVector& steering,
                         const ProcessOptions& options);

/// Superdirective beamformer with adaptive reverb canceller. Bins whose band
/// order is 0 get the fixed beamformer output.
Spectrogram run_conv_sdmvdr(const Spectrogram& spec, const FixedWeights& w_sd,
                            const ProcessOptions& options);

/// Any method on an STFT-domain input; returns a single-channel spectrogram.
Spectrogram beamform(const Spectrogram& spec, const ArrayGeometry& geom,
                     const SteeringVector& steering, Method method, const ProcessOptions& options);

struct RunConfig {
  Method method = Method::kConvMpdrApa;
  ArrayGeometry geometry;
  std::optional<double> doa_deg;  // empty: localize
  ProcessOptions options;
  StftConfig stft;
};

struct EnhanceResult {
  AudioBuffer output;
  double doa_deg = 0.0;
  Index frames = 0;
  std::vector<Index> filter_lengths;  // Q per band
  double seconds = 0.0;
};

/// Number of STFT frames enhance() produces for an input of `samples`
/// samples; gain masks must have this many columns.
Index enhance_frames(Index samples, const StftConfig& config);

EnhanceResult enhance(const AudioBuffer& input, const RunConfig& config);

}  // namespace convbf

#endif  // CONVBF_PIPELINE_HPP
