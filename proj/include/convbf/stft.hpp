#ifndef CONVBF_STFT_HPP
#define CONVBF_STFT_HPP

#include <vector>

#include "convbf/types.hpp"

namespace convbf {

/// Analysis/synthesis parameters. Hop is always half the window.
struct StftConfig {
  double sample_rate = 16000.0;
  Index window_len = 512;
  Index hop = 256;
  Index fft_len = 512;

  Index bins() const { return fft_len / 2 + 1; }
  double bin_frequency(Index k) const {
    return static_cast<double>(k) * sample_rate / static_cast<double>(fft_len);
  }
  void validate() const;

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

/// Complex STFT of an M-channel signal. channel(m) is a K x N matrix
/// (rows are bins, columns are frames).
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(Index channels, Index frames, const StftConfig& config,
              Index length = -1);

  Index channels() const { return static_cast<Index>(data_.size()); }
  Index bins() const { return config_.bins(); }
  Index frames() const { return data_.empty() ? 0 : data_.front().cols(); }
  /// Number of time-domain samples the spectrogram was computed from.
  Index length() const { return length_; }
  const StftConfig& config() const { return config_; }

  Eigen::MatrixXcd& channel(Index m) { return data_[static_cast<size_t>(m)]; }
  const Eigen::MatrixXcd& channel(Index m) const {
    return data_[static_cast<size_t>(m)];
  }

  /// Microphone vector y(k, n).
  Eigen::VectorXcd frame_vector(Index k, Index n) const;
  /// All frames of bin k as an M x N matrix.
  Eigen::MatrixXcd bin_matrix(Index k) const;
  void set_bin_matrix(Index k, const Eigen::MatrixXcd& values);

 private:
  std::vector<Eigen::MatrixXcd> data_;
  StftConfig config_;
  Index length_ = 0;
};

/// Frequency bands with per-band prediction order L and prediction delay D.
struct BandPlan {
  std::vector<double> transition_freqs{800.0, 2000.0};
  std::vector<Index> orders{12, 8, 6};
  Index delay = 1;

  void validate() const;
  static BandPlan uniform(Index order, Index delay = 1);
};

Eigen::VectorXd sqrt_hann(Index window_len);

/// signal is M x T. Frames start at sample 0; the tail is zero padded so
/// every sample is covered.
Spectrogram stft(const Eigen::MatrixXd& signal, const StftConfig& config);

/// Weighted overlap-add synthesis; returns M x spec.length() samples.
Eigen::MatrixXd istft(const Spectrogram& spec, const StftConfig& config);

Index band_order(Index k, const BandPlan& plan, const StftConfig& config);

}  // namespace convbf

#endif  // CONVBF_STFT_HPP
