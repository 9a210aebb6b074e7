#include "convbf/stft.hpp"

#include <algorithm>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace convbf {

void StftConfig::validate() const {
  if (sample_rate <= 0.0) throw InvalidArgument("stft: sample_rate must be positive");
  if (window_len <= 0 || window_len % 2 != 0)
    throw InvalidArgument("stft: window_len must be positive and even");
  if (hop * 2 != window_len) throw InvalidArgument("stft: hop must be window_len / 2");
  if (fft_len < window_len) throw InvalidArgument("stft: fft_len must be >= window_len");
}

Spectrogram::Spectrogram(Index channels, Index frames, const StftConfig& config,
                         Index length)
    : data_(static_cast<size_t>(channels),
            Eigen::MatrixXcd::Zero(config.bins(), frames)),
      config_(config),
      length_(length >= 0 ? length
                          : (frames > 0 ? (frames - 1) * config.hop + config.window_len
                                        : 0)) {}

Eigen::VectorXcd Spectrogram::frame_vector(Index k, Index n) const {
  Eigen::VectorXcd y(channels());
  for (Index m = 0; m < channels(); ++m) y(m) = channel(m)(k, n);
  return y;
}

Eigen::MatrixXcd Spectrogram::bin_matrix(Index k) const {
  Eigen::MatrixXcd out(channels(), frames());
  for (Index m = 0; m < channels(); ++m) out.row(m) = channel(m).row(k);
  return out;
}

void Spectrogram::set_bin_matrix(Index k, const Eigen::MatrixXcd& values) {
  if (values.rows() != channels() || values.cols() != frames())
    throw InvalidArgument("Spectrogram::set_bin_matrix: dimension mismatch");
  for (Index m = 0; m < channels(); ++m) channel(m).row(k) = values.row(m);
}

void BandPlan::validate() const {
  if (orders.size() != transition_freqs.size() + 1)
    throw InvalidArgument("BandPlan: need one more order than transition frequencies");
  if (!std::is_sorted(transition_freqs.begin(), transition_freqs.end()))
    throw InvalidArgument("BandPlan: transition frequencies must be increasing");
  if (delay < 1) throw InvalidArgument("BandPlan: delay D must be >= 1");
  for (Index order : orders) {
    if (order != 0 && order <= delay)
      throw InvalidArgument("BandPlan: every order L must satisfy L > D or L = 0");
  }
}

BandPlan BandPlan::uniform(Index order, Index delay) {
  BandPlan plan;
  plan.transition_freqs.clear();
  plan.orders = {order};
  plan.delay = delay;
  return plan;
}

Eigen::VectorXd sqrt_hann(Index window_len) {
  if (window_len <= 0 || window_len % 2 != 0)
    throw InvalidArgument("sqrt_hann: window length must be positive and even");
  Eigen::VectorXd w(window_len);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(window_len);
  for (Index i = 0; i < window_len; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(step * static_cast<double>(i));
    w(i) = std::sqrt(std::max(hann, 0.0));
  }
  return w;
}

Spectrogram stft(const Eigen::MatrixXd& signal, const StftConfig& config) {
  config.validate();
  const Index length = signal.cols();
  if (length < config.window_len)
    throw InvalidArgument("stft: signal shorter than one window");
  const Index frames = 1 + (length - config.window_len + config.hop - 1) / config.hop;
  Spectrogram spec(signal.rows(), frames, config, length);

  const Eigen::VectorXd window = sqrt_hann(config.window_len);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buffer(static_cast<size_t>(config.fft_len));
  std::vector<cd> spectrum;

  for (Index m = 0; m < signal.rows(); ++m) {
    Eigen::MatrixXcd& out = spec.channel(m);
    for (Index n = 0; n < frames; ++n) {
      std::fill(buffer.begin(), buffer.end(), 0.0);
      const Index start = n * config.hop;
      const Index count = std::min(config.window_len, length - start);
      for (Index i = 0; i < count; ++i)
        buffer[static_cast<size_t>(i)] = window(i) * signal(m, start + i);
      fft.fwd(spectrum, buffer);
      for (Index k = 0; k < config.bins(); ++k) out(k, n) = spectrum[static_cast<size_t>(k)];
    }
  }
  return spec;
}

Eigen::MatrixXd istft(const Spectrogram& spec, const StftConfig& config) {
  if (!(spec.config() == config))
    throw InvalidArgument("istft: spectrogram was computed with a different config");
  config.validate();
  const Index frames = spec.frames();
  const Index padded = frames > 0 ? (frames - 1) * config.hop + config.window_len : 0;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(spec.channels(), std::max(padded, spec.length()));

  const Eigen::VectorXd window = sqrt_hann(config.window_len);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<cd> spectrum(static_cast<size_t>(config.bins()));
  std::vector<double> buffer;

  for (Index m = 0; m < spec.channels(); ++m) {
    const Eigen::MatrixXcd& in = spec.channel(m);
    for (Index n = 0; n < frames; ++n) {
      for (Index k = 0; k < config.bins(); ++k) spectrum[static_cast<size_t>(k)] = in(k, n);
      fft.inv(buffer, spectrum, config.fft_len);
      const Index start = n * config.hop;
      for (Index i = 0; i < config.window_len; ++i)
        out(m, start + i) += window(i) * buffer[static_cast<size_t>(i)];
    }
  }
  return out.leftCols(spec.length());
}

Index band_order(Index k, const BandPlan& plan, const StftConfig& config) {
  const double freq = config.bin_frequency(k);
  size_t band = 0;
  while (band < plan.transition_freqs.size() && freq >= plan.transition_freqs[band]) ++band;
  return plan.orders[band];
}

}  // namespace convbf
