#include "convbf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "convbf/scene.hpp"

namespace convbf {

namespace {

void check_pair(const Eigen::VectorXd& ref, const Eigen::VectorXd& est, const MetricConfig& config) {
  if (ref.size() != est.size())
    throw InvalidArgument("metrics: reference and estimate lengths differ (" +
                          std::to_string(ref.size()) + " vs " + std::to_string(est.size()) + ")");
  if (ref.size() < config.frame_len) throw InvalidArgument("metrics: signal shorter than one frame");
  if (!(ref.squaredNorm() > 0.0)) throw InvalidArgument("metrics: reference signal is zero");
}

Eigen::VectorXd hann(Index len) {
  Eigen::VectorXd w(len);
  for (Index i = 0; i < len; ++i)
    w(i) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
  return w;
}

Index frame_count(Index length, const MetricConfig& config) {
  return 1 + (length - config.frame_len) / config.hop;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// bands x bins triangular filterbank on the mel scale from 0 Hz to Nyquist.
Eigen::MatrixXd mel_filterbank(const MetricConfig& config) {
  const Index bins = config.frame_len / 2 + 1;
  const Index bands = config.mel_bands;
  Eigen::VectorXd edges(bands + 2);
  const double top = hz_to_mel(config.sample_rate / 2.0);
  for (Index i = 0; i < bands + 2; ++i)
    edges(i) = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(bands + 1));
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(bands, bins);
  for (Index j = 0; j < bands; ++j) {
    for (Index k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * config.sample_rate / static_cast<double>(config.frame_len);
      if (f > edges(j) && f < edges(j + 2)) {
        fb(j, k) = f <= edges(j + 1) ? (f - edges(j)) / (edges(j + 1) - edges(j))
                                     : (edges(j + 2) - f) / (edges(j + 2) - edges(j + 1));
      }
    }
  }
  return fb;
}

Eigen::VectorXd magnitude_spectrum(const Eigen::VectorXd& frame, Eigen::FFT<double>& fft) {
  std::vector<double> in(frame.data(), frame.data() + frame.size());
  std::vector<cd> out;
  fft.fwd(out, in);
  Eigen::VectorXd mag(frame.size() / 2 + 1);
  for (Index k = 0; k < mag.size(); ++k) mag(k) = std::abs(out[static_cast<size_t>(k)]);
  return mag;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace

std::vector<double> fw_seg_snr_trace(const Eigen::VectorXd& ref, const Eigen::VectorXd& est,
                                     const MetricConfig& config) {
  check_pair(ref, est, config);
  const Eigen::MatrixXd fb = mel_filterbank(config);
  const Eigen::VectorXd window = hann(config.frame_len);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);

  std::vector<double> trace;
  for (Index n = 0; n < frame_count(ref.size(), config); ++n) {
    const Index start = n * config.hop;
    const Eigen::VectorXd clean =
        fb * magnitude_spectrum(ref.segment(start, config.frame_len).cwiseProduct(window), fft);
    const Eigen::VectorXd processed =
        fb * magnitude_spectrum(est.segment(start, config.frame_len).cwiseProduct(window), fft);
    double weighted = 0.0, weight_sum = 0.0;
    for (Index j = 0; j < clean.size(); ++j) {
      const double diff = clean(j) - processed(j);
      double snr = diff == 0.0 ? config.snr_ceiling_db
                               : power_to_db(clean(j) * clean(j) / (diff * diff));
      if (std::isnan(snr)) snr = config.snr_floor_db;
      snr = std::clamp(snr, config.snr_floor_db, config.snr_ceiling_db);
      const double w = std::pow(clean(j), config.weight_exponent);
      weighted += w * snr;
      weight_sum += w;
    }
    if (weight_sum <= 0.0) continue;  // silent reference segment
    trace.push_back(std::clamp(weighted / weight_sum, config.snr_floor_db, config.snr_ceiling_db));
  }
  return trace;
}

double fw_seg_snr(const Eigen::VectorXd& ref, const Eigen::VectorXd& est, const MetricConfig& config) {
  return mean(fw_seg_snr_trace(ref, est, config));
}

bool lpc_coefficients(const Eigen::VectorXd& frame, Index order, Eigen::VectorXd& a) {
  Eigen::VectorXd r(order + 1);
  for (Index lag = 0; lag <= order; ++lag)
    r(lag) = frame.head(frame.size() - lag).dot(frame.tail(frame.size() - lag));
  if (!(r(0) > 0.0)) return false;

  a = Eigen::VectorXd::Zero(order + 1);
  a(0) = 1.0;
  double error = r(0);
  for (Index i = 1; i <= order; ++i) {
    double acc = r(i);
    for (Index j = 1; j < i; ++j) acc += a(j) * r(i - j);
    const double reflection = -acc / error;
    if (!(std::abs(reflection) < 1.0)) return false;
    const Eigen::VectorXd prev = a;
    for (Index j = 1; j < i; ++j) a(j) = prev(j) + reflection * prev(i - j);
    a(i) = reflection;
    error *= 1.0 - reflection * reflection;
    if (!(error > 0.0)) return false;
  }
  return true;
}

Eigen::VectorXd lpc_to_cepstrum(const Eigen::VectorXd& a, Index count) {
  const Index order = a.size() - 1;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(count + 1);
  for (Index n = 1; n <= count; ++n) {
    double acc = n <= order ? -a(n) : 0.0;
    for (Index k = std::max<Index>(1, n - order); k < n; ++k)
      acc -= (static_cast<double>(k) / static_cast<double>(n)) * c(k) * a(n - k);
    c(n) = acc;
  }
  return c.tail(count);
}

std::vector<double> cepstral_distance_trace(const Eigen::VectorXd& ref, const Eigen::VectorXd& est,
                                            const MetricConfig& config) {
  check_pair(ref, est, config);
  const Eigen::VectorXd window = hann(config.frame_len);
  const Index frames = frame_count(ref.size(), config);

  double loudest = 0.0;
  for (Index n = 0; n < frames; ++n)
    loudest = std::max(loudest, ref.segment(n * config.hop, config.frame_len).squaredNorm());
  const double threshold = loudest * db_to_power(config.active_frame_db);

  const double scale = 10.0 / std::numbers::ln10;
  std::vector<double> trace;
  Eigen::VectorXd a_ref, a_est;
  for (Index n = 0; n < frames; ++n) {
    const Index start = n * config.hop;
    const auto ref_frame = ref.segment(start, config.frame_len);
    if (ref_frame.squaredNorm() <= threshold || ref_frame.squaredNorm() == 0.0) continue;
    if (!lpc_coefficients(ref_frame.cwiseProduct(window), config.lpc_order, a_ref)) continue;
    if (!lpc_coefficients(est.segment(start, config.frame_len).cwiseProduct(window),
                          config.lpc_order, a_est))
      continue;
    const Eigen::VectorXd diff =
        lpc_to_cepstrum(a_ref, config.lpc_order) - lpc_to_cepstrum(a_est, config.lpc_order);
    trace.push_back(std::clamp(scale * std::sqrt(2.0 * diff.squaredNorm()), 0.0, config.cd_ceiling_db));
  }
  return trace;
}

double cepstral_distance(const Eigen::VectorXd& ref, const Eigen::VectorXd& est,
                         const MetricConfig& config) {
  return mean(cepstral_distance_trace(ref, est, config));
}

MetricReport evaluate(const Eigen::VectorXd& ref, const Eigen::VectorXd& est,
                      const MetricConfig& config) {
  MetricReport report;
  report.fwsnr_trace = fw_seg_snr_trace(ref, est, config);
  report.cd_trace = cepstral_distance_trace(ref, est, config);
  report.fwsnr = mean(report.fwsnr_trace);
  report.cd = mean(report.cd_trace);

  StftConfig stft_config;
  stft_config.sample_rate = config.sample_rate;
  stft_config.window_len = config.frame_len;
  stft_config.hop = config.hop;
  stft_config.fft_len = config.frame_len;
  report.srr = projection_srr(stft(ref.transpose(), stft_config), stft(est.transpose(), stft_config));
  return report;
}

std::string format_report(const MetricReport& report) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed << "cd=" << report.cd << "\nfwsnr=" << report.fwsnr << "\nsrr=" << report.srr
      << '\n';
  return out.str();
}

void write_trace_csv(const std::string& path, const MetricReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("metrics: cannot write " + path);
  out << "frame,fwsnr,cd\n";
  const size_t rows = std::max(report.fwsnr_trace.size(), report.cd_trace.size());
  for (size_t i = 0; i < rows; ++i) {
    out << i << ',';
    if (i < report.fwsnr_trace.size()) out << report.fwsnr_trace[i];
    out << ',';
    if (i < report.cd_trace.size()) out << report.cd_trace[i];
    out << '\n';
  }
}

}  // namespace convbf
