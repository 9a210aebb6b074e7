#ifndef CONVBF_METRICS_HPP
#define CONVBF_METRICS_HPP

#include <string>
#include <vector>

#include "convbf/stft.hpp"

namespace convbf {

struct MetricConfig {
  double sample_rate = 16000.0;
  Index frame_len = 512;  // 32 ms
  Index hop = 256;
  Index mel_bands = 23;
  double weight_exponent = 0.2;
  double snr_floor_db = -10.0;
  double snr_ceiling_db = 35.0;
  Index lpc_order = 16;
  double cd_ceiling_db = 10.0;
  double active_frame_db = -40.0;  // frames this far below the loudest are skipped
};

struct MetricReport {
  double cd = 0.0;
  double fwsnr = 0.0;
  double srr = 0.0;
  std::vector<double> cd_trace;
  std::vector<double> fwsnr_trace;
};

/// Frequency-weighted segmental SNR on mel band magnitudes.
std::vector<double> fw_seg_snr_trace(const Eigen::VectorXd& ref, const Eigen::VectorXd& est,
                                     const MetricConfig& config = {});
double fw_seg_snr(const Eigen::VectorXd& ref, const Eigen::VectorXd& est,
                  const MetricConfig& config = {});

/// LPC-cepstrum distance in dB, excluding c0.
std::vector<double> cepstral_distance_trace(const Eigen::VectorXd& ref, const Eigen::VectorXd& est,
                                            const MetricConfig& config = {});
double cepstral_distance(const Eigen::VectorXd& ref, const Eigen::VectorXd& est,
                         const MetricConfig& config = {});

/// Autocorrelation-method LPC, A(z) = 1 + sum a_i z^-i. Returns false when
/// the frame has no energy or the recursion becomes unstable.
bool lpc_coefficients(const Eigen::VectorXd& frame, Index order, Eigen::VectorXd& a);
/// Cepstrum c_1..c_n of the all-pole model 1 / A(z).
Eigen::VectorXd lpc_to_cepstrum(const Eigen::VectorXd& a, Index count);

MetricReport evaluate(const Eigen::VectorXd& ref, const Eigen::VectorXd& est,
                      const MetricConfig& config = {});

/// `key=value` lines.
std::string format_report(const MetricReport& report);
/// CSV with columns frame,fwsnr,cd (missing values left empty).
void write_trace_csv(const std::string& path, const MetricReport& report);

}  // namespace convbf

#endif  // CONVBF_METRICS_HPP
