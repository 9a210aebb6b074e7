#ifndef CONVBF_BENCH_HPP
#define CONVBF_BENCH_HPP

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "convbf/mac_counter.hpp"
#include "convbf/pipeline.hpp"

namespace convbf {

/// MACs of one apa_update at Q = M(L-D+2) on random data.
MacTally count_apa_update(Index mics, Index order, Index delay, std::uint64_t seed = 1);

/// MACs of one complete per-bin frame step (PSD estimate, update, output).
/// Fixed beamformers count the w^H y product only.
MacTally count_frame_step(Method method, Index mics, Index order, Index delay,
                          std::uint64_t seed = 1);

struct MeasuredPoint {
  Index q = 0;
  double macs = 0.0;
};

struct CurveRow {
  Index q = 0;
  double apa = 0.0;
  double quadratic = 0.0;     // recursive-inversion convolutional beamformers, c * Q^2
  double fast_inverse = 0.0;  // dense-inverse MVDR, c * Q^2.37
};

/// Analytic reference curves anchored to the measured APA count at the
/// smallest Q, listed next to the measurements.
std::vector<CurveRow> reference_curves(std::span<const MeasuredPoint> measured);

/// Least-squares slope of log(macs) against log(q).
double fit_power_law(std::span<const MeasuredPoint> points);

struct TimingRow {
  Method method = Method::kDelaySum;
  Index mics = 0;
  Index order = 0;
  Index delay = 1;
  Index q = 0;
  std::uint64_t macs = 0;
  double seconds_per_audio_second = 0.0;
};

/// Median beamformer-only processing time per second of audio (single pass,
/// no prior pass) on random M-channel STFT input.
TimingRow time_method(Method method, Index mics, const BandPlan& bands, double audio_seconds,
                      int runs = 5, std::uint64_t seed = 7);

std::vector<TimingRow> wallclock_sweep(Method method, Index mics, std::span<const Index> orders,
                                       double audio_seconds, int runs = 5, Index delay = 1);

/// CSV with header method,M,L,D,Q,macs,seconds_per_audio_second.
void write_timing_csv(std::ostream& out, std::span<const TimingRow> rows);

}  // namespace convbf

#endif  // CONVBF_BENCH_HPP
