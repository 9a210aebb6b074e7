#include "convbf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "convbf/conv_sdmvdr.hpp"

namespace convbf {

namespace {

Eigen::VectorXcd random_vector(Index size, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXcd v(size);
  for (Index i = 0; i < size; ++i) v(i) = cd(normal(rng), normal(rng));
  return v;
}

Eigen::VectorXcd unit_modulus(Index size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Eigen::VectorXcd a(size);
  for (Index i = 0; i < size; ++i) a(i) = std::polar(1.0, phase(rng));
  a(0) = 1.0;
  return a;
}

// Fills the history with random frames so every product touches real data.
template <typename State>
void prime_history(State& state, Index mics, std::mt19937_64& rng) {
  for (Index l = 0; l < state.order; ++l) state.history.push(random_vector(mics, rng));
}

}  // namespace

MacTally count_apa_update(Index mics, Index order, Index delay, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::VectorXcd a = unit_modulus(mics, rng);
  ApaState<double> state = init_state(a, order, delay);
  prime_history(state, mics, rng);
  const Observation<double> obs = stack_observation(state, random_vector(mics, rng), a);
  MacCounter counter;
  apa_update(state, obs, 1.0, ApaParams{}, &counter);
  return counter.total();
}

MacTally count_frame_step(Method method, Index mics, Index order, Index delay,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::VectorXcd a = unit_modulus(mics, rng);
  const Eigen::VectorXcd y = random_vector(mics, rng);
  MacCounter counter;
  ApaParams params;
  switch (method) {
    case Method::kRefMic:
      break;
    case Method::kDelaySum:
    case Method::kSdMvdr:
      counter.complex_mac(static_cast<std::uint64_t>(mics));
      break;
    case Method::kMpdrApa:
    case Method::kConvMpdrApa: {
      ApaState<double> state =
          init_state(a, method == Method::kMpdrApa ? 0 : order, delay);
      prime_history(state, mics, rng);
      process_bin(state, y, a, params, 1.0, &counter);
      break;
    }
    case Method::kConvSdMvdr: {
      RcState<double> state = init_rc_state(a / a.squaredNorm(), order, delay);
      prime_history(state, mics, rng);
      rc_process_bin(state, y, params, 1.0, &counter);
      break;
    }
  }
  return counter.total();
}

std::vector<CurveRow> reference_curves(std::span<const MeasuredPoint> measured) {
  std::vector<CurveRow> rows;
  if (measured.empty()) return rows;
  const auto anchor = *std::min_element(measured.begin(), measured.end(),
                                        [](const auto& x, const auto& y) { return x.q < y.q; });
  if (anchor.q <= 0) throw InvalidArgument("reference_curves: Q must be positive");
  const double q0 = static_cast<double>(anchor.q);
  const double c2 = anchor.macs / (q0 * q0);
  const double c237 = anchor.macs / std::pow(q0, 2.37);
  for (const MeasuredPoint& p : measured) {
    const double q = static_cast<double>(p.q);
    rows.push_back({p.q, p.macs, c2 * q * q, c237 * std::pow(q, 2.37)});
  }
  return rows;
}

double fit_power_law(std::span<const MeasuredPoint> points) {
  if (points.size() < 2) throw InvalidArgument("fit_power_law: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const MeasuredPoint& p : points) {
    const double x = std::log(static_cast<double>(p.q));
    const double y = std::log(p.macs);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(points.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

TimingRow time_method(Method method, Index mics, const BandPlan& bands, double audio_seconds,
                      int runs, std::uint64_t seed) {
  StftConfig config;
  const auto frames = static_cast<Index>(std::ceil(audio_seconds * config.sample_rate /
                                                   static_cast<double>(config.hop)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Spectrogram spec(mics, frames, config);
  for (Index m = 0; m < mics; ++m)
    for (Index i = 0; i < spec.channel(m).size(); ++i)
      spec.channel(m).data()[i] = cd(normal(rng), normal(rng));

  const ArrayGeometry geom = circular_array(mics, 0.1);
  const SteeringVector steering = plane_wave_steering(geom, 0.5, 0.0, config);
  ProcessOptions options;
  options.params.bands = bands;
  options.prior_pass = false;

  std::vector<double> elapsed;
  for (int r = 0; r < std::max(runs, 1); ++r) {
    const auto start = std::chrono::steady_clock::now();
    const Spectrogram out = beamform(spec, geom, steering, method, options);
    elapsed.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (out.frames() != frames) throw NumericalFailure("time_method: unexpected output size");
  }
  std::nth_element(elapsed.begin(), elapsed.begin() + static_cast<long>(elapsed.size() / 2),
                   elapsed.end());

  TimingRow row;
  row.method = method;
  row.mics = mics;
  row.order = is_adaptive(method) && method != Method::kMpdrApa
                  ? *std::max_element(bands.orders.begin(), bands.orders.end())
                  : 0;
  row.delay = bands.delay;
  switch (method) {
    case Method::kConvMpdrApa:
    case Method::kMpdrApa:
      row.q = filter_length(mics, row.order, row.delay);
      break;
    case Method::kConvSdMvdr:
      row.q = row.order == 0 ? 0 : mics * (row.order - row.delay + 1);
      break;
    default:
      row.q = mics;
  }
  row.macs = count_frame_step(method, mics, row.order, row.delay).total();
  row.seconds_per_audio_second = elapsed[elapsed.size() / 2] / audio_seconds;
  return row;
}

std::vector<TimingRow> wallclock_sweep(Method method, Index mics, std::span<const Index> orders,
                                       double audio_seconds, int runs, Index delay) {
  std::vector<TimingRow> rows;
  if (method == Method::kRefMic) throw InvalidArgument("wallclock_sweep: ref-mic is not a beamformer");
  if (method != Method::kConvMpdrApa && method != Method::kConvSdMvdr) {
    // order does not apply; one row
    rows.push_back(time_method(method, mics, BandPlan::uniform(0, delay), audio_seconds, runs));
    return rows;
  }
  for (Index order : orders) {
    if (order != 0 && order <= delay) continue;
    rows.push_back(time_method(method, mics, BandPlan::uniform(order, delay), audio_seconds, runs));
  }
  return rows;
}

void write_timing_csv(std::ostream& out, std::span<const TimingRow> rows) {
  out << "method,M,L,D,Q,macs,seconds_per_audio_second\n";
  for (const TimingRow& row : rows) {
    out << method_name(row.method) << ',' << row.mics << ',' << row.order << ',' << row.delay << ','
        << row.q << ',' << row.macs << ',' << row.seconds_per_audio_second << '\n';
  }
}

}  // namespace convbf
