#include "convbf/pipeline.hpp"

#include <chrono>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "convbf/array.hpp"
#include "convbf/conv_sdmvdr.hpp"

namespace convbf {

namespace {

// Runs body(k) for every bin; bins are split round-robin across threads.
template <typename Body>
void for_each_bin(Index bins, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(bins)));
  if (threads == 1) {
    for (Index k = 0; k < bins; ++k) body(k);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (Index k = t; k < bins; k += threads) body(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

double level_scale(const Spectrogram& spec, const ProcessOptions& options) {
  if (!options.normalize) return 1.0;
  const double rms = reference_rms(spec);
  if (!(rms > 0.0)) return 1.0;
  return std::pow(10.0, kTargetLevelDbfs / 20.0) / rms;
}

double gain_at(const ProcessOptions& options, Index k, Index n) {
  return options.gain ? options.gain->gain(k, n) : 1.0;
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "ref-mic") return Method::kRefMic;
  if (name == "delay-sum") return Method::kDelaySum;
  if (name == "sd-mvdr") return Method::kSdMvdr;
  if (name == "mpdr-apa") return Method::kMpdrApa;
  if (name == "conv-mpdr-apa") return Method::kConvMpdrApa;
  if (name == "conv-sdmvdr") return Method::kConvSdMvdr;
  throw InvalidArgument("unknown method '" + name + "'");
}

std::string method_name(Method method) {
  switch (method) {
    case Method::kRefMic: return "ref-mic";
    case Method::kDelaySum: return "delay-sum";
    case Method::kSdMvdr: return "sd-mvdr";
    case Method::kMpdrApa: return "mpdr-apa";
    case Method::kConvMpdrApa: return "conv-mpdr-apa";
    case Method::kConvSdMvdr: return "conv-sdmvdr";
  }
  return "unknown";
}

bool is_adaptive(Method method) {
  return method == Method::kMpdrApa || method == Method::kConvMpdrApa ||
         method == Method::kConvSdMvdr;
}

double reference_rms(const Spectrogram& spec, Index reference_mic) {
  if (spec.frames() == 0 || spec.length() == 0) return 0.0;
  const Eigen::MatrixXcd& y = spec.channel(reference_mic);
  double energy = 0.0;
  for (Index k = 0; k < y.rows(); ++k) {
    const bool edge = k == 0 || 2 * k == spec.config().fft_len;
    energy += (edge ? 1.0 : 2.0) * y.row(k).squaredNorm();
  }
  energy /= static_cast<double>(spec.config().fft_len);
  return std::sqrt(energy / static_cast<double>(spec.length()));
}

Spectrogram run_conv_apa(const Spectrogram& spec, const SteeringVector& steering,
                         const ProcessOptions& options) {
  const ApaParams& params = options.params;
  params.validate();
  if (steering.mics() != spec.channels() || steering.bins() != spec.bins())
    throw InvalidArgument("run_conv_apa: steering does not match spectrogram");
  const double scale = level_scale(spec, options);
  Spectrogram out(1, spec.frames(), spec.config(), spec.length());

  for_each_bin(spec.bins(), options.threads, [&](Index k) {
    const Index order = band_order(k, params.bands, spec.config());
    ApaState<double> state = init_state(steering.values.col(k), order, params.delay());
    const Eigen::MatrixXcd y = spec.bin_matrix(k) * scale;
    const Eigen::VectorXcd a = steering.values.col(k);
    Eigen::RowVectorXcd x(spec.frames());
    for (int pass = options.prior_pass ? 2 : 1; pass > 0; --pass) {
      state.reset_history();
      for (Index n = 0; n < spec.frames(); ++n)
        x(n) = process_bin(state, y.col(n), a, params, gain_at(options, k, n));
    }
    out.channel(0).row(k) = x / scale;
  });
  return out;
}

Spectrogram run_conv_sdmvdr(const Spectrogram& spec, const FixedWeights& w_sd,
                            const ProcessOptions& options) {
  const ApaParams& params = options.params;
  params.validate();
  if (w_sd.mics() != spec.channels() || w_sd.bins() != spec.bins())
    throw InvalidArgument("run_conv_sdmvdr: weights do not match spectrogram");
  const double scale = level_scale(spec, options);
  Spectrogram out(1, spec.frames(), spec.config(), spec.length());

  for_each_bin(spec.bins(), options.threads, [&](Index k) {
    const Index order = band_order(k, params.bands, spec.config());
    const Eigen::MatrixXcd y = spec.bin_matrix(k) * scale;
    Eigen::RowVectorXcd x(spec.frames());
    if (order == 0) {
      x = w_sd.values.col(k).adjoint() * y;
    } else {
      RcState<double> state = init_rc_state(w_sd.values.col(k), order, params.delay());
      for (int pass = options.prior_pass ? 2 : 1; pass > 0; --pass) {
        state.reset_history();
        for (Index n = 0; n < spec.frames(); ++n)
          x(n) = rc_process_bin(state, y.col(n), params, gain_at(options, k, n));
      }
    }
    out.channel(0).row(k) = x / scale;
  });
  return out;
}

Spectrogram beamform(const Spectrogram& spec, const ArrayGeometry& geom,
                     const SteeringVector& steering, Method method, const ProcessOptions& options) {
  if (geom.size() != spec.channels())
    throw InvalidArgument("beamform: geometry has " + std::to_string(geom.size()) +
                          " microphones, input has " + std::to_string(spec.channels()));
  switch (method) {
    case Method::kRefMic: {
      Spectrogram out(1, spec.frames(), spec.config(), spec.length());
      out.channel(0) = spec.channel(geom.reference_mic);
      return out;
    }
    case Method::kDelaySum:
      return apply_fixed(delay_and_sum(steering), spec);
    case Method::kSdMvdr:
      return apply_fixed(
          superdirective_mvdr(steering, diffuse_coherence(geom, spec.config(), options.c),
                              options.loading),
          spec);
    case Method::kMpdrApa: {
      ProcessOptions plain = options;
      plain.params.bands = BandPlan::uniform(0, options.params.delay());
      return run_conv_apa(spec, steering, plain);
    }
    case Method::kConvMpdrApa:
      return run_conv_apa(spec, steering, options);
    case Method::kConvSdMvdr: {
      const FixedWeights w_sd = superdirective_mvdr(
          steering, diffuse_coherence(geom, spec.config(), options.c), options.loading);
      return run_conv_sdmvdr(spec, w_sd, options);
    }
  }
  throw InvalidArgument("beamform: unknown method");
}

Index enhance_frames(Index samples, const StftConfig& config) {
  const Index padded = samples + config.hop + config.window_len;
  return 1 + (padded - config.window_len + config.hop - 1) / config.hop;
}

EnhanceResult enhance(const AudioBuffer& input, const RunConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  resample_check(input, config.stft.sample_rate);
  config.geometry.validate();
  if (input.channels() != config.geometry.size())
    throw InvalidArgument("enhance: input has " + std::to_string(input.channels()) +
                          " channels, geometry has " + std::to_string(config.geometry.size()));
  if (input.length() == 0) throw InvalidArgument("enhance: empty input");

  // Pad so that every input sample is covered by two overlapping frames.
  const Index lead = config.stft.hop;
  const Index trail = config.stft.window_len;
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(input.channels(), input.length() + lead + trail);
  padded.middleCols(lead, input.length()) = input.samples;
  const Spectrogram spec = stft(padded, config.stft);

  EnhanceResult result;
  if (config.doa_deg) {
    result.doa_deg = *config.doa_deg;
  } else if (config.geometry.size() >= 2) {
    result.doa_deg = srp_phat_localize(spec, config.geometry) * 180.0 / std::numbers::pi;
  }
  const SteeringVector steering = plane_wave_steering(
      config.geometry, result.doa_deg * std::numbers::pi / 180.0, 0.0, config.stft, config.options.c);

  const Spectrogram out = beamform(spec, config.geometry, steering, config.method, config.options);
  const Eigen::MatrixXd samples = istft(out, config.stft);

  result.output.sample_rate = input.sample_rate;
  result.output.samples = samples.middleCols(lead, input.length());
  result.frames = spec.frames();
  const Index mics = config.geometry.size();
  if (config.method == Method::kMpdrApa) {
    result.filter_lengths = {mics};
  } else if (config.method == Method::kConvMpdrApa) {
    for (Index order : config.options.params.bands.orders)
      result.filter_lengths.push_back(filter_length(mics, order, config.options.params.delay()));
  } else if (config.method == Method::kConvSdMvdr) {
    for (Index order : config.options.params.bands.orders)
      result.filter_lengths.push_back(order == 0 ? 0 : mics * (order - config.options.params.delay() + 1));
  } else if (config.method != Method::kRefMic) {
    result.filter_lengths = {mics};
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace convbf
