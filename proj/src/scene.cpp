#include "convbf/scene.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <unsupported/Eigen/FFT>

#include "convbf/io.hpp"

namespace convbf {

namespace {

cd complex_normal(std::mt19937_64& rng, std::normal_distribution<double>& normal) {
  const double re = normal(rng);
  const double im = normal(rng);
  return cd(re, im) * std::numbers::sqrt2 * 0.5;
}

Eigen::VectorXd fft_convolve(const Eigen::VectorXd& x, const Eigen::VectorXd& h, Index out_len) {
  Index n = 1;
  while (n < x.size() + h.size() - 1) n <<= 1;
  Eigen::FFT<double> fft;
  std::vector<double> xa(static_cast<size_t>(n), 0.0), ha(static_cast<size_t>(n), 0.0);
  std::copy(x.data(), x.data() + x.size(), xa.begin());
  std::copy(h.data(), h.data() + h.size(), ha.begin());
  std::vector<cd> xf, hf;
  fft.fwd(xf, xa);
  fft.fwd(hf, ha);
  for (size_t i = 0; i < xf.size(); ++i) xf[i] *= hf[i];
  std::vector<double> y;
  fft.inv(y, xf);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(out_len);
  const Index count = std::min<Index>(out_len, static_cast<Index>(y.size()));
  for (Index i = 0; i < count; ++i) out(i) = y[static_cast<size_t>(i)];
  return out;
}

double mean_power(const Spectrogram& spec) {
  double total = 0.0;
  Index count = 0;
  for (Index m = 0; m < spec.channels(); ++m) {
    total += spec.channel(m).squaredNorm();
    count += spec.channel(m).size();
  }
  return count > 0 ? total / static_cast<double>(count) : 0.0;
}

Spectrogram single_channel(const Spectrogram& spec, Index m) {
  Spectrogram out(1, spec.frames(), spec.config(), spec.length());
  out.channel(0) = spec.channel(m);
  return out;
}

}  // namespace

double mclp_spectral_radius(const std::vector<Eigen::MatrixXcd>& coeffs, Index delay,
                            Index order) {
  if (coeffs.empty()) return 0.0;
  const Index mics = coeffs.front().rows();
  const Index dim = mics * order;
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(dim, dim);
  for (Index lag = delay; lag <= order; ++lag)
    companion.block(0, (lag - 1) * mics, mics, mics) = coeffs[static_cast<size_t>(lag - delay)];
  if (order > 1) companion.block(mics, 0, dim - mics, dim - mics).setIdentity();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
  if (solver.info() != Eigen::Success)
    throw NumericalFailure("mclp_spectral_radius: eigenvalue solver failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

MclpModel zero_mclp(Index mics, Index bins, Index order, Index delay) {
  if (!(order > delay && delay >= 1)) throw InvalidArgument("zero_mclp: need L > D >= 1");
  MclpModel model;
  model.delay = delay;
  model.order = order;
  model.coeffs.assign(static_cast<size_t>(bins),
                      std::vector<Eigen::MatrixXcd>(static_cast<size_t>(order - delay + 1),
                                                    Eigen::MatrixXcd::Zero(mics, mics)));
  return model;
}

MclpModel random_mclp(Index mics, Index bins, Index order, Index delay, std::uint64_t seed,
                      double radius, double decay) {
  if (!(radius > 0.0 && radius < 1.0))
    throw InvalidArgument("random_mclp: target spectral radius must lie in (0, 1)");
  MclpModel model = zero_mclp(mics, bins, order, delay);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double base = 1.0 / std::sqrt(static_cast<double>(mics));
  for (Index k = 0; k < bins; ++k) {
    auto& taps = model.coeffs[static_cast<size_t>(k)];
    for (Index lag = delay; lag <= order; ++lag) {
      Eigen::MatrixXcd& c = taps[static_cast<size_t>(lag - delay)];
      const double scale = base * std::pow(decay, static_cast<double>(lag - delay));
      for (Index i = 0; i < c.size(); ++i) c(i) = scale * complex_normal(rng, normal);
    }
    // Scaling C_l by s^l scales every companion eigenvalue by s.
    const double rho = mclp_spectral_radius(taps, delay, order);
    if (!(rho > 0.0) || !std::isfinite(rho)) continue;
    const double s = radius / rho;
    for (Index lag = delay; lag <= order; ++lag)
      taps[static_cast<size_t>(lag - delay)] *= std::pow(s, static_cast<double>(lag));
  }
  return model;
}

Eigen::VectorXd synthetic_speech(Index samples, double sample_rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(samples);

  struct Resonator {
    double b1 = 0, b2 = 0, z1 = 0, z2 = 0;
    void tune(double freq, double bandwidth, double fs) {
      const double r = std::exp(-std::numbers::pi * bandwidth / fs);
      b1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / fs);
      b2 = -r * r;
    }
    double step(double x) {
      const double y = x + b1 * z1 + b2 * z2;
      z2 = z1;
      z1 = y;
      return y;
    }
  };
  Resonator f1, f2, f3;

  Index t = 0;
  double phase = 0.0;
  while (t < samples) {
    const auto len = static_cast<Index>((0.12 + 0.25 * uniform(rng)) * sample_rate);
    const double kind = uniform(rng);
    const bool voiced = kind < 0.7;
    const bool silent = kind >= 0.9;
    const double f0_start = 95.0 + 90.0 * uniform(rng);
    const double f0_end = f0_start * (0.85 + 0.3 * uniform(rng));
    if (voiced) {
      f1.tune(300.0 + 500.0 * uniform(rng), 80.0, sample_rate);
      f2.tune(900.0 + 1300.0 * uniform(rng), 120.0, sample_rate);
      f3.tune(2400.0 + 800.0 * uniform(rng), 200.0, sample_rate);
    } else {
      f1.tune(3000.0 + 2000.0 * uniform(rng), 1500.0, sample_rate);
      f2.tune(5000.0 + 1500.0 * uniform(rng), 2000.0, sample_rate);
      f3.tune(1500.0 + 1000.0 * uniform(rng), 1200.0, sample_rate);
    }
    for (Index i = 0; i < len && t < samples; ++i, ++t) {
      const double progress = static_cast<double>(i) / static_cast<double>(len);
      const double envelope = silent ? 0.0 : std::sin(std::numbers::pi * progress);
      double excitation;
      if (voiced) {
        const double f0 = f0_start + (f0_end - f0_start) * progress;
        phase += f0 / sample_rate;
        excitation = 0.02 * normal(rng);
        if (phase >= 1.0) {
          phase -= 1.0;
          excitation += 1.0;
        }
      } else {
        excitation = 0.3 * normal(rng);
      }
      const double x = envelope * excitation;
      out(t) = f1.step(x) * 0.02 + f2.step(x) * 0.01 + f3.step(x) * 0.005;
    }
  }
  const double peak = out.cwiseAbs().maxCoeff();
  if (peak > 0.0) out *= 0.5 / peak;
  return out;
}

Scene mclp_scene(const Eigen::VectorXd& dry, const SteeringVector& steering, const MclpModel& model,
                 double snr_db, std::uint64_t seed, const StftConfig& config) {
  const Spectrogram dry_spec = stft(dry.transpose(), config);
  const Index bins = config.bins();
  const Index frames = dry_spec.frames();
  const Index mics = steering.mics();
  if (steering.bins() != bins) throw InvalidArgument("mclp_scene: steering bin count mismatch");
  if (model.bins() != bins) throw InvalidArgument("mclp_scene: model bin count mismatch");
  if (!(model.order > model.delay && model.delay >= 1))
    throw InvalidArgument("mclp_scene: need L > D >= 1");
  for (Index k = 0; k < bins; ++k) {
    const double rho = mclp_spectral_radius(model.coeffs[static_cast<size_t>(k)], model.delay,
                                            model.order);
    if (!(rho < 1.0)) {
      throw InvalidArgument("mclp_scene: unstable prediction model at bin " + std::to_string(k) +
                            " (spectral radius " + std::to_string(rho) + ")");
    }
  }

  Scene scene;
  scene.dry = dry_spec;
  scene.steering = steering;
  scene.true_mclp = model;
  scene.mixture = Spectrogram(mics, frames, config, dry_spec.length());
  scene.direct = scene.mixture;
  scene.reverb = scene.mixture;
  scene.noise = scene.mixture;

  const Eigen::MatrixXcd& x = dry_spec.channel(0);
  double direct_power = 0.0;
  for (Index k = 0; k < bins; ++k)
    direct_power += steering.values.col(k).squaredNorm() * x.row(k).squaredNorm();
  direct_power /= static_cast<double>(mics * bins * std::max<Index>(frames, 1));
  const bool noisy = std::isfinite(snr_db);
  const double sigma = noisy ? std::sqrt(direct_power / db_to_power(snr_db)) : 0.0;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd y(mics, frames);
  for (Index k = 0; k < bins; ++k) {
    const Eigen::VectorXcd a = steering.values.col(k);
    for (Index n = 0; n < frames; ++n) {
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(mics);
      if (noisy)
        for (Index m = 0; m < mics; ++m) v(m) = sigma * complex_normal(rng, normal);
      Eigen::VectorXcd r = Eigen::VectorXcd::Zero(mics);
      for (Index lag = model.delay; lag <= std::min(model.order, n); ++lag)
        r += model.at(k, lag) * y.col(n - lag);
      const Eigen::VectorXcd d = a * x(k, n);
      y.col(n) = d + r + v;
      for (Index m = 0; m < mics; ++m) {
        scene.direct.channel(m)(k, n) = d(m);
        scene.reverb.channel(m)(k, n) = r(m);
        scene.noise.channel(m)(k, n) = v(m);
      }
    }
    scene.mixture.set_bin_matrix(k, y);
  }

  scene.meta.kind = "mclp";
  scene.meta.snr_db = snr_db;
  scene.meta.seed = seed;
  scene.meta.order = model.order;
  scene.meta.delay = model.delay;
  scene.meta.t60_s = 0.0;
  scene.meta.srr_db = projection_srr(scene.dry, single_channel(scene.mixture, 0));
  return scene;
}

RoomResponse exp_decay_rir(const ArrayGeometry& geom, const RirSceneOptions& options,
                           double sample_rate) {
  geom.validate();
  if (!(options.t60 > 0.0)) throw InvalidArgument("exp_decay_rir: T60 must be positive");
  constexpr Index kHalfTaps = 32;
  const Eigen::VectorXd tau = plane_wave_delays(geom, options.azimuth, 0.0, options.c) * sample_rate;
  const double base = std::ceil(tau.cwiseAbs().maxCoeff()) + kHalfTaps;
  const Index tail_start = static_cast<Index>(base) + 2 * kHalfTaps;
  const auto tail_len = static_cast<Index>(std::floor(options.t60 * sample_rate));
  const Index length = tail_start + tail_len;

  RoomResponse rir;
  rir.direct = Eigen::MatrixXd::Zero(geom.size(), length);
  rir.tail = Eigen::MatrixXd::Zero(geom.size(), length);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  const bool has_tail = std::isfinite(options.drr_db) && tail_len > 0;

  for (Index m = 0; m < geom.size(); ++m) {
    // Hann-windowed sinc fractional delay.
    const double arrival = base + tau(m);
    const auto center = static_cast<Index>(std::floor(arrival));
    for (Index t = center - kHalfTaps; t <= center + kHalfTaps + 1; ++t) {
      const double x = static_cast<double>(t) - arrival;
      if (std::abs(x) > kHalfTaps) continue;
      const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      const double window = 0.5 + 0.5 * std::cos(std::numbers::pi * x / kHalfTaps);
      rir.direct(m, t) = sinc * window;
    }
    if (!has_tail) continue;
    for (Index i = 0; i < tail_len; ++i) {
      const double decay = std::exp(-6.9 * static_cast<double>(i) / (options.t60 * sample_rate));
      rir.tail(m, tail_start + i) = normal(rng) * decay;
    }
    const double tail_energy = rir.tail.row(m).squaredNorm();
    if (tail_energy > 0.0) {
      const double target = rir.direct.row(m).squaredNorm() / db_to_power(options.drr_db);
      rir.tail.row(m) *= std::sqrt(target / tail_energy);
    }
  }
  return rir;
}

Spectrogram diffuse_noise(const ArrayGeometry& geom, const StftConfig& config, Index frames,
                          std::uint64_t seed, double loading) {
  geom.validate();
  const CoherenceMatrix gamma = diffuse_coherence(geom, config);
  const Index mics = geom.size();
  Spectrogram noise(mics, frames, config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd z(mics, frames);
  for (Index k = 0; k < config.bins(); ++k) {
    Eigen::MatrixXd loaded = gamma[static_cast<size_t>(k)];
    loaded.diagonal().array() += loading;
    Eigen::LLT<Eigen::MatrixXd> chol(loaded);
    if (chol.info() != Eigen::Success)
      throw NumericalFailure("diffuse_noise: coherence not positive definite at bin " +
                             std::to_string(k));
    for (Index n = 0; n < frames; ++n)
      for (Index m = 0; m < mics; ++m) z(m, n) = complex_normal(rng, normal);
    const Eigen::MatrixXd lower = chol.matrixL();
    noise.set_bin_matrix(k, lower.cast<cd>() * z);
  }
  return noise;
}

Scene exp_decay_rir_scene(const Eigen::VectorXd& dry, const ArrayGeometry& geom,
                          const RirSceneOptions& options, const StftConfig& config) {
  const RoomResponse rir = exp_decay_rir(geom, options, config.sample_rate);
  const Index mics = geom.size();
  const Index length = dry.size();
  Eigen::MatrixXd direct(mics, length), reverb(mics, length);
  for (Index m = 0; m < mics; ++m) {
    direct.row(m) = fft_convolve(dry, rir.direct.row(m).transpose(), length).transpose();
    if (rir.tail.row(m).squaredNorm() > 0.0)
      reverb.row(m) = fft_convolve(dry, rir.tail.row(m).transpose(), length).transpose();
    else
      reverb.row(m).setZero();
  }

  Scene scene;
  scene.direct = stft(direct, config);
  scene.reverb = stft(reverb, config);
  scene.dry = stft(direct.row(geom.reference_mic), config);
  scene.steering = plane_wave_steering(geom, options.azimuth, 0.0, config, options.c);
  const Index frames = scene.direct.frames();

  if (std::isfinite(options.snr_db)) {
    scene.noise = diffuse_noise(geom, config, frames, options.seed ^ 0x9e3779b97f4a7c15ULL);
    double speech_power = 0.0;
    for (Index m = 0; m < mics; ++m)
      speech_power += (scene.direct.channel(m) + scene.reverb.channel(m)).squaredNorm();
    speech_power /= static_cast<double>(mics * config.bins() * std::max<Index>(frames, 1));
    const double scale = std::sqrt(speech_power / db_to_power(options.snr_db) /
                                   std::max(mean_power(scene.noise), 1e-300));
    for (Index m = 0; m < mics; ++m) scene.noise.channel(m) *= scale;
  } else {
    scene.noise = Spectrogram(mics, frames, config, scene.direct.length());
  }

  scene.mixture = Spectrogram(mics, frames, config, scene.direct.length());
  for (Index m = 0; m < mics; ++m)
    scene.mixture.channel(m) =
        scene.direct.channel(m) + scene.reverb.channel(m) + scene.noise.channel(m);

  scene.meta.kind = "rir";
  scene.meta.doa_deg = options.azimuth * 180.0 / std::numbers::pi;
  scene.meta.snr_db = options.snr_db;
  scene.meta.t60_s = options.t60;
  scene.meta.drr_db = options.drr_db;
  scene.meta.seed = options.seed;
  scene.meta.srr_db = projection_srr(scene.dry, single_channel(scene.mixture, geom.reference_mic));
  return scene;
}

double projection_srr(const Spectrogram& dry, const Spectrogram& estimate, Index first,
                      Index last) {
  if (dry.channels() != 1 || estimate.channels() != 1)
    throw InvalidArgument("projection_srr: expects single-channel spectrograms");
  if (dry.bins() != estimate.bins() || dry.frames() != estimate.frames())
    throw InvalidArgument("projection_srr: dimension mismatch");
  if (last < 0) last = dry.frames();
  if (first < 0 || first >= last || last > dry.frames())
    throw InvalidArgument("projection_srr: invalid frame range");
  const auto x = dry.channel(0).middleCols(first, last - first);
  const auto e = estimate.channel(0).middleCols(first, last - first);
  const double energy = x.squaredNorm();
  if (!(energy > 0.0)) throw InvalidArgument("projection_srr: dry signal is zero");
  const cd beta = (x.array().conjugate() * e.array()).sum() / energy;
  const double projected = std::norm(beta) * energy;
  const double residual = (e - beta * x).squaredNorm();
  if (residual <= 0.0) return kSrrCapDb;
  return std::min(kSrrCapDb, power_to_db(projected / residual));
}

double measure_srr(const Scene& scene, const Spectrogram& estimate) {
  return projection_srr(scene.dry, estimate);
}

void export_scene(const std::string& directory, const Scene& scene) {
  std::filesystem::create_directories(directory);
  const StftConfig& config = scene.mixture.config();
  const auto write = [&](const std::string& name, const Spectrogram& spec) {
    AudioBuffer buffer;
    buffer.sample_rate = config.sample_rate;
    buffer.samples = istft(spec, config);
    write_wav((std::filesystem::path(directory) / name).string(), buffer, SampleFormat::kFloat32);
  };
  write("mixture.wav", scene.mixture);
  write("dry.wav", scene.dry);
  write("direct.wav", scene.direct);
  write("reverb.wav", scene.reverb);
  write("noise.wav", scene.noise);

  std::ofstream meta(std::filesystem::path(directory) / "scene.txt");
  if (!meta) throw IoError("export_scene: cannot write metadata in " + directory);
  meta.precision(10);
  meta << "kind=" << scene.meta.kind << '\n'
       << "doa_deg=" << scene.meta.doa_deg << '\n'
       << "snr_db=" << scene.meta.snr_db << '\n'
       << "t60_s=" << scene.meta.t60_s << '\n'
       << "drr_db=" << scene.meta.drr_db << '\n'
       << "srr_db=" << scene.meta.srr_db << '\n'
       << "seed=" << scene.meta.seed << '\n'
       << "L=" << scene.meta.order << '\n'
       << "D=" << scene.meta.delay << '\n'
       << "mics=" << scene.mixture.channels() << '\n'
       << "sample_rate=" << config.sample_rate << '\n';
}

}  // namespace convbf
