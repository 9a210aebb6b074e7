#ifndef CONVBF_SCENE_HPP
#define CONVBF_SCENE_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "convbf/array.hpp"

namespace convbf {

/// Time-invariant prediction matrices C_l(k), l = D..L, for every bin.
struct MclpModel {
  Index delay = 1;
  Index order = 2;
  /// coeffs[k][l - delay] is the M x M matrix C_l at bin k.
  std::vector<std::vector<Eigen::MatrixXcd>> coeffs;

  Index bins() const { return static_cast<Index>(coeffs.size()); }
  const Eigen::MatrixXcd& at(Index k, Index lag) const {
    return coeffs[static_cast<size_t>(k)][static_cast<size_t>(lag - delay)];
  }
};

/// Spectral radius of the block companion matrix of y(n) = sum_l C_l y(n-l).
double mclp_spectral_radius(const std::vector<Eigen::MatrixXcd>& coeffs, Index delay, Index order);

/// Random stable prediction matrices: |C_l| decays as decay^(l-D) and each
/// bin is rescaled so its spectral radius equals `radius`.
MclpModel random_mclp(Index mics, Index bins, Index order, Index delay, std::uint64_t seed,
                      double radius = 0.9, double decay = 0.7);

MclpModel zero_mclp(Index mics, Index bins, Index order, Index delay);

struct SceneMetadata {
  std::string kind;  // "mclp" or "rir"
  double doa_deg = 0.0;
  double snr_db = std::numeric_limits<double>::infinity();
  double srr_db = 0.0;  // measured at the reference microphone
  double t60_s = 0.0;
  double drr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  Index order = 0;
  Index delay = 0;
};

/// Ground-truth bundle; mixture = direct + reverb + noise. For MCLP scenes
/// direct = a * X exactly.
struct Scene {
  Spectrogram mixture;
  Spectrogram dry;     // X at the reference microphone, one channel
  Spectrogram direct;
  Spectrogram reverb;
  Spectrogram noise;
  SteeringVector steering;
  std::optional<MclpModel> true_mclp;
  SceneMetadata meta;
};

/// Speech-like test signal: voiced pulse trains and noise bursts through
/// moving resonances with a syllable-rate envelope. Peak amplitude 0.5.
Eigen::VectorXd synthetic_speech(Index samples, double sample_rate, std::uint64_t seed);

/// Reverberation that follows the prediction model exactly:
/// y(n) = a X(n) + sum_l C_l y(n-l) + v(n), v spatially white at snr_db
/// relative to the direct component (infinite SNR means no noise).
Scene mclp_scene(const Eigen::VectorXd& dry, const SteeringVector& steering, const MclpModel& model,
                 double snr_db, std::uint64_t seed, const StftConfig& config = {});

struct RirSceneOptions {
  double azimuth = 0.0;  // radians
  double t60 = 0.5;      // seconds
  double drr_db = 0.0;
  double snr_db = 30.0;
  std::uint64_t seed = 0;
  double c = kSpeedOfSound;
};

/// Plane-wave direct path plus an exponentially decaying Gaussian tail per
/// microphone, convolved in the time domain; diffuse noise added in the STFT
/// domain at snr_db relative to the reverberant speech.
Scene exp_decay_rir_scene(const Eigen::VectorXd& dry, const ArrayGeometry& geom,
                          const RirSceneOptions& options, const StftConfig& config = {});

/// Per-microphone impulse responses used by exp_decay_rir_scene, split into
/// direct path and tail (rows are microphones).
struct RoomResponse {
  Eigen::MatrixXd direct;
  Eigen::MatrixXd tail;
};
RoomResponse exp_decay_rir(const ArrayGeometry& geom, const RirSceneOptions& options,
                           double sample_rate);

/// Complex Gaussian noise whose spatial coherence follows the diffuse sinc
/// model, colored per bin by the Cholesky factor of (Gamma + loading I).
Spectrogram diffuse_noise(const ArrayGeometry& geom, const StftConfig& config, Index frames,
                          std::uint64_t seed, double loading = 1e-6);

inline constexpr double kSrrCapDb = 60.0;

/// 10 log10(|proj|^2 / |est - proj|^2) where proj is the projection of the
/// estimate onto the dry signal, over frames [first, last). Capped at 60 dB.
double projection_srr(const Spectrogram& dry, const Spectrogram& estimate, Index first = 0,
                      Index last = -1);
double measure_srr(const Scene& scene, const Spectrogram& estimate);

/// Writes mixture/dry/direct/reverb/noise WAVs (float32) and scene.txt.
void export_scene(const std::string& directory, const Scene& scene);

}  // namespace convbf

#endif  // CONVBF_SCENE_HPP
