#ifndef CONVBF_PSD_HPP
#define CONVBF_PSD_HPP

#include <algorithm>
#include <memory>
#include <string>

#include "convbf/types.hpp"

namespace convbf {

/// How the speech PSD lower bound scales with the microphone frame power.
enum class FloorMode {
  kMeanPower,   // eta * ||y||^2 / M
  kTotalPower,  // eta * ||y||^2
};

/// max(phi_x, eta * power(y)).
template <typename Real, typename Derived>
Real psd_floor(Real phi_x, const Eigen::MatrixBase<Derived>& y_now, Real eta,
               FloorMode mode = FloorMode::kMeanPower) {
  Real power = y_now.squaredNorm();
  if (mode == FloorMode::kMeanPower && y_now.size() > 0) power /= static_cast<Real>(y_now.size());
  return std::max(phi_x, eta * power);
}

namespace detail {
void warn_gain_clamped(double gain);
}

/// Spectral-gain enhancement of a PSD estimate: G^2 * phi_x. Gains outside
/// [0, 1] are clamped with a one-time warning.
template <typename Real>
Real apply_gain(Real phi_x, Real gain) {
  if (!(gain >= Real(0) && gain <= Real(1))) {
    detail::warn_gain_clamped(static_cast<double>(gain));
    gain = std::isnan(gain) ? Real(0) : std::clamp(gain, Real(0), Real(1));
  }
  return gain * gain * phi_x;
}

/// Source of per-bin, per-frame spectral gains G(k, n) in [0, 1].
class GainProvider {
 public:
  virtual ~GainProvider() = default;
  virtual double gain(Index k, Index n) const = 0;
};

class IdentityGainProvider final : public GainProvider {
 public:
  double gain(Index, Index) const override { return 1.0; }
};

/// Gains loaded from a mask file; dimensions are fixed at construction.
class MaskGainProvider final : public GainProvider {
 public:
  explicit MaskGainProvider(Eigen::MatrixXf gains);
  double gain(Index k, Index n) const override { return gains_(k, n); }
  Index bins() const { return gains_.rows(); }
  Index frames() const { return gains_.cols(); }
  const Eigen::MatrixXf& gains() const { return gains_; }

 private:
  Eigen::MatrixXf gains_;
};

std::unique_ptr<GainProvider> identity_provider();

/// Loads a mask and checks it against the utterance's K x N.
std::unique_ptr<MaskGainProvider> mask_file_provider(const std::string& path, Index bins,
                                                     Index frames);

/// Gain-mask file: "GMSK", u32 K, u32 N, then K*N little-endian float32
/// gains, bin-major (all frames of bin 0 first).
Eigen::MatrixXf read_gain_mask(const std::string& path);
void write_gain_mask(const std::string& path, const Eigen::MatrixXf& gains);

}  // namespace convbf

#endif  // CONVBF_PSD_HPP
