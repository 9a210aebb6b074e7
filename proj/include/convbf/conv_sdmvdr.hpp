#ifndef CONVBF_CONV_SDMVDR_HPP
#define CONVBF_CONV_SDMVDR_HPP

// Fixed superdirective beamformer followed by an adaptive reverberation
// canceller. Only the prediction filter adapts, so the observation system
// has a single row and the gain needs a scalar division.

#include "convbf/conv_apa.hpp"

namespace convbf {

template <typename Real>
struct RcState {
  Index mics = 0;
  Index order = 0;
  Index delay = 1;
  CVector<Real> w_sd;          // fixed beamformer, a^H w_sd = 1
  CVector<Real> w_rc;          // M(L-D+1) entries, stacked c_D ... c_L
  FrameHistory<Real> history;
  CVector<Real> scratch;       // stacked delayed frames f(n)

  Index length() const { return w_rc.size(); }
  void reset_history() { history.clear(); }
};

template <typename Derived>
RcState<typename Derived::RealScalar> init_rc_state(const Eigen::MatrixBase<Derived>& w_sd,
                                                    Index order, Index delay) {
  using Real = typename Derived::RealScalar;
  if (!(order > delay && delay >= 1))
    throw InvalidArgument("conv-sdmvdr: need L > D >= 1");
  RcState<Real> state;
  state.mics = w_sd.size();
  state.order = order;
  state.delay = delay;
  state.w_sd = w_sd;
  const Index length = state.mics * (order - delay + 1);
  state.w_rc = CVector<Real>::Zero(length);
  state.history = FrameHistory<Real>(state.mics, order);
  state.scratch = CVector<Real>::Zero(length);
  return state;
}

namespace detail {

template <typename Real>
void rc_update_kernel(CVector<Real>& w_rc, const CVector<Real>& f, std::complex<Real> d,
                      std::complex<Real> prediction, Real phi_x, Real phi_r, MacCounter* macs) {
  const Real denom = phi_r * f.squaredNorm() + phi_x;
  if (!std::isfinite(denom) || denom < Real(0))
    throw NumericalFailure("rc_update: invalid observation variance");
  // denom = 0 only when phi_r f = 0, in which case the update vanishes
  if (denom > Real(0)) {
    const std::complex<Real> scale = phi_r * std::conj(d - prediction) / denom;
    w_rc += scale * f;
  }
  if (macs) {
    MacCounter::Scope scope(*macs, "update");
    macs->complex_mac(2 * static_cast<std::uint64_t>(f.size()));
    macs->division(1);
  }
}

}  // namespace detail

/// |w_sd^H y(n) - c^H(n-1) f(n)|^2 after gain and floor.
template <typename Real, typename Derived>
Real rc_speech_psd(const RcState<Real>& state, const Eigen::MatrixBase<Derived>& y_now,
                   const ApaParams& params, Real gain = Real(1)) {
  CVector<Real> f(state.length());
  state.history.stack(state.delay, f);
  Real phi_x = std::norm(state.w_sd.dot(y_now) - state.w_rc.dot(f));
  if (gain != Real(1)) phi_x = apply_gain(phi_x, gain);
  return psd_floor(phi_x, y_now, static_cast<Real>(params.eta), params.floor_mode);
}

/// Scalar-gain update of the prediction filter; the history is not touched.
template <typename Real, typename Derived>
void rc_update(RcState<Real>& state, const Eigen::MatrixBase<Derived>& y_now, Real phi_x,
               Real phi_r, MacCounter* macs = nullptr) {
  if (y_now.size() != state.mics) throw InvalidArgument("rc_update: frame size mismatch");
  state.history.stack(state.delay, state.scratch);
  const std::complex<Real> d = state.w_sd.dot(y_now);
  const std::complex<Real> prediction = state.w_rc.dot(state.scratch);
  if (macs) {
    MacCounter::Scope scope(*macs, "prior");
    macs->complex_mac(static_cast<std::uint64_t>(state.mics + state.length()));
  }
  detail::rc_update_kernel(state.w_rc, state.scratch, d, prediction, phi_x, phi_r, macs);
}

/// One frame for one bin, mirroring process_bin of the convolutional APA.
template <typename Real, typename Derived>
std::complex<Real> rc_process_bin(RcState<Real>& state, const Eigen::MatrixBase<Derived>& y_now,
                                  const ApaParams& params, Real gain = Real(1),
                                  MacCounter* macs = nullptr) {
  using C = std::complex<Real>;
  if (y_now.size() != state.mics) throw InvalidArgument("rc_process_bin: frame size mismatch");
  state.history.stack(state.delay, state.scratch);
  const C d = state.w_sd.dot(y_now);
  const C prediction = state.w_rc.dot(state.scratch);

  Real phi_x = std::norm(d - prediction);
  if (gain != Real(1)) phi_x = apply_gain(phi_x, gain);
  phi_x = psd_floor(phi_x, y_now, static_cast<Real>(params.eta), params.floor_mode);

  detail::rc_update_kernel(state.w_rc, state.scratch, d, prediction, phi_x,
                           static_cast<Real>(params.phi_r), macs);
  const C x_r = state.w_rc.dot(state.scratch);
  if (macs) {
    {
      MacCounter::Scope scope(*macs, "prior");
      macs->complex_mac(static_cast<std::uint64_t>(state.mics + state.length()));
    }
    MacCounter::Scope scope(*macs, "output");
    macs->complex_mac(static_cast<std::uint64_t>(state.length()));
  }
  state.history.push(y_now);
  return limited_output(d, x_r, static_cast<Real>(params.alpha_r));
}

}  // namespace convbf

#endif  // CONVBF_CONV_SDMVDR_HPP
