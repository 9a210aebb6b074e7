#ifndef CONVBF_CONV_APA_HPP
#define CONVBF_CONV_APA_HPP

// Convolutional MPDR beamformer adapted by a two-row affine projection
// update derived from a Kalman filter with fixed diagonal state covariance.
//
// Conventions: filters are applied as w^H y. The stacked filter holds
// [w_b; -c_D; ...; -c_L], so the beamformer output is X_b = w_b^H y(n) and
// the predicted reverberation is X_r = c^H [y(n-D); ...; y(n-L)]. The
// directional constraint is a^H w_b = 1.

#include <span>

#include "convbf/history.hpp"
#include "convbf/mac_counter.hpp"
#include "convbf/psd.hpp"
#include "convbf/stft.hpp"

namespace convbf {

struct ApaParams {
  double phi_b = db_to_power(-37.0);   // beamformer coefficient variance
  double phi_r = db_to_power(-40.0);   // reverb canceller coefficient variance
  double phi_a = db_to_power(-120.0);  // directional constraint error PSD
  double eta = db_to_power(-25.0);     // speech PSD floor factor
  double alpha_r = 1.0;                // amount of reverb reduction
  BandPlan bands;
  FloorMode floor_mode = FloorMode::kMeanPower;

  Index delay() const { return bands.delay; }

  void validate() const {
    if (!(phi_b > 0.0 && phi_r > 0.0 && phi_a > 0.0 && eta > 0.0))
      throw InvalidArgument("ApaParams: variances and eta must be positive");
    if (!(alpha_r >= 0.0 && alpha_r <= 1.0))
      throw InvalidArgument("ApaParams: alpha_r must lie in [0, 1]");
    bands.validate();
  }
};

/// Filter length Q for M microphones, order L and delay D; L = 0 is the
/// plain (non-convolutional) beamformer.
inline Index filter_length(Index mics, Index order, Index delay) {
  return order == 0 ? mics : mics * (order - delay + 2);
}

/// Per-bin adaptive filter state.
template <typename Real>
struct ApaState {
  Index mics = 0;
  Index order = 0;
  Index delay = 1;
  CVector<Real> w;              // Q entries, [w_b; -c_D; ...; -c_L]
  FrameHistory<Real> history;   // past `order` microphone frames
  CVector<Real> scratch;        // stacked observation buffer

  Index length() const { return w.size(); }
  auto beamformer() const { return w.head(mics); }
  auto canceller() const { return w.tail(w.size() - mics); }

  /// Zeroes the frame history and keeps the filter, for a second pass.
  void reset_history() { history.clear(); }
};

template <typename Real>
struct Observation {
  CVector<Real> y_tilde;  // [y(n); y(n-D); ...; y(n-L)]
  CVector<Real> a_tilde;  // [a; 0]
};

template <typename Derived>
ApaState<typename Derived::RealScalar> init_state(const Eigen::MatrixBase<Derived>& a,
                                                  Index order, Index delay) {
  using Real = typename Derived::RealScalar;
  const Index mics = a.size();
  if (mics < 1) throw InvalidArgument("init_state: empty steering vector");
  if (order != 0 && !(order > delay && delay >= 1))
    throw InvalidArgument("init_state: need L = 0 or L > D >= 1");
  const Real energy = a.squaredNorm();
  if (!(energy > Real(0))) throw InvalidArgument("init_state: zero-norm steering vector");

  ApaState<Real> state;
  state.mics = mics;
  state.order = order;
  state.delay = delay;
  const Index q = filter_length(mics, order, delay);
  state.w = CVector<Real>::Zero(q);
  state.w.head(mics) = a / energy;
  state.history = FrameHistory<Real>(mics, order);
  state.scratch = CVector<Real>::Zero(q);
  return state;
}

namespace detail {

template <typename Real, typename Derived>
void stack_into(const ApaState<Real>& state, const Eigen::MatrixBase<Derived>& y_now,
                CVector<Real>& y_tilde) {
  if (y_now.size() != state.mics)
    throw InvalidArgument("stack_observation: frame size does not match state");
  y_tilde.resize(state.length());
  y_tilde.head(state.mics) = y_now;
  if (state.order > 0) state.history.stack(state.delay, y_tilde.tail(state.length() - state.mics));
}

struct ApaVariances {
  double phi_b;
  double phi_r;
  double phi_a;
};

// One update given the a priori output prior = w^H y_tilde.
template <typename Real, typename DerivedA>
void apa_update_kernel(CVector<Real>& w, const CVector<Real>& y_tilde,
                       const Eigen::MatrixBase<DerivedA>& a,
                       std::complex<Real> prior, Real phi_x, const ApaVariances& v,
                       MacCounter* macs) {
  using C = std::complex<Real>;
  const Index m = a.size();
  const Index r = w.size() - m;
  const Real phi_b = static_cast<Real>(v.phi_b);
  const Real phi_r = static_cast<Real>(v.phi_r);
  const Real phi_a = static_cast<Real>(v.phi_a);
  const auto y = y_tilde.head(m);
  const auto f = y_tilde.tail(r);

  // S = F Phi_w F^H + Phi_eps, with F = [y_tilde^H; a_tilde^H].
  const Real s11 = phi_b * y.squaredNorm() + phi_r * f.squaredNorm() + phi_x;
  const C s12 = phi_b * y.dot(a);
  const Real s22 = phi_b * a.squaredNorm() + phi_a;
  const C e1 = -std::conj(prior);
  const C e2 = C(1) - a.dot(w.head(m));
  C g1, g2;
  if (s11 == Real(0) && s22 > Real(0)) {
    // all-zero observation with zero PSD: the output row is 0 = 0
    g1 = C(0);
    g2 = e2 / s22;
  } else {
    const Real det = s11 * s22 - std::norm(s12);
    if (!(det > Real(0)) || !std::isfinite(det))
      throw NumericalFailure("apa_update: singular 2x2 observation covariance");
    g1 = (s22 * e1 - s12 * e2) / det;
    g2 = (s11 * e2 - std::conj(s12) * e1) / det;
  }

  w.head(m) += phi_b * (y * g1 + a * g2);
  if (r > 0) w.tail(r) += (phi_r * g1) * f;

  if (macs) {
    {
      MacCounter::Scope scope(*macs, "covariance");
      macs->complex_mac(static_cast<std::uint64_t>(m + r));  // s11
      macs->complex_mac(2 * static_cast<std::uint64_t>(m));  // s12, s22
    }
    {
      MacCounter::Scope scope(*macs, "inverse");
      macs->complex_mac(static_cast<std::uint64_t>(m));  // a^H w_b
      macs->complex_mac(6);
      macs->division(2);
      macs->complex_mac(4);  // S^-1 e
    }
    {
      MacCounter::Scope scope(*macs, "correction");
      macs->complex_mac(static_cast<std::uint64_t>(2 * m + r));
    }
  }
}

}  // namespace detail

template <typename Real, typename DerivedY, typename DerivedA>
Observation<Real> stack_observation(const ApaState<Real>& state,
                                    const Eigen::MatrixBase<DerivedY>& y_now,
                                    const Eigen::MatrixBase<DerivedA>& a) {
  if (a.size() != state.mics) throw InvalidArgument("stack_observation: steering size mismatch");
  Observation<Real> obs;
  detail::stack_into(state, y_now, obs.y_tilde);
  obs.a_tilde = CVector<Real>::Zero(state.length());
  obs.a_tilde.head(state.mics) = a;
  return obs;
}

/// |w^H(n-1) y_tilde(n)|^2, the a priori output power.
template <typename Real>
Real speech_psd_estimate(const ApaState<Real>& state, const Observation<Real>& obs) {
  return std::norm(state.w.dot(obs.y_tilde));
}

/// Explicit Q x 2 gain K = Phi_w F^H (F Phi_w F^H + Phi_eps)^-1.
template <typename Real>
CMatrix<Real> kalman_gain(const ApaState<Real>& state, const Observation<Real>& obs, Real phi_x,
                          const ApaParams& params) {
  using C = std::complex<Real>;
  const Index q = state.length();
  Eigen::Matrix<Real, Eigen::Dynamic, 1> phi_w(q);
  phi_w.head(state.mics).setConstant(static_cast<Real>(params.phi_b));
  phi_w.tail(q - state.mics).setConstant(static_cast<Real>(params.phi_r));

  CMatrix<Real> pf(q, 2);  // Phi_w F^H
  pf.col(0) = phi_w.cwiseProduct(obs.y_tilde.real()).template cast<C>() +
              C(0, 1) * phi_w.cwiseProduct(obs.y_tilde.imag()).template cast<C>();
  pf.col(1) = phi_w.cwiseProduct(obs.a_tilde.real()).template cast<C>() +
              C(0, 1) * phi_w.cwiseProduct(obs.a_tilde.imag()).template cast<C>();
  CMatrix<Real> f(2, q);
  f.row(0) = obs.y_tilde.adjoint();
  f.row(1) = obs.a_tilde.adjoint();
  CMatrix<Real> s = f * pf;
  s(0, 0) += phi_x;
  s(1, 1) += static_cast<Real>(params.phi_a);
  const C det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
  if (std::abs(det) == Real(0) || !std::isfinite(std::abs(det)))
    throw NumericalFailure("kalman_gain: singular 2x2 observation covariance");
  CMatrix<Real> inv(2, 2);
  inv << s(1, 1), -s(0, 1), -s(1, 0), s(0, 0);
  return pf * (inv / det);
}

/// w(n) = w(n-1) + K (d - F w(n-1)), d = [0; 1]. The history is not touched.
template <typename Real>
void apa_update(ApaState<Real>& state, const Observation<Real>& obs, Real phi_x,
                const ApaParams& params, MacCounter* macs = nullptr) {
  if (obs.y_tilde.size() != state.length() || obs.a_tilde.size() != state.length())
    throw InvalidArgument("apa_update: observation length does not match state");
  if (!(phi_x >= Real(0))) throw InvalidArgument("apa_update: phi_x must be non-negative");
  const std::complex<Real> prior = state.w.dot(obs.y_tilde);
  if (macs) {
    MacCounter::Scope scope(*macs, "prior");
    macs->complex_mac(static_cast<std::uint64_t>(state.length()));
  }
  detail::apa_update_kernel(state.w, obs.y_tilde, obs.a_tilde.head(state.mics), prior, phi_x,
                            {params.phi_b, params.phi_r, params.phi_a}, macs);
}

/// X_b - alpha_r * min(|X_r|, |X_b|) * X_r / |X_r|.
template <typename Real>
std::complex<Real> limited_output(std::complex<Real> x_b, std::complex<Real> x_r, Real alpha_r) {
  const Real mag_r = std::abs(x_r);
  if (mag_r == Real(0)) return x_b;
  return x_b - alpha_r * std::min(mag_r, std::abs(x_b)) * (x_r / mag_r);
}

/// One frame for one bin: PSD estimate, optional gain, floor, update,
/// a posteriori output through the limiter, then the history advances.
template <typename Real, typename DerivedY, typename DerivedA>
std::complex<Real> process_bin(ApaState<Real>& state, const Eigen::MatrixBase<DerivedY>& y_now,
                               const Eigen::MatrixBase<DerivedA>& a, const ApaParams& params,
                               Real gain = Real(1), MacCounter* macs = nullptr) {
  using C = std::complex<Real>;
  if (a.size() != state.mics) throw InvalidArgument("process_bin: steering size mismatch");
  detail::stack_into(state, y_now, state.scratch);
  const C prior = state.w.dot(state.scratch);

  Real phi_x = std::norm(prior);
  if (gain != Real(1)) phi_x = apply_gain(phi_x, gain);
  phi_x = psd_floor(phi_x, y_now, static_cast<Real>(params.eta), params.floor_mode);

  detail::apa_update_kernel(state.w, state.scratch, a, prior, phi_x,
                            {params.phi_b, params.phi_r, params.phi_a}, macs);

  const Index m = state.mics;
  const Index r = state.length() - m;
  const C x_b = state.w.head(m).dot(state.scratch.head(m));
  const C x_r = r > 0 ? -state.w.tail(r).dot(state.scratch.tail(r)) : C(0);
  if (macs) {
    {
      MacCounter::Scope scope(*macs, "prior");
      macs->complex_mac(static_cast<std::uint64_t>(state.length()));
    }
    MacCounter::Scope scope(*macs, "output");
    macs->complex_mac(static_cast<std::uint64_t>(state.length()));
  }
  state.history.push(y_now);
  return limited_output(x_b, x_r, static_cast<Real>(params.alpha_r));
}

/// One frame for all bins. frame is K x M (row k = y(k, n)^T); steering is
/// M x K; states holds one entry per bin.
template <typename Real>
CVector<Real> process_frame(std::span<ApaState<Real>> states, const CMatrix<Real>& frame,
                            const CMatrix<Real>& steering, const ApaParams& params,
                            const GainProvider* gain = nullptr, Index frame_index = 0) {
  const Index bins = static_cast<Index>(states.size());
  if (frame.rows() != bins || steering.cols() != bins)
    throw InvalidArgument("process_frame: bin count mismatch");
  CVector<Real> out(bins);
  for (Index k = 0; k < bins; ++k) {
    const Real g = gain ? static_cast<Real>(gain->gain(k, frame_index)) : Real(1);
    out(k) = process_bin(states[static_cast<size_t>(k)], frame.row(k).transpose(),
                         steering.col(k), params, g);
  }
  return out;
}

}  // namespace convbf

#endif  // CONVBF_CONV_APA_HPP
