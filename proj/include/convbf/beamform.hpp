#ifndef CONVBF_BEAMFORM_HPP
#define CONVBF_BEAMFORM_HPP

#include <limits>

#include "convbf/array.hpp"

namespace convbf {

inline constexpr double kDefaultDiagonalLoading = 0.01;

/// Per-bin weights applied as w^H y; column k holds w(k).
struct FixedWeights {
  Eigen::MatrixXcd values;  // M x K

  Index mics() const { return values.rows(); }
  Index bins() const { return values.cols(); }
};

/// a / (a^H a) for a single bin.
template <typename Derived>
CVector<typename Derived::RealScalar> delay_and_sum_weights(const Eigen::MatrixBase<Derived>& a) {
  using Real = typename Derived::RealScalar;
  const Real energy = a.squaredNorm();
  if (!(energy > Real(0))) throw InvalidArgument("delay_and_sum: zero-norm steering vector");
  return a / energy;
}

/// (G + delta I)^-1 a / (a^H (G + delta I)^-1 a) for a single bin.
template <typename DerivedA, typename DerivedG>
CVector<typename DerivedA::RealScalar> superdirective_weights(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedG>& coherence,
    typename DerivedA::RealScalar loading) {
  using Real = typename DerivedA::RealScalar;
  using C = std::complex<Real>;
  const Index mics = a.size();
  if (coherence.rows() != mics || coherence.cols() != mics)
    throw InvalidArgument("superdirective_mvdr: coherence/steering dimension mismatch");
  if (loading < Real(0)) throw InvalidArgument("superdirective_mvdr: negative diagonal loading");

  CMatrix<Real> loaded = coherence.template cast<C>();
  loaded.diagonal().array() += C(loading, 0);
  Eigen::LDLT<CMatrix<Real>> solver(loaded);
  const auto pivots = solver.vectorD().real();
  if (solver.info() != Eigen::Success ||
      !(pivots.minCoeff() > std::numeric_limits<Real>::epsilon() * mics * pivots.cwiseAbs().maxCoeff()))
    throw NumericalFailure("superdirective_mvdr: loaded coherence matrix is not positive definite");
  const CVector<Real> ginv_a = solver.solve(a.template cast<C>());
  const C denom = a.dot(ginv_a);  // a^H G^-1 a
  if (!std::isfinite(std::abs(denom)) || std::abs(denom) <= Real(0))
    throw NumericalFailure("superdirective_mvdr: singular loaded coherence matrix");
  return ginv_a / denom;
}

FixedWeights delay_and_sum(const SteeringVector& a);
FixedWeights superdirective_mvdr(const SteeringVector& a, const CoherenceMatrix& coherence,
                                 double loading = kDefaultDiagonalLoading);

/// Single-channel output w^H(k) y(k, n).
Spectrogram apply_fixed(const FixedWeights& w, const Spectrogram& spec);

}  // namespace convbf

#endif  // CONVBF_BEAMFORM_HPP
