#ifndef CONVBF_HISTORY_HPP
#define CONVBF_HISTORY_HPP

#include "convbf/types.hpp"

namespace convbf {

/// Ring buffer of the most recent `depth` microphone frames.
template <typename Real>
class FrameHistory {
 public:
  FrameHistory() = default;
  FrameHistory(Index mics, Index depth)
      : frames_(CMatrix<Real>::Zero(mics, depth)), head_(depth > 0 ? depth - 1 : 0) {}

  Index mics() const { return frames_.rows(); }
  Index depth() const { return frames_.cols(); }

  /// y(n - lag) for lag in [1, depth].
  auto delayed(Index lag) const {
    return frames_.col((head_ - (lag - 1) + depth()) % depth());
  }

  template <typename Derived>
  void push(const Eigen::MatrixBase<Derived>& y) {
    if (depth() == 0) return;
    head_ = (head_ + 1) % depth();
    frames_.col(head_) = y;
  }

  void clear() {
    frames_.setZero();
    head_ = depth() > 0 ? depth() - 1 : 0;
  }

  /// Writes [y(n-D); ...; y(n-depth)] into out, which must hold
  /// M * (depth - D + 1) entries.
  void stack(Index delay, Eigen::Ref<CVector<Real>> out) const {
    const Index m = mics();
    for (Index lag = delay, i = 0; lag <= depth(); ++lag, ++i)
      out.segment(i * m, m) = delayed(lag);
  }

 private:
  CMatrix<Real> frames_;
  Index head_ = 0;
};

}  // namespace convbf

#endif  // CONVBF_HISTORY_HPP
