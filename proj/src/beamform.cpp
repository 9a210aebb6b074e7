#include "convbf/beamform.hpp"

namespace convbf {

FixedWeights delay_and_sum(const SteeringVector& a) {
  FixedWeights w;
  w.values.resize(a.mics(), a.bins());
  for (Index k = 0; k < a.bins(); ++k) w.values.col(k) = delay_and_sum_weights(a.values.col(k));
  return w;
}

FixedWeights superdirective_mvdr(const SteeringVector& a, const CoherenceMatrix& coherence,
                                 double loading) {
  if (static_cast<Index>(coherence.size()) != a.bins())
    throw InvalidArgument("superdirective_mvdr: coherence bin count mismatch");
  FixedWeights w;
  w.values.resize(a.mics(), a.bins());
  for (Index k = 0; k < a.bins(); ++k)
    w.values.col(k) =
        superdirective_weights(a.values.col(k), coherence[static_cast<size_t>(k)], loading);
  return w;
}

Spectrogram apply_fixed(const FixedWeights& w, const Spectrogram& spec) {
  if (w.mics() != spec.channels() || w.bins() != spec.bins())
    throw InvalidArgument("apply_fixed: weights do not match spectrogram dimensions");
  Spectrogram out(1, spec.frames(), spec.config(), spec.length());
  Eigen::MatrixXcd& x = out.channel(0);
  for (Index m = 0; m < spec.channels(); ++m) {
    const Eigen::MatrixXcd& y = spec.channel(m);
    for (Index n = 0; n < spec.frames(); ++n)
      x.col(n).array() += w.values.row(m).transpose().conjugate().array() * y.col(n).array();
  }
  return out;
}

}  // namespace convbf
