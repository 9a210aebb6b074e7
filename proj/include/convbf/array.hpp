#ifndef CONVBF_ARRAY_HPP
#define CONVBF_ARRAY_HPP

#include <string>
#include <vector>

#include "convbf/stft.hpp"

namespace convbf {

inline constexpr double kSpeedOfSound = 343.0;

struct ArrayGeometry {
  Eigen::MatrixX3d positions;  // one row per microphone, meters
  Index reference_mic = 0;

  Index size() const { return positions.rows(); }
  double distance(Index i, Index j) const {
    return (positions.row(i) - positions.row(j)).norm();
  }
  void validate() const;
};

/// Relative transfer functions; column k holds a(k), reference element 1.
struct SteeringVector {
  Eigen::MatrixXcd values;  // M x K

  Index mics() const { return values.rows(); }
  Index bins() const { return values.cols(); }
  Eigen::VectorXcd at(Index k) const { return values.col(k); }
};

/// Diffuse-field coherence, one real symmetric M x M matrix per bin.
using CoherenceMatrix = std::vector<Eigen::MatrixXd>;

ArrayGeometry circular_array(Index mics, double radius);

/// Plain text: one `x y z` line per microphone, `#` starts a comment.
/// Line 0 is the reference microphone.
ArrayGeometry read_geometry(const std::string& path);
ArrayGeometry parse_geometry(const std::string& text);
void write_geometry(const std::string& path, const ArrayGeometry& geom);

/// Unit vector pointing from the array towards the source.
Eigen::Vector3d direction_vector(double azimuth, double elevation);

/// Plane-wave arrival delays in seconds relative to the array origin.
Eigen::VectorXd plane_wave_delays(const ArrayGeometry& geom, double azimuth,
                                  double elevation, double c = kSpeedOfSound);

SteeringVector plane_wave_steering(const ArrayGeometry& geom, double azimuth,
                                   double elevation, const StftConfig& config,
                                   double c = kSpeedOfSound);

CoherenceMatrix diffuse_coherence(const ArrayGeometry& geom, const StftConfig& config,
                                  double c = kSpeedOfSound);

struct SrpPhatOptions {
  double grid_step = 5.0 * 3.14159265358979323846 / 180.0;  // radians
  double min_freq = 300.0;
  double max_freq = 4000.0;
  double c = kSpeedOfSound;
};

/// Grid search over azimuth (elevation 0) maximizing the PHAT-weighted
/// steered response power. Ties resolve to the lowest grid index.
double srp_phat_localize(const Spectrogram& spec, const ArrayGeometry& geom,
                         const SrpPhatOptions& options = {});

/// Response power for each grid azimuth, in grid order.
std::vector<double> srp_phat_response(const Spectrogram& spec, const ArrayGeometry& geom,
                                      const SrpPhatOptions& options = {});

}  // namespace convbf

#endif  // CONVBF_ARRAY_HPP
