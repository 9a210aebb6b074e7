#include "convbf/array.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace convbf {

namespace {

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

}  // namespace

void ArrayGeometry::validate() const {
  if (positions.rows() < 1) throw InvalidArgument("ArrayGeometry: need at least one microphone");
  if (reference_mic < 0 || reference_mic >= positions.rows())
    throw InvalidArgument("ArrayGeometry: reference microphone out of range");
  if (!positions.allFinite()) throw InvalidArgument("ArrayGeometry: non-finite position");
}

ArrayGeometry circular_array(Index mics, double radius) {
  if (mics < 1) throw InvalidArgument("circular_array: need at least one microphone");
  if (!(radius > 0.0)) throw InvalidArgument("circular_array: radius must be positive");
  ArrayGeometry geom;
  geom.positions.resize(mics, 3);
  for (Index m = 0; m < mics; ++m) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(mics);
    geom.positions.row(m) << radius * std::cos(angle), radius * std::sin(angle), 0.0;
  }
  return geom;
}

ArrayGeometry parse_geometry(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Eigen::RowVector3d> rows;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double x, y, z;
    if (!(fields >> x)) continue;  // blank or comment-only line
    if (!(fields >> y >> z))
      throw InvalidArgument("geometry: line " + std::to_string(line_no) + " needs `x y z`");
    std::string extra;
    if (fields >> extra)
      throw InvalidArgument("geometry: trailing data on line " + std::to_string(line_no));
    rows.emplace_back(x, y, z);
  }
  ArrayGeometry geom;
  geom.positions.resize(static_cast<Index>(rows.size()), 3);
  for (size_t i = 0; i < rows.size(); ++i) geom.positions.row(static_cast<Index>(i)) = rows[i];
  geom.validate();
  return geom;
}

ArrayGeometry read_geometry(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("geometry: cannot open " + path);
  std::stringstream buffer;
  buffer << file.rdbuf();
  return parse_geometry(buffer.str());
}

void write_geometry(const std::string& path, const ArrayGeometry& geom) {
  std::ofstream file(path);
  if (!file) throw IoError("geometry: cannot write " + path);
  file.precision(17);
  file << "# x y z [m], reference microphone first\n";
  for (Index m = 0; m < geom.size(); ++m)
    file << geom.positions(m, 0) << ' ' << geom.positions(m, 1) << ' ' << geom.positions(m, 2) << '\n';
  if (!file) throw IoError("geometry: write failed for " + path);
}

Eigen::Vector3d direction_vector(double azimuth, double elevation) {
  return {std::cos(azimuth) * std::cos(elevation), std::sin(azimuth) * std::cos(elevation),
          std::sin(elevation)};
}

Eigen::VectorXd plane_wave_delays(const ArrayGeometry& geom, double azimuth, double elevation,
                                  double c) {
  // A microphone displaced towards the source receives the wavefront earlier.
  return -(geom.positions * direction_vector(azimuth, elevation)) / c;
}

SteeringVector plane_wave_steering(const ArrayGeometry& geom, double azimuth, double elevation,
                                   const StftConfig& config, double c) {
  geom.validate();
  const Eigen::VectorXd tau = plane_wave_delays(geom, azimuth, elevation, c);
  const Eigen::VectorXd relative = tau.array() - tau(geom.reference_mic);
  SteeringVector a;
  a.values.resize(geom.size(), config.bins());
  for (Index k = 0; k < config.bins(); ++k) {
    const double omega = 2.0 * std::numbers::pi * config.bin_frequency(k);
    for (Index m = 0; m < geom.size(); ++m)
      a.values(m, k) = std::polar(1.0, -omega * relative(m));
    a.values(geom.reference_mic, k) = cd(1.0, 0.0);
  }
  return a;
}

CoherenceMatrix diffuse_coherence(const ArrayGeometry& geom, const StftConfig& config, double c) {
  geom.validate();
  const Index mics = geom.size();
  Eigen::MatrixXd dist(mics, mics);
  for (Index i = 0; i < mics; ++i)
    for (Index j = 0; j < mics; ++j) dist(i, j) = geom.distance(i, j);

  CoherenceMatrix gamma(static_cast<size_t>(config.bins()));
  for (Index k = 0; k < config.bins(); ++k) {
    const double scale = 2.0 * std::numbers::pi * config.bin_frequency(k) / c;
    Eigen::MatrixXd& g = gamma[static_cast<size_t>(k)];
    g.resize(mics, mics);
    for (Index i = 0; i < mics; ++i) {
      g(i, i) = 1.0;
      for (Index j = i + 1; j < mics; ++j) g(i, j) = g(j, i) = sinc(scale * dist(i, j));
    }
  }
  return gamma;
}

std::vector<double> srp_phat_response(const Spectrogram& spec, const ArrayGeometry& geom,
                                      const SrpPhatOptions& options) {
  geom.validate();
  if (geom.size() < 2) throw Unsupported("srp_phat_localize: needs at least two microphones");
  if (spec.channels() != geom.size())
    throw InvalidArgument("srp_phat_localize: channel count does not match geometry");
  if (spec.frames() == 0) throw InvalidArgument("srp_phat_localize: empty spectrogram");
  if (!(options.grid_step > 0.0)) throw InvalidArgument("srp_phat_localize: grid step must be positive");

  const StftConfig& config = spec.config();
  std::vector<Index> bins;
  for (Index k = 0; k < config.bins(); ++k) {
    const double f = config.bin_frequency(k);
    if (f >= options.min_freq && f <= options.max_freq) bins.push_back(k);
  }

  // PHAT: keep phase only.
  std::vector<Eigen::MatrixXcd> phat;
  phat.reserve(bins.size());
  for (Index k : bins) {
    Eigen::MatrixXcd y = spec.bin_matrix(k);
    for (Index i = 0; i < y.size(); ++i) {
      const double mag = std::abs(y(i));
      y(i) = mag > 0.0 ? y(i) / mag : cd(0.0, 0.0);
    }
    phat.push_back(std::move(y));
  }

  const auto grid_size =
      static_cast<Index>(std::ceil(2.0 * std::numbers::pi / options.grid_step - 1e-9));
  std::vector<double> response(static_cast<size_t>(grid_size), 0.0);
  for (Index g = 0; g < grid_size; ++g) {
    const double azimuth = static_cast<double>(g) * options.grid_step;
    const SteeringVector a = plane_wave_steering(geom, azimuth, 0.0, config, options.c);
    double power = 0.0;
    for (size_t b = 0; b < bins.size(); ++b) {
      const Eigen::RowVectorXcd beam = a.values.col(bins[b]).adjoint() * phat[b];
      power += beam.squaredNorm();
    }
    response[static_cast<size_t>(g)] = power;
  }
  return response;
}

double srp_phat_localize(const Spectrogram& spec, const ArrayGeometry& geom,
                         const SrpPhatOptions& options) {
  const std::vector<double> response = srp_phat_response(spec, geom, options);
  size_t best = 0;
  for (size_t g = 1; g < response.size(); ++g)
    if (response[g] > response[best]) best = g;
  return static_cast<double>(best) * options.grid_step;
}

}  // namespace convbf
