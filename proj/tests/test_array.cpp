#include <gtest/gtest.h>

#include <fstream>

#include "convbf/array.hpp"
#include "convbf/beamform.hpp"
#include "convbf/scene.hpp"
#include "test_util.hpp"

using namespace convbf;

namespace {

constexpr double kPi = std::numbers::pi;

ArrayGeometry line_array(std::vector<double> xs) {
  ArrayGeometry g;
  g.positions = Eigen::MatrixX3d::Zero(static_cast<Index>(xs.size()), 3);
  for (size_t i = 0; i < xs.size(); ++i) g.positions(static_cast<Index>(i), 0) = xs[i];
  return g;
}

// Plane-wave mixture y = a X for a random source.
Spectrogram plane_wave_mixture(const ArrayGeometry& g, double azimuth, std::uint64_t seed) {
  StftConfig config;
  const Eigen::MatrixXd x = testutil::random_signal(1, 16000, seed);
  const Spectrogram dry = stft(x, config);
  const SteeringVector a = plane_wave_steering(g, azimuth, 0.0, config);
  Spectrogram y(g.size(), dry.frames(), config, dry.length());
  for (Index m = 0; m < g.size(); ++m)
    y.channel(m) = a.values.row(m).transpose().asDiagonal() * dry.channel(0);
  return y;
}

}  // namespace

TEST(CircularArray, ChordLength) {
  const ArrayGeometry g = circular_array(8, 0.10);
  EXPECT_NEAR(g.distance(0, 1), 2 * 0.10 * std::sin(kPi / 8), 1e-12);
  EXPECT_NEAR(g.distance(0, 1), 0.07654, 1e-5);
  EXPECT_EQ(g.reference_mic, 0);
}

TEST(CircularArray, SingleAndFour) {
  const ArrayGeometry one = circular_array(1, 0.3);
  EXPECT_EQ(one.size(), 1);
  EXPECT_NEAR((one.positions.row(0) - Eigen::RowVector3d(0.3, 0, 0)).norm(), 0.0, 1e-15);
  const ArrayGeometry four = circular_array(4, 0.1);
  Eigen::MatrixX3d expected(4, 3);
  expected << 0.1, 0, 0, 0, 0.1, 0, -0.1, 0, 0, 0, -0.1, 0;
  EXPECT_LT((four.positions - expected).norm(), 1e-15);
}

TEST(CircularArray, RejectsBadArguments) {
  EXPECT_THROW(circular_array(4, 0.0), InvalidArgument);
  EXPECT_THROW(circular_array(4, -1.0), InvalidArgument);
  EXPECT_THROW(circular_array(0, 0.1), InvalidArgument);
}

TEST(Geometry, FileRoundTrip) {
  const auto dir = testutil::temp_dir("geometry");
  const ArrayGeometry g = circular_array(5, 0.07);
  write_geometry((dir / "g.txt").string(), g);
  const ArrayGeometry back = read_geometry((dir / "g.txt").string());
  EXPECT_LT((back.positions - g.positions).norm(), 1e-12);
}

TEST(Geometry, ParseCommentsAndErrors) {
  const ArrayGeometry g = parse_geometry("# two mics\n0 0 0\n0.1 0 0  # second\n\n");
  ASSERT_EQ(g.size(), 2);
  EXPECT_DOUBLE_EQ(g.positions(1, 0), 0.1);
  EXPECT_THROW(parse_geometry("0 0\n"), InvalidArgument);
  EXPECT_THROW(parse_geometry("# nothing\n"), InvalidArgument);
  EXPECT_THROW(read_geometry("/nonexistent/geometry.txt"), IoError);
}

TEST(Steering, ZeroFrequencyIsAllOnes) {
  const SteeringVector a = plane_wave_steering(circular_array(8, 0.1), 1.1, 0.2, StftConfig{});
  EXPECT_LT((a.at(0) - Eigen::VectorXcd::Ones(8)).norm(), 1e-15);
}

TEST(Steering, ReferenceElementExactlyOne) {
  const SteeringVector a = plane_wave_steering(circular_array(8, 0.1), 0.7, 0.0, StftConfig{});
  for (Index k = 0; k < a.bins(); ++k) EXPECT_EQ(a.values(0, k), std::complex<double>(1.0, 0.0));
}

TEST(Steering, CollocatedMicIsOne) {
  const SteeringVector a = plane_wave_steering(line_array({0.0, 0.0, 0.05}), 0.3, 0.0, StftConfig{});
  for (Index k = 0; k < a.bins(); ++k) EXPECT_NEAR(std::abs(a.values(1, k) - 1.0), 0.0, 1e-15);
}

TEST(Steering, HalfWavelengthGivesPi) {
  // Source on the +x axis: mic 1 at x = 0.1715 hears the wave d/c earlier.
  StftConfig config;
  config.fft_len = 512;
  config.sample_rate = 16000;
  const ArrayGeometry g = line_array({0.0, 0.1715});
  const SteeringVector a = plane_wave_steering(g, 0.0, 0.0, config);
  const Index k = 32;  // 1000 Hz
  ASSERT_DOUBLE_EQ(config.bin_frequency(k), 1000.0);
  const double tau = 0.1715 / 343.0;
  EXPECT_NEAR(tau, 0.0005, 1e-12);
  EXPECT_NEAR(std::abs(std::arg(a.values(1, k))), kPi, 1e-9);
  // exp(+j 2 pi f tau) for an earlier arrival
  EXPECT_NEAR(std::abs(a.values(1, 16) - std::polar(1.0, 2 * kPi * 500.0 * tau)), 0.0, 1e-12);
}

TEST(DiffuseCoherence, ClosedForm) {
  StftConfig config;
  const ArrayGeometry g = line_array({0.0, 0.1715, 0.1715});
  const CoherenceMatrix gamma = diffuse_coherence(g, config);
  EXPECT_LT((gamma[0] - Eigen::MatrixXd::Ones(3, 3)).norm(), 1e-15);
  EXPECT_NEAR(gamma[32](0, 1), 0.0, 1e-12);
  for (Index k = 0; k < config.bins(); ++k) {
    EXPECT_DOUBLE_EQ(gamma[k](1, 2), 1.0);
    EXPECT_LT((gamma[k] - gamma[k].transpose()).norm(), 1e-15);
    EXPECT_TRUE((gamma[k].diagonal().array() == 1.0).all());
    EXPECT_LE(gamma[k].cwiseAbs().maxCoeff(), 1.0);
  }
  const double x = 2 * kPi * config.bin_frequency(10) * 0.1715 / 343.0;
  EXPECT_NEAR(gamma[10](0, 2), std::sin(x) / x, 1e-14);
}

TEST(DiffuseCoherence, PsdAfterLoading) {
  const CoherenceMatrix gamma = diffuse_coherence(circular_array(8, 0.1), StftConfig{});
  for (const auto& g : gamma) {
    Eigen::MatrixXd loaded = g + kDefaultDiagonalLoading * Eigen::MatrixXd::Identity(8, 8);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(loaded, Eigen::EigenvaluesOnly);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(SrpPhat, FindsBroadsideSource) {
  const ArrayGeometry g = circular_array(8, 0.1);
  const Spectrogram y = plane_wave_mixture(g, kPi / 2, 4);
  EXPECT_NEAR(srp_phat_localize(y, g) * 180 / kPi, 90.0, 5.0);
}

TEST(SrpPhat, TwoMicEndfire) {
  const ArrayGeometry g = line_array({0.0, 0.2});
  const Spectrogram y = plane_wave_mixture(g, 0.0, 5);
  const double est = srp_phat_localize(y, g);
  const double step = 5.0 * kPi / 180;
  // endfire responses are symmetric about the array axis; accept the mirror
  const double err = std::min(std::abs(est), std::abs(2 * kPi - est));
  EXPECT_LE(err, step + 1e-12);
}

TEST(SrpPhat, FlatResponsePicksFirstGridPoint) {
  // Collocated microphones see identical signals from every direction.
  const ArrayGeometry g = line_array({0.0, 0.0, 0.0});
  const Spectrogram y = plane_wave_mixture(g, 1.0, 6);
  const std::vector<double> response = srp_phat_response(y, g);
  for (double r : response) EXPECT_DOUBLE_EQ(r, response.front());
  EXPECT_EQ(srp_phat_localize(y, g), 0.0);
}

TEST(SrpPhat, ScaleInvariant) {
  const ArrayGeometry g = circular_array(4, 0.05);
  Spectrogram y = plane_wave_mixture(g, 2.0, 7);
  const double a = srp_phat_localize(y, g);
  for (Index m = 0; m < y.channels(); ++m) y.channel(m) *= 1e-3;
  EXPECT_EQ(srp_phat_localize(y, g), a);
}

TEST(SrpPhat, SingleMicUnsupported) {
  const ArrayGeometry g = circular_array(1, 0.05);
  const Spectrogram y = plane_wave_mixture(g, 0.0, 1);
  EXPECT_THROW(srp_phat_localize(y, g), Unsupported);
}
