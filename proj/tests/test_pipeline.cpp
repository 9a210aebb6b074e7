#include <gtest/gtest.h>

#include "convbf/conv_sdmvdr.hpp"
#include "convbf/pipeline.hpp"
#include "convbf/scene.hpp"
#include "test_util.hpp"

using namespace convbf;

namespace {

const StftConfig kConfig;

Spectrogram reverberant_mixture(Index mics, std::uint64_t seed) {
  const ArrayGeometry g = circular_array(mics, 0.05);
  const SteeringVector a = plane_wave_steering(g, 0.0, 0.0, kConfig);
  const MclpModel model = random_mclp(mics, kConfig.bins(), 4, 1, seed);
  return mclp_scene(synthetic_speech(12000, 16000, seed), a, model, 30.0, seed).mixture;
}

AudioBuffer anechoic_audio(const ArrayGeometry& g, double azimuth, Index samples, std::uint64_t seed) {
  RirSceneOptions opt;
  opt.azimuth = azimuth;
  opt.drr_db = std::numeric_limits<double>::infinity();
  opt.snr_db = std::numeric_limits<double>::infinity();
  const Scene s = exp_decay_rir_scene(synthetic_speech(samples, 16000, seed), g, opt);
  AudioBuffer buf;
  buf.samples = istft(s.mixture, kConfig);
  return buf;
}

bool same(const Spectrogram& a, const Spectrogram& b) {
  return a.channels() == b.channels() && a.channel(0) == b.channel(0);
}

}  // namespace

TEST(Methods, NamesRoundTrip) {
  for (const char* name : {"ref-mic", "delay-sum", "sd-mvdr", "mpdr-apa", "conv-mpdr-apa", "conv-sdmvdr"})
    EXPECT_EQ(method_name(parse_method(name)), name);
  EXPECT_THROW(parse_method("wpe"), InvalidArgument);
  EXPECT_TRUE(is_adaptive(Method::kConvSdMvdr));
  EXPECT_FALSE(is_adaptive(Method::kSdMvdr));
}

TEST(ReferenceRms, MatchesTimeDomain) {
  const Eigen::MatrixXd x = testutil::random_signal(2, 8192, 1) * 0.3;
  const Spectrogram spec = stft(x, kConfig);
  // interior frames see the full window weight; the first half-window does not
  const double td = std::sqrt(x.row(0).segment(256, 8192 - 512).squaredNorm() / (8192 - 512));
  EXPECT_NEAR(reference_rms(spec), td, 0.02 * td);
}

TEST(Beamform, PlainMpdrEqualsConvWithZeroOrder) {
  const Spectrogram y = reverberant_mixture(3, 2);
  const ArrayGeometry g = circular_array(3, 0.05);
  const SteeringVector a = plane_wave_steering(g, 0.0, 0.0, kConfig);
  ProcessOptions conv;
  conv.params.bands.orders = {0, 0, 0};
  const ProcessOptions plain;
  EXPECT_TRUE(same(beamform(y, g, a, Method::kConvMpdrApa, conv), beamform(y, g, a, Method::kMpdrApa, plain)));
}

TEST(Beamform, ThreadCountDoesNotChangeBits) {
  const Spectrogram y = reverberant_mixture(3, 3);
  const ArrayGeometry g = circular_array(3, 0.05);
  const SteeringVector a = plane_wave_steering(g, 0.0, 0.0, kConfig);
  for (Method m : {Method::kConvMpdrApa, Method::kConvSdMvdr}) {
    ProcessOptions one, many;
    one.params.bands = BandPlan::uniform(4, 1);
    many = one;
    many.threads = 4;
    EXPECT_TRUE(same(beamform(y, g, a, m, one), beamform(y, g, a, m, many))) << method_name(m);
  }
}

TEST(Beamform, AdaptiveOutputScalesWithInput) {
  Spectrogram y = reverberant_mixture(2, 4);
  const ArrayGeometry g = circular_array(2, 0.05);
  const SteeringVector a = plane_wave_steering(g, 0.0, 0.0, kConfig);
  ProcessOptions opt;
  opt.params.bands = BandPlan::uniform(4, 1);
  const Spectrogram base = beamform(y, g, a, Method::kConvMpdrApa, opt);
  for (Index m = 0; m < 2; ++m) y.channel(m) *= 8.0;
  const Spectrogram loud = beamform(y, g, a, Method::kConvMpdrApa, opt);
  EXPECT_LT((loud.channel(0) - 8.0 * base.channel(0)).norm(), 1e-6 * loud.channel(0).norm());
}

TEST(Beamform, OnesMaskEqualsNoMask) {
  const Spectrogram y = reverberant_mixture(2, 5);
  const ArrayGeometry g = circular_array(2, 0.05);
  const SteeringVector a = plane_wave_steering(g, 0.0, 0.0, kConfig);
  ProcessOptions opt;
  opt.params.bands = BandPlan::uniform(3, 1);
  const MaskGainProvider ones(Eigen::MatrixXf::Ones(kConfig.bins(), y.frames()));
  ProcessOptions masked = opt;
  masked.gain = &ones;
  EXPECT_TRUE(same(beamform(y, g, a, Method::kConvMpdrApa, opt), beamform(y, g, a, Method::kConvMpdrApa, masked)));
  EXPECT_TRUE(same(beamform(y, g, a, Method::kConvSdMvdr, opt), beamform(y, g, a, Method::kConvSdMvdr, masked)));
}

TEST(Beamform, PriorPassChangesAdaptiveOutput) {
  const Spectrogram y = reverberant_mixture(2, 6);
  const ArrayGeometry g = circular_array(2, 0.05);
  const SteeringVector a = plane_wave_steering(g, 0.0, 0.0, kConfig);
  ProcessOptions two, one;
  two.params.bands = BandPlan::uniform(3, 1);
  one = two;
  one.prior_pass = false;
  EXPECT_FALSE(same(beamform(y, g, a, Method::kConvMpdrApa, two), beamform(y, g, a, Method::kConvMpdrApa, one)));
}

TEST(Beamform, FixedMethodsAreDistortionless) {
  const ArrayGeometry g = circular_array(4, 0.05);
  const SteeringVector a = plane_wave_steering(g, 0.9, 0.0, kConfig);
  const Spectrogram dry = stft(testutil::random_signal(1, 8000, 7), kConfig);
  Spectrogram y(4, dry.frames(), kConfig, dry.length());
  for (Index m = 0; m < 4; ++m) y.channel(m) = a.values.row(m).transpose().asDiagonal() * dry.channel(0);
  for (Method m : {Method::kRefMic, Method::kDelaySum, Method::kSdMvdr}) {
    const Spectrogram out = beamform(y, g, a, m, ProcessOptions{});
    EXPECT_LT((out.channel(0) - dry.channel(0)).norm(), 1e-9 * dry.channel(0).norm()) << method_name(m);
  }
  // conv-sdmvdr bins with order 0 fall back to the fixed beamformer
  ProcessOptions zero;
  zero.params.bands = BandPlan::uniform(0, 1);
  const Spectrogram out = beamform(y, g, a, Method::kConvSdMvdr, zero);
  EXPECT_LT((out.channel(0) - dry.channel(0)).norm(), 1e-9 * dry.channel(0).norm());
}

TEST(Enhance, RefMicReproducesInput) {
  const ArrayGeometry g = circular_array(3, 0.05);
  const AudioBuffer in = anechoic_audio(g, 0.5, 9000, 8);
  RunConfig cfg;
  cfg.method = Method::kRefMic;
  cfg.geometry = g;
  cfg.doa_deg = 0.0;
  const EnhanceResult r = enhance(in, cfg);
  ASSERT_EQ(r.output.length(), in.length());
  EXPECT_LT(testutil::rel_error_db(r.output.samples.row(0), in.samples.row(0)), -50.0);
  EXPECT_EQ(r.frames, enhance_frames(in.length(), kConfig));
}

TEST(Enhance, LocalizesAndReportsFilterLengths) {
  const ArrayGeometry g = circular_array(4, 0.1);
  const AudioBuffer in = anechoic_audio(g, std::numbers::pi / 2, 16000, 9);
  RunConfig cfg;
  cfg.geometry = g;
  const EnhanceResult r = enhance(in, cfg);
  EXPECT_NEAR(r.doa_deg, 90.0, 5.0);
  EXPECT_EQ(r.filter_lengths, (std::vector<Index>{4 * 13, 4 * 9, 4 * 7}));
  EXPECT_EQ(r.output.channels(), 1);
}

TEST(Enhance, Errors) {
  const ArrayGeometry g = circular_array(3, 0.05);
  AudioBuffer in = anechoic_audio(g, 0.5, 4000, 1);
  RunConfig cfg;
  cfg.geometry = circular_array(2, 0.05);
  EXPECT_THROW(enhance(in, cfg), InvalidArgument);
  cfg.geometry = g;
  in.sample_rate = 48000;
  EXPECT_THROW(enhance(in, cfg), InvalidArgument);
  in.sample_rate = 16000;
  cfg.options.params.alpha_r = 2.0;
  EXPECT_THROW(enhance(in, cfg), InvalidArgument);
}

TEST(Enhance, SilentInputStaysSilent) {
  AudioBuffer in;
  in.samples = Eigen::MatrixXd::Zero(2, 4000);
  RunConfig cfg;
  cfg.geometry = circular_array(2, 0.05);
  cfg.doa_deg = 0.0;
  for (Method m : {Method::kConvMpdrApa, Method::kConvSdMvdr, Method::kMpdrApa}) {
    cfg.method = m;
    EXPECT_EQ(enhance(in, cfg).output.samples.norm(), 0.0) << method_name(m);
  }
}
