// convbf command line: enhance, simulate, metrics, bench.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include "convbf/bench.hpp"
#include "convbf/metrics.hpp"
#include "convbf/pipeline.hpp"
#include "convbf/scene.hpp"

namespace {

using namespace convbf;

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, sep)) parts.push_back(item);
  return parts;
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw InvalidArgument("cannot parse " + what + " '" + text + "'");
  }
}

Index parse_index(const std::string& text, const std::string& what) {
  const double value = parse_double(text, what);
  if (value != std::floor(value)) throw InvalidArgument(what + " must be an integer: " + text);
  return static_cast<Index>(value);
}

// "circular:M:R" or a geometry file.
ArrayGeometry load_geometry(const std::string& spec) {
  if (spec.rfind("circular:", 0) == 0) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw InvalidArgument("geometry must be circular:M:R, got " + spec);
    return circular_array(parse_index(parts[1], "microphone count"),
                          parse_double(parts[2], "array radius"));
  }
  return read_geometry(spec);
}

// "L1,L2,L3@F1,F2"; a single order without '@' is a uniform plan.
BandPlan parse_bands(const std::string& text, Index delay) {
  BandPlan plan;
  plan.delay = delay;
  const auto at = text.find('@');
  plan.orders.clear();
  for (const auto& item : split(text.substr(0, at), ','))
    plan.orders.push_back(parse_index(item, "band order"));
  plan.transition_freqs.clear();
  if (at != std::string::npos) {
    for (const auto& item : split(text.substr(at + 1), ','))
      plan.transition_freqs.push_back(parse_double(item, "transition frequency"));
  }
  plan.validate();
  return plan;
}

std::string join(const std::vector<Index>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

struct EnhanceArgs {
  std::string input, output, method = "conv-mpdr-apa", geometry = "circular:8:0.1", doa = "auto";
  Index delay = 1;
  std::string bands = "12,8,6@800,2000";
  double phi_b = -37.0, phi_r = -40.0, phi_a = -120.0, eta = -25.0, alpha_r = 1.0;
  bool prior_pass = true;
  std::string gain_mask, floor_mode = "mean", format = "float32";
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

int cmd_enhance(const EnhanceArgs& args) {
  RunConfig config;
  config.method = parse_method(args.method);
  config.geometry = load_geometry(args.geometry);
  if (args.doa != "auto") config.doa_deg = parse_double(args.doa, "--doa");
  ApaParams& params = config.options.params;
  params.phi_b = db_to_power(args.phi_b);
  params.phi_r = db_to_power(args.phi_r);
  params.phi_a = db_to_power(args.phi_a);
  params.eta = db_to_power(args.eta);
  params.alpha_r = args.alpha_r;
  params.bands = parse_bands(args.bands, args.delay);
  if (args.floor_mode == "mean") {
    params.floor_mode = FloorMode::kMeanPower;
  } else if (args.floor_mode == "total") {
    params.floor_mode = FloorMode::kTotalPower;
  } else {
    throw InvalidArgument("--floor-mode must be mean or total");
  }
  params.validate();
  config.options.prior_pass = args.prior_pass;
  config.options.threads = std::max(1u, args.threads);

  const AudioBuffer input = read_wav(args.input);
  std::unique_ptr<GainProvider> mask;
  if (!args.gain_mask.empty()) {
    mask = mask_file_provider(args.gain_mask, config.stft.bins(),
                              enhance_frames(input.length(), config.stft));
    config.options.gain = mask.get();
  }

  const EnhanceResult result = enhance(input, config);
  write_wav(args.output, result.output,
            args.format == "pcm16" ? SampleFormat::kPcm16 : SampleFormat::kFloat32);

  std::cout << "method=" << method_name(config.method) << " Q=" << join(result.filter_lengths)
            << " frames=" << result.frames << " doa_deg=" << result.doa_deg
            << " elapsed_s=" << result.seconds << " phi_b=" << args.phi_b << "dB("
            << params.phi_b << ") phi_r=" << args.phi_r << "dB(" << params.phi_r
            << ") phi_a=" << args.phi_a << "dB(" << params.phi_a << ") eta=" << args.eta << "dB("
            << params.eta << ")\n";
  return 0;
}

struct SimulateArgs {
  std::string kind = "mclp", output, input, geometry = "circular:4:0.05";
  double doa = 0.0, seconds = 3.0, snr = 30.0, radius = 0.9, t60 = 0.5, drr = 0.0;
  Index order = 6, delay = 1;
  bool zero_prediction = false;
  std::uint64_t seed = 1;
};

int cmd_simulate(const SimulateArgs& args) {
  const StftConfig config;
  const ArrayGeometry geom = load_geometry(args.geometry);
  Eigen::VectorXd dry;
  if (args.input.empty()) {
    dry = synthetic_speech(static_cast<Index>(args.seconds * config.sample_rate),
                           config.sample_rate, args.seed);
  } else {
    const AudioBuffer buffer = read_wav(args.input);
    resample_check(buffer, config.sample_rate);
    dry = buffer.samples.row(0).transpose();
  }

  Scene scene;
  if (args.kind == "mclp") {
    const SteeringVector steering = plane_wave_steering(geom, args.doa * kDegToRad, 0.0, config);
    bool built = false;
    std::string last_error;
    for (std::uint64_t attempt = 0; attempt < 10 && !built; ++attempt) {
      const std::uint64_t seed = args.seed + attempt;
      try {
        const MclpModel model =
            args.zero_prediction
                ? zero_mclp(geom.size(), config.bins(), args.order, args.delay)
                : random_mclp(geom.size(), config.bins(), args.order, args.delay, seed, args.radius);
        scene = mclp_scene(dry, steering, model, args.snr, seed, config);
        built = true;
      } catch (const InvalidArgument& err) {
        last_error = err.what();
        std::cerr << "simulate: seed " << seed << " rejected: " << last_error << "\n";
      }
    }
    if (!built) throw NumericalFailure("simulate: no stable MCLP draw in 10 seeds: " + last_error);
    scene.meta.doa_deg = args.doa;
  } else if (args.kind == "rir") {
    RirSceneOptions options;
    options.azimuth = args.doa * kDegToRad;
    options.t60 = args.t60;
    options.drr_db = args.drr;
    options.snr_db = args.snr;
    options.seed = args.seed;
    scene = exp_decay_rir_scene(dry, geom, options, config);
  } else {
    throw InvalidArgument("--kind must be mclp or rir");
  }

  export_scene(args.output, scene);
  write_geometry((std::filesystem::path(args.output) / "geometry.txt").string(), geom);
  std::cout << "kind=" << scene.meta.kind << " seed=" << scene.meta.seed
            << " srr_db=" << scene.meta.srr_db << " frames=" << scene.mixture.frames()
            << " dir=" << args.output << "\n";
  return 0;
}

int cmd_metrics(const std::string& ref_path, const std::string& est_path,
                const std::string& trace_path) {
  const AudioBuffer ref = read_wav(ref_path);
  const AudioBuffer est = read_wav(est_path);
  if (ref.sample_rate != est.sample_rate)
    throw InvalidArgument("metrics: sample rates differ (" + std::to_string(ref.sample_rate) +
                          " vs " + std::to_string(est.sample_rate) + ")");
  MetricConfig config;
  config.sample_rate = ref.sample_rate;
  const MetricReport report =
      evaluate(ref.samples.row(0).transpose(), est.samples.row(0).transpose(), config);
  std::cout << format_report(report);
  if (!trace_path.empty()) write_trace_csv(trace_path, report);
  return 0;
}

struct BenchArgs {
  Index mics = 2, delay = 1, timing_mics = 8;
  std::string q_list = "26,52,104,208", methods, orders = "12";
  double seconds = 2.0;
  int runs = 5;
  std::string csv;
};

int cmd_bench(const BenchArgs& args) {
  std::vector<MeasuredPoint> points;
  for (const auto& item : split(args.q_list, ',')) {
    const Index q = parse_index(item, "Q");
    if (q % args.mics != 0 || q / args.mics < 2)
      throw InvalidArgument("bench: Q=" + item + " is not M(L-D+2) for M=" +
                            std::to_string(args.mics));
    const Index order = q / args.mics + args.delay - 2;
    if (order <= args.delay)
      throw InvalidArgument("bench: Q=" + item + " needs L > D");
    points.push_back({q, static_cast<double>(count_apa_update(args.mics, order, args.delay).total())});
  }
  std::cout << "Q,apa_macs,quadratic_ref,q2.37_ref\n";
  for (const CurveRow& row : reference_curves(points))
    std::cout << row.q << ',' << row.apa << ',' << row.quadratic << ',' << row.fast_inverse << '\n';
  std::cout << "exponent=" << fit_power_law(points) << "\n";

  if (!args.methods.empty()) {
    std::vector<Index> orders;
    for (const auto& item : split(args.orders, ',')) orders.push_back(parse_index(item, "order"));
    std::vector<TimingRow> rows;
    for (const auto& name : split(args.methods, ',')) {
      const auto part = wallclock_sweep(parse_method(name), args.timing_mics, orders, args.seconds,
                                        args.runs, args.delay);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    if (args.csv.empty()) {
      write_timing_csv(std::cout, rows);
    } else {
      std::ofstream out(args.csv);
      if (!out) throw IoError("bench: cannot write " + args.csv);
      write_timing_csv(out, rows);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convolutional beamforming with affine projection updates"};
  app.require_subcommand(1);

  EnhanceArgs enh;
  auto* enhance_cmd = app.add_subcommand("enhance", "Beamform a multichannel WAV file");
  enhance_cmd->add_option("--input", enh.input, "Input WAV (M channels)")->required();
  enhance_cmd->add_option("--output", enh.output, "Output WAV (mono)")->required();
  enhance_cmd->add_option("--method", enh.method,
                          "ref-mic, delay-sum, sd-mvdr, mpdr-apa, conv-mpdr-apa, conv-sdmvdr");
  enhance_cmd->add_option("--geometry", enh.geometry, "Geometry file or circular:M:R");
  enhance_cmd->add_option("--doa", enh.doa, "auto or azimuth in degrees");
  enhance_cmd->add_option("--D", enh.delay, "Prediction delay in frames");
  enhance_cmd->add_option("--bands", enh.bands, "Orders and transitions, L1,L2,L3@F1,F2");
  enhance_cmd->add_option("--phi-b", enh.phi_b, "Beamformer coefficient variance (dB)");
  enhance_cmd->add_option("--phi-r", enh.phi_r, "Reverb canceller coefficient variance (dB)");
  enhance_cmd->add_option("--phi-a", enh.phi_a, "Constraint error PSD (dB)");
  enhance_cmd->add_option("--eta", enh.eta, "Speech PSD floor (dB)");
  enhance_cmd->add_option("--alpha-r", enh.alpha_r, "Amount of reverb reduction in [0, 1]");
  enhance_cmd->add_option("--prior-pass", enh.prior_pass, "Run the utterance twice");
  enhance_cmd->add_option("--gain-mask", enh.gain_mask, "Spectral gain mask file");
  enhance_cmd->add_option("--floor-mode", enh.floor_mode, "PSD floor power: mean or total");
  enhance_cmd->add_option("--format", enh.format, "Output sample format: float32 or pcm16");
  enhance_cmd->add_option("--seed", enh.seed, "Unused by the deterministic pipeline");
  enhance_cmd->add_option("--threads", enh.threads, "Worker threads over frequency bins");

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a test scene");
  simulate_cmd->add_option("--kind", sim.kind, "mclp or rir");
  simulate_cmd->add_option("--output", sim.output, "Output directory")->required();
  simulate_cmd->add_option("--input", sim.input, "Dry source WAV (default: synthetic)");
  simulate_cmd->add_option("--geometry", sim.geometry, "Geometry file or circular:M:R");
  simulate_cmd->add_option("--doa", sim.doa, "Source azimuth in degrees");
  simulate_cmd->add_option("--seconds", sim.seconds, "Length of the synthetic source");
  simulate_cmd->add_option("--snr", sim.snr, "SNR in dB");
  simulate_cmd->add_option("--L", sim.order, "MCLP order");
  simulate_cmd->add_option("--D", sim.delay, "MCLP delay");
  simulate_cmd->add_option("--radius", sim.radius, "MCLP spectral radius");
  simulate_cmd->add_flag("--zero-prediction", sim.zero_prediction, "Use C_l = 0");
  simulate_cmd->add_option("--t60", sim.t60, "Reverberation time in seconds (rir)");
  simulate_cmd->add_option("--drr", sim.drr, "Direct-to-reverberant ratio in dB (rir)");
  simulate_cmd->add_option("--seed", sim.seed, "Random seed");

  std::string ref_path, est_path, trace_path;
  auto* metrics_cmd = app.add_subcommand("metrics", "CD, fwSNR and SRR of an estimate");
  metrics_cmd->add_option("--ref", ref_path, "Reference WAV")->required();
  metrics_cmd->add_option("--est", est_path, "Estimate WAV")->required();
  metrics_cmd->add_option("--trace", trace_path, "Per-frame CSV trace");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "MAC counts and wall-clock timings");
  bench_cmd->add_option("--mics", bench.mics, "Microphones for the MAC sweep");
  bench_cmd->add_option("--D", bench.delay, "Prediction delay");
  bench_cmd->add_option("--q", bench.q_list, "Filter lengths for the MAC sweep");
  bench_cmd->add_option("--methods", bench.methods, "Comma list of methods to time");
  bench_cmd->add_option("--orders", bench.orders, "Orders L for the timing sweep");
  bench_cmd->add_option("--timing-mics", bench.timing_mics, "Microphones for timing");
  bench_cmd->add_option("--seconds", bench.seconds, "Audio seconds per timing run");
  bench_cmd->add_option("--runs", bench.runs, "Timing repetitions (median)");
  bench_cmd->add_option("--csv", bench.csv, "Timing CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*enhance_cmd) return cmd_enhance(enh);
    if (*simulate_cmd) return cmd_simulate(sim);
    if (*metrics_cmd) return cmd_metrics(ref_path, est_path, trace_path);
    if (*bench_cmd) return cmd_bench(bench);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}
