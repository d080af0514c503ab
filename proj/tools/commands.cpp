#include "commands.hpp"

#include "blendfit/error.hpp"
#include "blendfit/eval.hpp"
#include "blendfit/model_io.hpp"
#include "blendfit/pipeline.hpp"
#include "blendfit/stream_io.hpp"
#include "blendfit/synth.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace blendfit::cli {

namespace {

using Clock = std::chrono::steady_clock;

/// Bad invocation or unreadable/unwritable path: exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Io {
  std::istream& in;
  std::ostream& out;
  std::shared_ptr<spdlog::logger> log;
};

class Input {
 public:
  Input(const std::string& path, std::istream& stdin_stream) {
    if (path == "-") {
      stream_ = &stdin_stream;
      return;
    }
    file_.open(path);
    if (!file_) throw UsageError("cannot open input file '" + path + "'");
    stream_ = &file_;
  }
  std::istream& get() { return *stream_; }

 private:
  std::ifstream file_;
  std::istream* stream_ = nullptr;
};

class Output {
 public:
  Output(const std::string& path, std::ostream& stdout_stream) {
    if (path == "-") {
      stream_ = &stdout_stream;
      return;
    }
    file_.open(path);
    if (!file_) throw UsageError("cannot open output file '" + path + "'");
    stream_ = &file_;
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

pipeline::PipelineModel load_model_file(const std::string& path, std::istream& in) {
  Input model_in(path, in);
  return model_io::load_model(model_in.get());
}

std::string opt_fixed(const std::optional<double>& v, int decimals) {
  return v ? fmt::format("{:.{}f}", *v, decimals) : std::string("-");
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string landmarks;
  std::string targets;
  std::string config;
  std::string out;
};

int cmd_train(const TrainArgs& a, Io& io) {
  Input lm_in(a.landmarks, io.in);
  Input tg_in(a.targets, io.in);
  auto config = pipeline::TrainConfig::defaults();
  if (!a.config.empty()) {
    Input cfg_in(a.config, io.in);
    config = model_io::load_train_config(cfg_in.get());
  }
  if (std::none_of(config.channels.begin(), config.channels.end(),
                   [](const auto& c) { return c.enabled; })) {
    io.log->error("no enabled channels");
    return kExitDomain;
  }

  const auto landmarks = read_landmark_stream(lm_in.get());
  const auto targets = read_blendshape_stream(tg_in.get());
  io.log->info("training on {} frames", landmarks.frames.size());
  const auto model = pipeline::train(config, landmarks.frames, targets.frames);
  if (model.enabled_count() == 0) {
    for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
      if (config.channels[c].enabled) io.log->warn("{}: {}", name_of(blendshape_at(c)), model.channels[c].note);
    }
    io.log->error("no enabled channels");
    return kExitDomain;
  }

  Output model_out(a.out, io.out);
  model_io::save_model(model, model_out.get());

  const auto sizes = model_io::channel_sizes(model);
  auto& out = a.out == "-" ? std::cerr : io.out;
  out << fmt::format("{:<20} {:<16} {:>6} {:>8} {:>8} {:>10} {:>7} {:>7} {:>7} {:>7}\n", "Blendshape",
                     "Family", "N", "R2", "Xi", "MSE", "DW", "SW", "Bytes", "Agree");
  std::size_t total = 0;
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
    const auto& ch = model.channels[c];
    total += sizes[c];
    if (!ch.enabled) {
      if (config.channels[c].enabled) {
        out << fmt::format("{:<20} disabled: {}\n", name_of(blendshape_at(c)), ch.note);
      }
      continue;
    }
    const auto& r = ch.regressor->report;
    const std::optional<double> sw =
        r.shapiro_wilk ? std::optional<double>(r.shapiro_wilk->statistic) : std::nullopt;
    out << fmt::format("{:<20} {:<16} {:>6} {:>8.4f} {:>8} {:>10.3e} {:>7} {:>7} {:>7} {:>7}\n",
                       name_of(blendshape_at(c)), regress::family_name(ch.regressor->spec.family),
                       r.n_samples, r.r2, opt_fixed(r.xi, 4), r.mse, opt_fixed(r.durbin_watson, 3),
                       opt_fixed(sw, 3), sizes[c], opt_fixed(ch.selection_agreement, 3));
  }
  out << fmt::format("{} enabled channels, {} bytes of channel entries\n", model.enabled_count(), total);
  return kExitOk;
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
  std::string model;
  std::string in = "-";
  std::string out = "-";
  std::string smoother;
  std::size_t window = 0;
  bool no_correction = false;
  std::string latency_log;
};

int cmd_run(const RunArgs& a, Io& io) {
  auto model = load_model_file(a.model, io.in);
  std::optional<smooth::SmootherConfig> smoother;
  if (!a.smoother.empty()) {
    const auto kind = smooth::parse_kind(a.smoother);
    if (!kind) throw UsageError("unknown smoother '" + a.smoother + "'");
    smoother.emplace();
    smoother->kind = *kind;
    if (a.window > 0) smoother->window = a.window;
    smoother->validate();
  }
  model = pipeline::with_overrides(std::move(model), smoother, a.no_correction);

  Input frames_in(a.in, io.in);
  Output frames_out(a.out, io.out);
  std::optional<Output> latency_out;
  if (!a.latency_log.empty()) {
    latency_out.emplace(a.latency_log, io.out);
    latency_out->get() << "t_ms,total_us,T_a_us,S_us,T_d_us,R_us,F_us\n";
  }

  LandmarkStreamReader reader(frames_in.get());
  BlendshapeStreamWriter writer(frames_out.get());
  pipeline::StreamSession session(model);
  std::size_t skipped = 0;
  for (;;) {
    std::optional<LandmarkFrame> frame;
    try {
      frame = reader.next();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Io) throw;
      io.log->warn("skipping record: {}", e.what());
      ++skipped;
      continue;
    }
    if (!frame) break;
    pipeline::StageTimings timings;
    const auto t0 = Clock::now();
    std::optional<BlendshapeFrame> result;
    try {
      result = pipeline::predict_frame(model, session, *frame, latency_out ? &timings : nullptr);
    } catch (const Error& e) {
      io.log->warn("skipping frame t={}: {}", frame->timestamp_ms(), e.what());
      ++skipped;
      continue;
    }
    const auto t1 = Clock::now();
    writer.write(*result);
    if (latency_out) {
      auto& l = latency_out->get();
      l << frame->timestamp_ms() << ','
        << std::chrono::duration<double, std::micro>(t1 - t0).count();
      for (const auto& e : timings.elapsed) l << ',' << std::chrono::duration<double, std::micro>(e).count();
      l << '\n';
    }
  }
  frames_out.get().flush();
  if (!frames_out.get()) throw Error(ErrorCode::SinkFailure, "output stream failed");
  io.log->info("{} frames written, {} skipped", writer.count(), skipped);
  return kExitOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string a;
  std::string b;
  std::string annotations;
  double f_min = 0.5;
  std::vector<std::string> f_min_for;
  std::size_t delta_k = 15;
  std::vector<std::string> channels;
  std::string csv = "-";
  std::string json;
};

std::pair<BlendshapeName, double> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw UsageError("expected NAME=VALUE, got '" + text + "'");
  const auto name = parse_blendshape(text.substr(0, eq));
  if (!name) throw UsageError("unknown blendshape '" + text.substr(0, eq) + "'");
  try {
    return {*name, std::stod(text.substr(eq + 1))};
  } catch (const std::exception&) {
    throw UsageError("not a number in '" + text + "'");
  }
}

BlendshapeName parse_name(const std::string& text) {
  const auto name = parse_blendshape(text);
  if (!name) throw UsageError("unknown blendshape '" + text + "'");
  return *name;
}

int cmd_eval(const EvalArgs& a, Io& io) {
  Input a_in(a.a, io.in);
  Input b_in(a.b, io.in);
  const auto sa = read_blendshape_stream(a_in.get());
  const auto sb = read_blendshape_stream(b_in.get());

  std::optional<std::vector<eval::EventAnnotation>> annotations;
  if (!a.annotations.empty()) {
    std::ifstream ann(a.annotations);
    if (ann) {
      annotations = eval::read_annotations(ann);
    } else {
      io.log->warn("annotation file '{}' not found; reporting correlations only", a.annotations);
    }
  }

  eval::EventMatchConfig config;
  config.default_f_min = a.f_min;
  config.delta_k = a.delta_k;
  for (const auto& s : a.f_min_for) {
    const auto [name, value] = parse_assignment(s);
    config.f_min[index_of(name)] = value;
  }
  std::vector<BlendshapeName> channels;
  for (const auto& c : a.channels) channels.push_back(parse_name(c));

  const auto report = eval::compare_streams(sa, sb, annotations, config, channels);
  Output csv_out(a.csv, io.out);
  eval::write_report_csv(report, csv_out.get());
  if (!a.json.empty()) {
    Output json_out(a.json, io.out);
    eval::write_report_json(report, json_out.get());
  }
  return kExitOk;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string landmarks;
  std::string targets;
  std::string driver = "sequential";
  std::vector<std::string> channels;
  std::size_t frames = 0;
  double fps = 30.0;
  std::size_t steps = 60;
  double period = 2.0;
  double amplitude = 1.0;
  double noise = 0.0;
  bool noise_z = false;
  std::vector<std::string> exponents;
  std::uint64_t seed = 1;
  std::uint64_t layout_seed = 7;
};

int cmd_synth(const SynthArgs& a, Io& io) {
  auto spec = synth::default_face_spec(a.layout_seed);
  spec.noise_sigma = a.noise;
  spec.noise_z = a.noise_z;
  for (const auto& e : a.exponents) {
    const auto [name, value] = parse_assignment(e);
    spec[name].exponent = value;
  }

  std::vector<BlendshapeName> channels;
  for (const auto& c : a.channels) channels.push_back(parse_name(c));
  if (channels.empty() && a.driver != "zero") {
    if (a.driver == "sequential") {
      for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
        if (blendshape_at(c) != BlendshapeName::TongueOut) channels.push_back(blendshape_at(c));
      }
    } else {
      channels.push_back(BlendshapeName::JawOpen);
    }
  }

  synth::Driver driver;
  std::size_t frames = a.frames;
  if (a.driver == "zero") {
    driver = synth::zero_driver();
    if (frames == 0) frames = 100;
  } else if (a.driver == "ramp") {
    driver = synth::ramp_driver(channels.front(), a.steps);
    if (frames == 0) frames = a.steps;
  } else if (a.driver == "sequential") {
    if (frames == 0) frames = a.steps * channels.size();
    driver = synth::sequential_ramp_driver(channels, a.steps);
  } else if (a.driver == "sine") {
    driver = synth::sine_driver(channels.front(), a.period, a.amplitude);
    if (frames == 0) frames = 300;
  } else {
    throw UsageError("unknown driver '" + a.driver + "'");
  }

  const auto data = synth::generate(spec, driver, frames, a.fps, a.seed);
  Output lm_out(a.landmarks, io.out);
  write_landmark_stream(data.landmarks, lm_out.get());
  Output tg_out(a.targets, io.out);
  write_blendshape_stream(data.targets, tg_out.get());
  io.log->info("wrote {} frames", frames);
  return kExitOk;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string model;
  std::string in;
  std::size_t repetitions = 10;
  std::string cdf;
};

std::optional<long> proc_status_kb(const char* key) {
  std::ifstream status("/proc/self/status");
  std::string line;
  const std::string prefix = std::string(key) + ":";
  while (std::getline(status, line)) {
    if (line.rfind(prefix, 0) == 0) return std::strtol(line.c_str() + prefix.size(), nullptr, 10);
  }
  return std::nullopt;
}

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

int cmd_bench(const BenchArgs& a, Io& io) {
  if (a.repetitions == 0) throw UsageError("repetitions must be >= 1");
  const auto rss_before = proc_status_kb("VmRSS");
  const auto model = load_model_file(a.model, io.in);
  Input frames_in(a.in, io.in);
  const auto stream = read_landmark_stream(frames_in.get());
  if (stream.frames.empty()) throw UsageError("no frames to benchmark");

  std::vector<double> latencies_ms;
  latencies_ms.reserve(stream.frames.size() * a.repetitions);
  pipeline::StreamSession session(model);
  pipeline::StageTimings stages;
  std::size_t failures = 0;
  for (std::size_t rep = 0; rep < a.repetitions; ++rep) {
    session.reset();
    for (const auto& frame : stream.frames) {
      const auto t0 = Clock::now();
      try {
        (void)pipeline::predict_frame(model, session, frame);
      } catch (const Error&) {
        ++failures;
      }
      latencies_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
  }
  // Separate instrumented pass so the clock reads do not inflate the latencies.
  session.reset();
  for (const auto& frame : stream.frames) {
    try {
      (void)pipeline::predict_frame(model, session, frame, &stages);
    } catch (const Error&) {
    }
  }

  if (!a.cdf.empty()) {
    std::vector<double> sorted = latencies_ms;
    std::sort(sorted.begin(), sorted.end());
    Output cdf_out(a.cdf, io.out);
    const auto n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      cdf_out.get() << fmt::format("{:.6f},{:.6f}\n", sorted[i], static_cast<double>(i + 1) / n);
    }
  }

  std::vector<double> sorted = latencies_ms;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  auto& out = io.out;
  out << fmt::format("frames: {}\nrepetitions: {}\nsamples: {}\nchannels: {}\nfailures: {}\n",
                     stream.frames.size(), a.repetitions, sorted.size(), model.enabled_count(), failures);
  out << fmt::format("p50_ms: {:.4f}\np95_ms: {:.4f}\np99_ms: {:.4f}\nmean_ms: {:.4f}\nmax_ms: {:.4f}\n",
                     percentile(sorted, 0.50), percentile(sorted, 0.95), percentile(sorted, 0.99),
                     sum / static_cast<double>(sorted.size()), sorted.back());
  for (std::size_t s = 0; s < stages.order.size(); ++s) {
    const auto stage = stages.order[s];
    const double us = std::chrono::duration<double, std::micro>(stages.elapsed[static_cast<std::size_t>(stage)]).count() /
                      static_cast<double>(std::max<std::size_t>(stages.frames, 1));
    out << fmt::format("stage_{}_us: {:.3f}\n", pipeline::stage_name(stage), us);
  }
  if (const auto hwm = proc_status_kb("VmHWM")) out << fmt::format("peak_rss_kb: {}\n", *hwm);
  if (rss_before) out << fmt::format("rss_before_model_kb: {}\n", *rss_before);
  return kExitOk;
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, /*force_flush=*/true);
  auto log = std::make_shared<spdlog::logger>("blendfit", sink);
  log->set_pattern("blendfit: %l: %v");
  auto level = spdlog::level::info;
  if (const char* env = std::getenv("BLENDFIT_LOG")) level = spdlog::level::from_str(env);
  log->set_level(level);
  return log;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Io io{in, out, make_logger(err)};

  CLI::App app{"Landmark to blendshape regression pipeline", "blendfit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "blendfit 0.1.0");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Fit a model from paired landmark/target streams");
  train_cmd->add_option("--landmarks", train.landmarks, "Landmark stream")->required();
  train_cmd->add_option("--targets", train.targets, "Target blendshape stream")->required();
  train_cmd->add_option("--config", train.config, "Training configuration (JSON)");
  train_cmd->add_option("-o,--out", train.out, "Model output path")->required();

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Stream landmark frames through a model");
  run_cmd->add_option("-m,--model", run_args.model, "Model file")->required();
  run_cmd->add_option("-i,--in", run_args.in, "Landmark stream, - for stdin")->capture_default_str();
  run_cmd->add_option("-o,--out", run_args.out, "Blendshape stream, - for stdout")->capture_default_str();
  run_cmd->add_option("--smoother", run_args.smoother, "Override smoother: none|gated_ma|ma|ewma|lowpass|kalman");
  run_cmd->add_option("--window", run_args.window, "Window for ma/gated_ma overrides");
  run_cmd->add_flag("--no-correction", run_args.no_correction, "Use the neutral correction on every channel");
  run_cmd->add_option("--latency-log", run_args.latency_log, "Per-frame latency CSV");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Compare two blendshape streams");
  eval_cmd->add_option("-a", eval_args.a, "Reference stream")->required();
  eval_cmd->add_option("-b", eval_args.b, "Compared stream")->required();
  eval_cmd->add_option("--annotations", eval_args.annotations, "Event annotations");
  eval_cmd->add_option("--f-min", eval_args.f_min, "Default event threshold")->capture_default_str();
  eval_cmd->add_option("--f-min-for", eval_args.f_min_for, "Per-channel threshold NAME=VALUE");
  eval_cmd->add_option("--delta-k", eval_args.delta_k, "Match window half-width in frames")->capture_default_str();
  eval_cmd->add_option("--channel", eval_args.channels, "Restrict the report to these channels");
  eval_cmd->add_option("--csv", eval_args.csv, "CSV report path, - for stdout")->capture_default_str();
  eval_cmd->add_option("--json", eval_args.json, "Full-precision JSON report path");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic paired streams");
  synth_cmd->add_option("--landmarks", synth_args.landmarks, "Landmark stream output")->required();
  synth_cmd->add_option("--targets", synth_args.targets, "Target stream output")->required();
  synth_cmd->add_option("--driver", synth_args.driver, "zero|ramp|sequential|sine")->capture_default_str();
  synth_cmd->add_option("--channel", synth_args.channels, "Driven channels");
  synth_cmd->add_option("--frames", synth_args.frames, "Frame count (driver-dependent default)");
  synth_cmd->add_option("--fps", synth_args.fps, "Frame rate")->capture_default_str();
  synth_cmd->add_option("--steps", synth_args.steps, "Ramp steps")->capture_default_str();
  synth_cmd->add_option("--period", synth_args.period, "Sine period in seconds")->capture_default_str();
  synth_cmd->add_option("--amplitude", synth_args.amplitude, "Sine amplitude")->capture_default_str();
  synth_cmd->add_option("--noise", synth_args.noise, "Landmark noise sigma")->capture_default_str();
  synth_cmd->add_flag("--noise-z", synth_args.noise_z, "Also perturb z");
  synth_cmd->add_option("--exponent", synth_args.exponents, "Motion exponent NAME=VALUE");
  synth_cmd->add_option("--seed", synth_args.seed, "Noise seed")->capture_default_str();
  synth_cmd->add_option("--layout-seed", synth_args.layout_seed, "Face layout seed")->capture_default_str();

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Measure per-frame pipeline latency");
  bench_cmd->add_option("-m,--model", bench_args.model, "Model file")->required();
  bench_cmd->add_option("-i,--in", bench_args.in, "Landmark stream")->required();
  bench_cmd->add_option("-r,--repetitions", bench_args.repetitions, "Passes over the stream")->capture_default_str();
  bench_cmd->add_option("--cdf", bench_args.cdf, "Latency CDF output (one row per sample)");

  std::vector<const char*> argv{"blendfit"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train, io);
    if (*run_cmd) return cmd_run(run_args, io);
    if (*eval_cmd) return cmd_eval(eval_args, io);
    if (*synth_cmd) return cmd_synth(synth_args, io);
    if (*bench_cmd) return cmd_bench(bench_args, io);
  } catch (const UsageError& e) {
    io.log->error("{}", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    io.log->error("{}", e.what());
    return e.code() == ErrorCode::Io || e.code() == ErrorCode::SinkFailure ? kExitUsage : kExitDomain;
  }
  return kExitUsage;
}

}  // namespace blendfit::cli
