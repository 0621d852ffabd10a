#include "hnsynth/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "atomic_file.hpp"
#include "hnsynth/analysis.hpp"
#include "hnsynth/errors.hpp"
#include "hnsynth/io.hpp"
#include "hnsynth/losses.hpp"
#include "hnsynth/pipeline.hpp"
#include "hnsynth/spectral.hpp"

namespace hnsynth {

namespace {

using nlohmann::ordered_json;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

ConfigOverrides load_overrides(const CommonOptions& opts) {
  ConfigOverrides o = opts.config_path.empty() ? ConfigOverrides{} : ConfigOverrides::load(opts.config_path);
  for (const std::string& kv : opts.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    o.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opts.seed) o.set("seed", std::to_string(*opts.seed));
  return o;
}

Waveform read_input(const std::string& path, std::ostream& err) {
  WavInfo info;
  Waveform x = read_wav(path, &info);
  if (info.downmixed) err << "warning: " << path << ": stereo input averaged to mono\n";
  return x;
}

void write_output(const Waveform& y, const std::string& path, SampleFormat format, std::ostream& err) {
  const std::size_t clipped = write_wav(y, path, format);
  if (clipped > 0) err << "warning: " << path << ": clipped " << clipped << " samples to [-1, 1]\n";
}

double log_magnitude_l1(const Matrix& a, const Matrix& b) {
  Matrix la = a, lb = b;
  for (double& v : la.data()) v = std::log(std::max(v, 1e-5));
  for (double& v : lb.data()) v = std::log(std::max(v, 1e-5));
  return mean_abs_difference(la, lb);
}

std::size_t count_voiced(const F0Contour& f0) {
  return static_cast<std::size_t>(std::count(f0.voiced.begin(), f0.voiced.end(), true));
}

ordered_json comparison_report(const Waveform& reference, const Waveform& candidate, const Settings& s) {
  ordered_json r;
  const double l1 = mel_l1(candidate, reference, s.mel);
  r["sample_rate"] = reference.sample_rate;
  r["samples"] = reference.size();
  r["mel_l1"] = l1;
  r["dsp_loss"] = s.weights.lambda_dsp * l1;
  const Waveform silence(std::vector<double>(reference.size(), 0.0), reference.sample_rate);
  const double silence_l1 = mel_l1(silence, reference, s.mel);
  r["silence_mel_l1"] = silence_l1;
  r["mel_l1_ratio"] = silence_l1 > 0.0 ? l1 / silence_l1 : 0.0;

  const auto mr_cfgs = default_multi_resolution_configs();
  const auto mr_ref = multi_resolution_spectrograms(reference, mr_cfgs);
  const auto mr_cand = multi_resolution_spectrograms(candidate, mr_cfgs);
  ordered_json mr = ordered_json::array();
  for (std::size_t i = 0; i < mr_cfgs.size(); ++i) {
    mr.push_back({{"fft_size", mr_cfgs[i].fft_size}, {"log_magnitude_l1", log_magnitude_l1(mr_cand[i], mr_ref[i])}});
  }
  r["multi_resolution"] = mr;

  if (reference.size() >= 2 * s.analysis.hop_size) {
    const F0Contour f_ref = estimate_f0(reference, s.analysis);
    const F0Contour f_cand = estimate_f0(candidate, s.analysis);
    const F0Rmse e = f0_rmse(f_cand, f_ref);
    r["f0_rmse_hz"] = e.hz;
    r["f0_compared_frames"] = e.compared_frames;
    r["f0_no_common_voiced"] = e.no_common_voiced;
  }
  return r;
}

int run_analyze(const std::string& in, const std::string& out, const std::string& f0_in, const std::string& f0_out,
                const CommonOptions& opts, std::ostream& err) {
  const Waveform x = read_input(in, err);
  const Settings s = load_overrides(opts).resolve(x.sample_rate);
  std::optional<F0Contour> f0;
  if (!f0_in.empty()) {
    int f0_rate = 0;
    f0 = load_f0(f0_in, &f0_rate);
    if (f0_rate != x.sample_rate) throw InvalidArgument("f0 file sample rate differs from the audio");
    const std::size_t expected = s.spectral.frames_for(x.size());
    if (f0->frames() != expected) {
      err << "warning: " << f0_in << ": " << f0->frames() << " frames, audio has " << expected
          << "; missing frames are unvoiced, extra frames dropped\n";
    }
  }
  const FeatureBundle bundle = analyze_to_bundle(x, s, f0);
  save_features(bundle, out);
  if (!f0_out.empty()) save_f0(bundle.f0, bundle.sample_rate, f0_out);
  return 0;
}

int run_synth(const std::string& in, const std::string& out, const CommonOptions& opts, std::ostream& err) {
  const FeatureBundle bundle = load_features(in);
  const Settings s = load_overrides(opts).resolve(bundle.sample_rate);
  write_output(synthesize_bundle(bundle, s.seed), out, s.output_format, err);
  return 0;
}

int run_resynth(const std::string& in, const std::string& out, const std::string& report_path,
                const CommonOptions& opts, std::ostream& stdout_, std::ostream& err) {
  const Waveform x = read_input(in, err);
  const Settings s = load_overrides(opts).resolve(x.sample_rate);
  const FeatureBundle bundle = analyze_to_bundle(x, s);
  const Waveform y = synthesize_bundle(bundle, s.seed);

  ordered_json report = comparison_report(x, y, s);
  report["seed"] = s.seed;
  report["frames"] = bundle.f0.frames();
  report["voiced_frames"] = count_voiced(bundle.f0);
  // Contour carried in the features versus the one re-estimated from the output.
  const F0Contour again = estimate_f0(y, s.analysis);
  const F0Rmse e = f0_rmse(again, bundle.f0);
  report["f0_rmse_hz"] = e.hz;
  report["f0_compared_frames"] = e.compared_frames;
  report["f0_no_common_voiced"] = e.no_common_voiced;

  write_output(y, out, s.output_format, err);
  const std::string text = report.dump(2) + "\n";
  if (report_path.empty()) {
    stdout_ << text;
  } else {
    detail::write_file_atomic(report_path, text);
  }
  return 0;
}

int run_metrics(const std::string& a_path, const std::string& b_path, const CommonOptions& opts, std::ostream& out,
                std::ostream& err) {
  Waveform a = read_input(a_path, err);
  Waveform b = read_input(b_path, err);
  if (a.sample_rate != b.sample_rate) throw InvalidArgument("sample rates differ");
  const std::size_t len = std::min(a.size(), b.size());
  if (a.size() != b.size()) {
    err << "warning: lengths differ (" << a.size() << " vs " << b.size() << "); comparing the first " << len
        << " samples\n";
    a.samples.resize(len);
    b.samples.resize(len);
  }
  if (len == 0) throw InvalidArgument("nothing to compare: empty input");
  const Settings s = load_overrides(opts).resolve(a.sample_rate);
  out << comparison_report(a, b, s).dump(2) << "\n";
  return 0;
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Flat key=value config file");
  cmd->add_option("--set", opts.sets, "Override one config key (key=value), repeatable");
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Harmonic-plus-noise analysis and resynthesis"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string in, second, output, report, f0_in, f0_out;
  std::uint64_t seed = 0;

  auto* analyze_cmd = app.add_subcommand("analyze", "Analyze a WAV file into a feature bundle");
  analyze_cmd->add_option("input", in, "Input WAV")->required();
  analyze_cmd->add_option("-o,--output", output, "Output feature file")->required();
  analyze_cmd->add_option("--f0", f0_in, "Use this F0 text file instead of the built-in tracker");
  analyze_cmd->add_option("--f0-out", f0_out, "Also write the F0 contour as text");
  add_common(analyze_cmd, opts);

  auto* synth_cmd = app.add_subcommand("synth", "Synthesize a waveform from a feature bundle");
  synth_cmd->add_option("features", in, "Input feature file")->required();
  synth_cmd->add_option("-o,--output", output, "Output WAV")->required();
  auto* synth_seed = synth_cmd->add_option("--seed", seed, "Noise phase seed");
  add_common(synth_cmd, opts);

  auto* resynth_cmd = app.add_subcommand("resynth", "Analyze then resynthesize a WAV file");
  resynth_cmd->add_option("input", in, "Input WAV")->required();
  resynth_cmd->add_option("-o,--output", output, "Output WAV")->required();
  auto* resynth_seed = resynth_cmd->add_option("--seed", seed, "Noise phase seed");
  resynth_cmd->add_option("--report", report, "Write the metrics report (JSON) here instead of stdout");
  add_common(resynth_cmd, opts);

  auto* metrics_cmd = app.add_subcommand("metrics", "Compare two WAV files");
  metrics_cmd->add_option("reference", in, "Reference WAV")->required();
  metrics_cmd->add_option("candidate", second, "Candidate WAV")->required();
  add_common(metrics_cmd, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Usage);
  }
  if (synth_seed->count() > 0 || resynth_seed->count() > 0) opts.seed = seed;

  try {
    if (*analyze_cmd) return run_analyze(in, output, f0_in, f0_out, opts, err);
    if (*synth_cmd) return run_synth(in, output, opts, err);
    if (*resynth_cmd) return run_resynth(in, output, report, opts, out, err);
    if (*metrics_cmd) return run_metrics(in, second, opts, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Invariant);
  }
  return static_cast<int>(ExitCode::Usage);
}

}  // namespace hnsynth
