#include "fosense/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <set>

#include "fosense/characterization.hpp"
#include "fosense/equalizer.hpp"
#include "fosense/error.hpp"
#include "fosense/io.hpp"
#include "fosense/noise_analysis.hpp"
#include "fosense/sensor_model.hpp"
#include "fosense/transducer.hpp"

namespace fosense::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) { return io::format_double(v); }

std::pair<double, double> parse_pair(const std::string& text,
                                     const std::string& what) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorKind::kInvalidInput,
                what + " '" + text + "' must look like <a>:<b>");
  }
  return {io::parse_double(std::string_view(text).substr(0, colon), what),
          io::parse_double(std::string_view(text).substr(colon + 1), what)};
}

void require_file(const std::string& path, const std::string& flag) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorKind::kIo, flag + ": no such file '" + path + "'");
  }
}

void require_dir(const std::string& path, const std::string& flag) {
  if (!fs::is_directory(path)) {
    throw Error(ErrorKind::kIo, flag + ": no such directory '" + path + "'");
  }
}

std::string exit_code_help() {
  std::string s =
      "Exit status: 0 ok, 1 internal error, 2 usage error; operation "
      "failures:\n";
  for (int k = 0; k <= static_cast<int>(ErrorKind::kSaturation); ++k) {
    s += "  " + std::to_string(kExitErrorBase + k) + "  " +
         std::string(to_string(static_cast<ErrorKind>(k))) + "\n";
  }
  return s;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string model = "default_phase2";
  std::string pulse;
  std::string sine;
  std::string input;
  double rate = 25000.0;
  double record = 0.0;
  std::uint64_t seed = 0;
  bool noise_free = false;
  std::string out_dir = ".";
  std::string sweep_out;
  std::string grid = "log:1:10000:40";
  std::size_t averages = 16;
  double drive = 5.0;
  double offset = 5.0;
};

int do_simulate(const SimulateArgs& a, std::ostream& out) {
  SensorModel model = load_model(a.model);
  if (a.noise_free) model = without_noise(model);

  if (!a.sweep_out.empty()) {
    PlanOptions opts;
    opts.min_sample_rate = 10.0 * model.f_res;
    const SweepPlan plan = plan_sweep(parse_grid(a.grid), a.averages, opts);
    write_sweep_recordings({model, a.drive, a.offset, a.seed}, plan,
                           a.sweep_out);
    out << "wrote " << plan.entries.size() << " sweep points x "
        << plan.n_averages << " traces to " << a.sweep_out << "\n";
    return kExitOk;
  }

  const int sources = !a.pulse.empty() + !a.sine.empty() + !a.input.empty();
  if (sources != 1) {
    throw Error(ErrorKind::kInvalidInput,
                "simulate needs exactly one of --pulse, --sine, --input");
  }

  std::optional<Waveform> v_in;
  if (!a.pulse.empty()) {
    const auto [amp, dur] = parse_pair(a.pulse, "--pulse");
    const double record = a.record > 0.0 ? a.record : default_pulse_record(dur);
    v_in = square_pulse(amp, dur, a.rate, record);
  } else if (!a.sine.empty()) {
    const auto [amp, freq] = parse_pair(a.sine, "--sine");
    const double record = a.record > 0.0 ? a.record : 50.0 / freq;
    const auto n = static_cast<std::size_t>(std::llround(record * a.rate));
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = amp * std::sqrt(2.0) *
             std::sin(2.0 * M_PI * freq * static_cast<double>(i) / a.rate);
    }
    v_in = Waveform(std::move(x), a.rate);
  } else {
    require_file(a.input, "--input");
    v_in = io::read_waveform(a.input);
  }

  const auto res = simulate_output(model, *v_in, a.seed);
  fs::create_directories(a.out_dir);
  io::write_waveform(fs::path(a.out_dir) / "in.csv", *v_in);
  io::write_waveform(fs::path(a.out_dir) / "out.csv", res.output);
  out << "wrote " << (fs::path(a.out_dir) / "in.csv").string() << " and "
      << (fs::path(a.out_dir) / "out.csv").string() << " (" << v_in->size()
      << " samples @ " << fmt(v_in->sample_rate()) << " Hz)\n";
  out << "saturated=" << (res.saturated ? "yes" : "no") << "\n";
  return kExitOk;
}

// ------------------------------------------------------------ characterize

struct CharacterizeArgs {
  std::string model;
  std::string data;
  std::string grid = "log:1:10000:40";
  std::size_t averages = 16;
  std::string out = "bode.csv";
  std::uint64_t seed = 0;
  double drive = 5.0;
  double offset = 5.0;
  bool noise_free = false;
};

int do_characterize(const CharacterizeArgs& a, std::ostream& out) {
  if (a.model.empty() == a.data.empty()) {
    throw Error(ErrorKind::kInvalidInput,
                "characterize needs exactly one of --model, --data");
  }
  BodeTable table;
  if (!a.model.empty()) {
    SensorModel model = load_model(a.model);
    if (a.noise_free) model = without_noise(model);
    PlanOptions opts;
    opts.min_sample_rate = 10.0 * model.f_res;
    const SweepPlan plan = plan_sweep(parse_grid(a.grid), a.averages, opts);
    table = run_sweep(SyntheticSource{model, a.drive, a.offset, a.seed}, plan);
  } else {
    require_dir(a.data, "--data");
    const fs::path plan_path = fs::path(a.data) / "plan.csv";
    SweepPlan plan;
    if (fs::exists(plan_path)) {
      plan = plan_from_csv(io::read_text(plan_path), plan_path.string());
    } else {
      plan = plan_sweep(parse_grid(a.grid), a.averages);
    }
    table = run_sweep(RecordedSource{a.data}, plan);
  }
  io::write_text_atomic(a.out, bode_to_csv(table));
  const auto peak = response_peak(table);
  out << "wrote " << a.out << " (" << table.size() << " points); peak "
      << fmt(peak.magnitude_db) << " dB at " << fmt(peak.freq) << " Hz\n";
  return kExitOk;
}

// ------------------------------------------------------------------- noise

struct NoiseArgs {
  std::string model;
  std::string input;
  std::size_t segments = 128;
  std::string band = "10:3000";
  std::string out = "psd.csv";
  std::string report;
  std::string response;
  std::vector<double> freqs{60.0, 2000.0};
  double vmax = 280.0;
  std::uint64_t seed = 0;
  double declared_max_hz = 0.0;
};

int do_noise(const NoiseArgs& a, std::ostream& out) {
  if (a.model.empty() == a.input.empty()) {
    throw Error(ErrorKind::kInvalidInput,
                "noise needs exactly one of --model, --input");
  }
  const auto [f_lo, f_hi] = parse_pair(a.band, "--band");
  std::optional<SensorModel> model;
  double noise_rms = 0.0;
  PsdEstimate psd_out;

  if (!a.model.empty()) {
    model = load_model(a.model);
    const auto lp = low_range_preset();
    const auto hp = high_range_preset();
    const auto low_segs = record_noise_segments(*model, lp, a.segments, a.seed);
    const auto high_segs =
        record_noise_segments(*model, hp, a.segments, a.seed + 1);
    const PsdEstimate low = averaged_periodogram(low_segs);
    const PsdEstimate high = averaged_periodogram(high_segs);
    noise_rms = stitched_band_rms(low, lp, high, hp, f_lo, f_hi);
    // Plot data: low range up to its band edge, high range above.
    psd_out.n_averages = a.segments;
    psd_out.resolution_bw = low.resolution_bw;
    for (std::size_t k = 1; k < low.freqs.size(); ++k) {
      if (low.freqs[k] > lp.band_hi) break;
      psd_out.freqs.push_back(low.freqs[k]);
      psd_out.density.push_back(low.density[k]);
    }
    for (std::size_t k = 1; k < high.freqs.size(); ++k) {
      if (high.freqs[k] <= lp.band_hi || high.freqs[k] > hp.band_hi) continue;
      psd_out.freqs.push_back(high.freqs[k]);
      psd_out.density.push_back(high.density[k]);
    }
  } else {
    require_dir(a.input, "--input");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.input)) {
      if (e.is_regular_file() && e.path().extension() == ".csv") {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      throw Error(ErrorKind::kIo, "--input: no .csv segments in " + a.input);
    }
    if (a.segments > 0 && files.size() > a.segments) files.resize(a.segments);
    std::vector<Waveform> segs;
    for (const auto& f : files) segs.push_back(io::read_waveform(f));
    PeriodogramOptions opts;
    if (a.declared_max_hz > 0.0) opts.declared_max_content_hz = a.declared_max_hz;
    psd_out = averaged_periodogram(segs, opts);
    noise_rms = band_rms(psd_out, f_lo, f_hi);
  }
  io::write_text_atomic(a.out, psd_to_csv(psd_out));

  std::optional<BodeTable> response;
  if (!a.response.empty()) {
    require_file(a.response, "--response");
    response = bode_from_csv(io::read_text(a.response), a.response);
  } else if (model) {
    const auto base = FrequencyGrid::log_spaced(1.0, 10000.0, 40);
    std::set<double> f(base.frequencies().begin(), base.frequencies().end());
    f.insert(a.freqs.begin(), a.freqs.end());
    response = sample_response(*model, FrequencyGrid(std::vector<double>(f.begin(), f.end())));
  }

  SensitivityReport report;
  if (response) {
    report = make_sensitivity_report(noise_rms, f_lo, f_hi, *response, a.freqs,
                                     a.vmax);
  } else {
    report.f_lo = f_lo;
    report.f_hi = f_hi;
    report.band_rms = noise_rms;
  }
  out << report_to_text(report);
  if (!a.report.empty()) io::write_text_atomic(a.report, report_to_csv(report));
  return kExitOk;
}

// ---------------------------------------------------------------- equalize

struct EqualizeArgs {
  std::string input;
  std::string response;
  double flow = 10.0;
  double fhigh = 4000.0;
  std::vector<std::string> notches;
  std::string reference;
  std::string out = "est.csv";
  std::string metrics;
};

std::string metrics_to_csv(const PulseMetrics& m) {
  std::string s = "metric,value\n";
  s += "baseline_v," + fmt(m.baseline) + "\n";
  s += "baseline_slope_v_per_s," + fmt(m.baseline_slope) + "\n";
  s += "peak_amplitude_v," + fmt(m.peak_amplitude) + "\n";
  s += "peak_time_s," + fmt(m.peak_time) + "\n";
  s += "fwhm_s," + fmt(m.fwhm) + "\n";
  if (m.amplitude_error_pct) {
    s += "amplitude_error_pct," + fmt(*m.amplitude_error_pct) + "\n";
  }
  s += "residual_ringing_rms_v," + fmt(m.residual_ringing_rms) + "\n";
  return s;
}

int do_equalize(const EqualizeArgs& a, std::ostream& out) {
  require_file(a.input, "--input");
  require_file(a.response, "--response");
  ApodizationSpec spec{a.flow, a.fhigh, {}};
  for (const auto& n : a.notches) {
    const auto [c, w] = parse_pair(n, "--notch");
    spec.notches.push_back({c, w});
  }
  const Waveform v_out = io::read_waveform(a.input);
  const BodeTable table = bode_from_csv(io::read_text(a.response), a.response);
  std::optional<Waveform> ref;
  if (!a.reference.empty()) {
    require_file(a.reference, "--reference");
    ref = io::read_waveform(a.reference);
  }
  const auto result =
      reconstruct(v_out, table, spec, ref ? &*ref : nullptr);
  io::write_waveform(a.out, result.estimate);
  out << "wrote " << a.out << "\n";
  if (result.metrics) {
    const auto& m = *result.metrics;
    out << "peak " << fmt(m.peak_amplitude) << " V, fwhm " << fmt(m.fwhm)
        << " s";
    if (m.amplitude_error_pct) {
      out << ", amplitude error " << fmt(*m.amplitude_error_pct) << " %";
    }
    out << "\n";
    if (!a.metrics.empty()) io::write_text_atomic(a.metrics, metrics_to_csv(m));
  } else if (!a.metrics.empty()) {
    throw Error(ErrorKind::kNotPulseLike,
                "estimate has no dominant pulse; no metrics to write");
  }
  return kExitOk;
}

// -------------------------------------------------------------- transducer

struct TransducerArgs {
  std::string curve;
  std::string linearity;
  bool reference_curve = false;
  std::string out;
};

int do_transducer(const TransducerArgs& a, std::ostream& out) {
  const int modes = !a.curve.empty() + !a.linearity.empty() + a.reference_curve;
  if (modes != 1) {
    throw Error(ErrorKind::kInvalidInput,
                "transducer needs exactly one of --curve, --linearity, "
                "--reference-curve");
  }
  if (a.reference_curve) {
    const auto curve = reference_displacement_curve();
    std::string csv = "displacement_um,power_norm\n";
    for (const auto& p : curve.points()) {
      csv += fmt(p.displacement_um) + "," + fmt(p.power) + "\n";
    }
    if (a.out.empty()) {
      out << csv;
    } else {
      io::write_text_atomic(a.out, csv);
      out << "wrote " << a.out << "\n";
    }
    return kExitOk;
  }
  if (!a.curve.empty()) {
    require_file(a.curve, "--curve");
    const auto op =
        operating_point(curve_from_csv(io::read_text(a.curve), a.curve));
    out << "operating_point_um=" << fmt(op.displacement_um)
        << " slope_per_um=" << fmt(op.slope) << "\n";
    return kExitOk;
  }
  require_file(a.linearity, "--linearity");
  const auto pairs = pairs_from_csv(io::read_text(a.linearity), a.linearity);
  const auto fit = loglog_linearity(pairs.inputs, pairs.outputs);
  out << "slope=" << fmt(fit.slope) << " stderr=" << fmt(fit.slope_stderr)
      << " intercept=" << fmt(fit.intercept) << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Fiber-optic voltage sensor characterization and equalization",
               "fosense"};
  app.footer(exit_code_help());
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate sensor output");
  s->add_option("--model", sim.model, "Builtin default_phase1|2|3 or config file")
      ->capture_default_str();
  s->add_option("--pulse", sim.pulse, "Square pulse <amplitude_V>:<duration_s>");
  s->add_option("--sine", sim.sine, "Sine <rms_V>:<freq_Hz>");
  s->add_option("--input", sim.input, "Input waveform CSV");
  s->add_option("--rate", sim.rate, "Sample rate, Hz")->capture_default_str();
  s->add_option("--record", sim.record,
                "Record length, s (pulse default max(4*duration, 0.1))");
  s->add_option("--seed", sim.seed, "Noise seed")->capture_default_str();
  s->add_flag("--noise-free", sim.noise_free, "Disable the noise model");
  s->add_option("--out-dir", sim.out_dir, "Directory for in.csv/out.csv")
      ->capture_default_str();
  s->add_option("--sweep-out", sim.sweep_out,
                "Write swept-sine recordings (and plan.csv) to this directory");
  s->add_option("--grid", sim.grid, "Sweep grid for --sweep-out")
      ->capture_default_str();
  s->add_option("--averages", sim.averages, "Traces per sweep point")
      ->capture_default_str();
  s->add_option("--drive", sim.drive, "Sweep drive amplitude, V peak")
      ->capture_default_str();
  s->add_option("--offset", sim.offset, "Sweep drive dc offset, V")
      ->capture_default_str();

  CharacterizeArgs chr;
  auto* c = app.add_subcommand("characterize", "Swept-sine frequency response");
  c->add_option("--model", chr.model, "Builtin or config file (synthetic mode)");
  c->add_option("--data", chr.data, "Directory of recorded traces");
  c->add_option("--grid", chr.grid,
                "log:<start>:<stop>:<per_decade> or list:<f1>,<f2>,...")
      ->capture_default_str();
  c->add_option("--averages", chr.averages, "Traces per point")
      ->capture_default_str();
  c->add_option("--out", chr.out, "Bode table CSV")->capture_default_str();
  c->add_option("--seed", chr.seed, "Noise seed")->capture_default_str();
  c->add_option("--drive", chr.drive, "Drive amplitude, V peak")
      ->capture_default_str();
  c->add_option("--offset", chr.offset, "Drive dc offset, V")
      ->capture_default_str();
  c->add_flag("--noise-free", chr.noise_free, "Disable the noise model");

  NoiseArgs nz;
  auto* n = app.add_subcommand("noise", "Noise PSD and sensitivity");
  n->add_option("--model", nz.model, "Builtin or config file");
  n->add_option("--input", nz.input, "Directory of no-input segment CSVs");
  n->add_option("--segments", nz.segments, "Periodograms to average")
      ->capture_default_str();
  n->add_option("--band", nz.band, "Integration band <lo>:<hi> Hz")
      ->capture_default_str();
  n->add_option("--out", nz.out, "PSD CSV")->capture_default_str();
  n->add_option("--report", nz.report, "Sensitivity report CSV");
  n->add_option("--response", nz.response, "Bode table for input referral");
  n->add_option("--freqs", nz.freqs, "Frequencies for minimum detectable input")
      ->delimiter(',')
      ->capture_default_str();
  n->add_option("--vmax", nz.vmax, "Largest unsaturated input, V rms")
      ->capture_default_str();
  n->add_option("--seed", nz.seed, "Noise seed")->capture_default_str();
  n->add_option("--declared-max-hz", nz.declared_max_hz,
                "Highest content present in recorded segments, Hz");

  EqualizeArgs eq;
  auto* e = app.add_subcommand("equalize", "Apodized inverse filtering");
  e->add_option("--input", eq.input, "Sensor output CSV")->required();
  e->add_option("--response", eq.response, "Bode table CSV")->required();
  e->add_option("--flow", eq.flow, "Low apodization edge, Hz")
      ->capture_default_str();
  e->add_option("--fhigh", eq.fhigh, "High apodization edge, Hz")
      ->capture_default_str();
  e->add_option("--notch", eq.notches, "Notch <center_Hz>:<width_Hz>");
  e->add_option("--reference", eq.reference, "True input CSV for metrics");
  e->add_option("--out", eq.out, "Estimate CSV")->capture_default_str();
  e->add_option("--metrics", eq.metrics, "Pulse metrics CSV");

  TransducerArgs td;
  auto* t = app.add_subcommand("transducer", "Transducer curve analyses");
  t->add_option("--curve", td.curve, "displacement_um,power_norm CSV");
  t->add_option("--linearity", td.linearity, "input_v,output_v CSV");
  t->add_flag("--reference-curve", td.reference_curve,
              "Emit the builtin shape fixture");
  t->add_option("--out", td.out, "Output file for --reference-curve");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (s->parsed()) return do_simulate(sim, out);
    if (c->parsed()) return do_characterize(chr, out);
    if (n->parsed()) return do_noise(nz, out);
    if (e->parsed()) return do_equalize(eq, out);
    if (t->parsed()) return do_transducer(td, out);
  } catch (const Error& ex) {
    err << "error: " << to_string(ex.kind()) << ": " << ex.what() << "\n";
    return kExitErrorBase + static_cast<int>(ex.kind());
  } catch (const std::exception& ex) {
    err << "error: internal: " << ex.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace fosense::cli
