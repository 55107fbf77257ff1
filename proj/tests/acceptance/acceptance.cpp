// Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. argv[1] is the path of the fosense CLI binary.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fosense/characterization.hpp"
#include "fosense/equalizer.hpp"
#include "fosense/error.hpp"
#include "fosense/fft.hpp"
#include "fosense/io.hpp"
#include "fosense/noise_analysis.hpp"
#include "fosense/sensor_model.hpp"
#include "fosense/transducer.hpp"
#include "fosense/waveform.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace fosense;

namespace {

// Tolerances, pinned.
constexpr double kDftRelTol = 1e-10;
constexpr double kParsevalRelTol = 1e-9;
constexpr double kDftRuntimeS = 10.0;
constexpr double kNoiseFreeDb = 0.1, kNoiseFreeDeg = 1.0;
constexpr double kNoisyDb = 0.5, kNoisyDeg = 3.0;
constexpr double kSweepRuntimeS = 30.0;
constexpr double kBwLow = 10.0, kBwLowTol = 3.0;
constexpr double kBwHigh = 3000.0, kBwHighTol = 300.0;
constexpr double kPeakLoDb = 30.0, kPeakHiDb = 33.0;
constexpr double kMinDet60 = 0.30, kMinDetRelTol = 0.15;
constexpr double kDr280 = 59.4, kDr280Tol = 0.05;
constexpr double kDispDr = 66.02, kDispDrTol = 0.1;
constexpr double kWhitePerBinTol = 0.05;
constexpr double kBandRmsLo = 1.26e-3, kBandRmsHi = 1.69e-3;
constexpr double kPsdVsTimeTol = 0.01;
constexpr double kNoiseRuntimeS = 60.0;
constexpr double kPulseAmpTolPct = 2.0, kRingingFrac = 0.01;
constexpr double kShortPulseTolPct = 10.0, kNarrowDeficitPct = 50.0;
constexpr double kEqRuntimeS = 30.0;
constexpr double kWindowTol = 1e-12, kHalfPointTol = 1e-6;
constexpr double kSlopeTol = 0.005, kQuadTol = 1e-6;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

int g_failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << " - "
            << detail << std::endl;
  if (!pass) ++g_failures;
}

std::string num(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

double wrap_deg(double d) {
  d = std::fmod(d + 180.0, 360.0);
  if (d < 0) d += 360.0;
  return d - 180.0;
}

// ------------------------------------------------------------------ 1
void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> len(16, 4096);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst_fwd = 0.0, worst_inv = 0.0, worst_parseval = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = len(rng);
    std::vector<double> x(n);
    for (auto& v : x) v = g(rng);
    const Waveform w(x, 1000.0);
    const Spectrum s = forward_transform(w);
    const std::vector<cplx> xc(x.begin(), x.end());
    const auto ref = oracle::dft(xc);
    worst_fwd = std::max(worst_fwd,
                         oracle::max_abs_diff(s.bins, ref) / oracle::max_abs(ref));

    // Inverse against the oracle on a random complex spectrum.
    std::vector<cplx> spec(n);
    for (auto& v : spec) v = {g(rng), g(rng)};
    auto got = spec;
    fft::transform(got, fft::Direction::kInverse);
    for (auto& v : got) v /= static_cast<double>(n);
    const auto ref_inv = oracle::dft(spec, true);
    worst_inv = std::max(
        worst_inv, oracle::max_abs_diff(got, ref_inv) / oracle::max_abs(ref_inv));

    // Real round trip through the public inverse.
    const Waveform back = inverse_transform(s);
    double rt = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      rt = std::max(rt, std::abs(back[i] - x[i]));
      peak = std::max(peak, std::abs(x[i]));
    }
    worst_inv = std::max(worst_inv, rt / peak);

    double et = 0.0, ef = 0.0;
    for (double v : x) et += v * v;
    for (const auto& b : s.bins) ef += std::norm(b);
    ef /= static_cast<double>(n);
    worst_parseval = std::max(worst_parseval, std::abs(et - ef) / et);
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_fwd <= kDftRelTol && worst_inv <= kDftRelTol &&
                    worst_parseval <= kParsevalRelTol && secs < kDftRuntimeS;
  report(1, pass,
         "200 random N in [16,4096]: max rel err fwd " + num(worst_fwd, 3) +
             ", inv " + num(worst_inv, 3) + " (tol 1e-10); Parseval " +
             num(worst_parseval, 3) + " (tol 1e-9); " + num(secs, 3) +
             " s (limit 10 s)");
}

// ------------------------------------------------------------------ 2
BodeTable g_noise_free_table;  // reused by criteria 3 and 5

void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const SensorModel model = default_phase(2);
  const SensorModel clean = without_noise(model);
  PlanOptions opts;
  opts.min_sample_rate = 10.0 * model.f_res;

  const auto grid = parse_grid("log:1:10000:40");
  g_noise_free_table =
      run_sweep(SyntheticSource{clean, 5.0, 5.0, 1}, plan_sweep(grid, 1, opts));
  double nf_db = 0.0, nf_deg = 0.0;
  for (const auto& r : g_noise_free_table.rows()) {
    const cplx h = oracle::sensor_h(clean.gain_flat, clean.f_corner,
                                    clean.f_res, clean.q_factor, r.freq);
    nf_db = std::max(nf_db, std::abs(r.magnitude_db - 20.0 * std::log10(std::abs(h))));
    nf_deg = std::max(nf_deg, std::abs(wrap_deg(std::arg(r.value / h) * 180.0 / M_PI)));
  }

  const auto band = parse_grid("log:10:3000:40");
  const BodeTable noisy =
      run_sweep(SyntheticSource{model, 5.0, 5.0, 7}, plan_sweep(band, 16, opts));
  double n_db = 0.0, n_deg = 0.0;
  for (const auto& r : noisy.rows()) {
    const cplx h = oracle::sensor_h(model.gain_flat, model.f_corner,
                                    model.f_res, model.q_factor, r.freq);
    n_db = std::max(n_db, std::abs(r.magnitude_db - 20.0 * std::log10(std::abs(h))));
    n_deg = std::max(n_deg, std::abs(wrap_deg(std::arg(r.value / h) * 180.0 / M_PI)));
  }
  const double secs = seconds_since(t0);
  const bool pass = nf_db <= kNoiseFreeDb && nf_deg <= kNoiseFreeDeg &&
                    n_db <= kNoisyDb && n_deg <= kNoisyDeg &&
                    secs < kSweepRuntimeS;
  report(2, pass,
         "noise-free 1 Hz-10 kHz (" + std::to_string(g_noise_free_table.size()) +
             " pts): " + num(nf_db, 3) + " dB / " + num(nf_deg, 3) +
             " deg (tol 0.1/1); 16-avg noisy 10 Hz-3 kHz (" +
             std::to_string(noisy.size()) + " pts): " + num(n_db, 3) +
             " dB / " + num(n_deg, 3) + " deg (tol 0.5/3); " + num(secs, 3) +
             " s (limit 30 s)");
}

// ------------------------------------------------------------------ 3
void criterion3() {
  const SensorModel model = default_phase(2);
  const BodeTable& t = g_noise_free_table;
  const double f_ref = flat_band_frequency(model);
  const Bandwidth bw = effective_bandwidth(t, f_ref);
  const Peak pk = response_peak(t);
  const double peak_over_flat = pk.magnitude_db - bw.flat_level_db;

  // Noise through the two-range acquisition pipeline.
  const auto lp = low_range_preset();
  const auto hp = high_range_preset();
  const auto low = averaged_periodogram(record_noise_segments(model, lp, 128, 11));
  const auto high = averaged_periodogram(record_noise_segments(model, hp, 128, 12));
  const double noise = stitched_band_rms(low, lp, high, hp, 10.0, 3000.0);
  const double vmin60 = min_detectable_input(noise, t, 60.0);
  const double dr = dynamic_range(280.0, 0.30);
  const double ddr = displacement_dynamic_range(3.0e-6, 1.5e-9);

  const bool bw_ok = std::abs(bw.f_low - kBwLow) <= kBwLowTol &&
                     std::abs(bw.f_high - kBwHigh) <= kBwHighTol;
  const bool peak_ok = peak_over_flat >= kPeakLoDb && peak_over_flat <= kPeakHiDb;
  const bool vmin_ok = std::abs(vmin60 / kMinDet60 - 1.0) <= kMinDetRelTol;
  const bool dr_ok = std::abs(dr - kDr280) <= kDr280Tol;
  const bool ddr_ok = std::abs(ddr - kDispDr) <= kDispDrTol;
  report(3, bw_ok && peak_ok && vmin_ok && dr_ok && ddr_ok,
         "bandwidth [" + num(bw.f_low, 4) + " Hz, " + num(bw.f_high, 5) +
             " Hz] (want 10+-3, 3000+-300); peak " + num(peak_over_flat, 4) +
             " dB over flat (want 30-33); v_min(60 Hz) " + num(vmin60, 4) +
             " V (noise " + num(noise * 1e3, 4) + " mV; want 0.30+-15%); DR(280, 0.30) " +
             num(dr, 4) + " dB (want 59.4); displacement DR " + num(ddr, 5) +
             " dB (want 66.02+-0.1)");
}

// ------------------------------------------------------------------ 4
void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  // (a) white Gaussian noise, sigma^2 = 1, 128 segments.
  const double rate = 1000.0, sigma = 1.0;
  const std::size_t seg_n = 1024, n_seg = 128;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<Waveform> segs;
  for (std::size_t s = 0; s < n_seg; ++s) {
    std::vector<double> x(seg_n);
    for (auto& v : x) v = g(rng);
    segs.emplace_back(std::move(x), rate);
  }
  PeriodogramOptions no_detrend;
  no_detrend.subtract_mean = false;
  const PsdEstimate psd = averaged_periodogram(segs, no_detrend);
  const double expected = sigma * sigma / (rate / 2.0);
  double worst_bin = 0.0, mean_level = 0.0;
  std::size_t outside = 0, counted = 0;
  for (std::size_t k = 1; k + 1 < psd.freqs.size(); ++k) {
    const double dev = psd.density[k] / expected - 1.0;
    worst_bin = std::max(worst_bin, std::abs(dev));
    if (std::abs(dev) > kWhitePerBinTol) ++outside;
    mean_level += psd.density[k];
    ++counted;
  }
  mean_level /= static_cast<double>(counted);

  // (b) calibrated band rms, all three phases.
  const auto lp = low_range_preset();
  const auto hp = high_range_preset();
  std::string rms_text;
  bool rms_ok = true;
  for (int phase = 1; phase <= 3; ++phase) {
    const SensorModel m = default_phase(phase);
    const auto low = averaged_periodogram(
        record_noise_segments(m, lp, 128, 100 + static_cast<std::uint64_t>(phase)));
    const auto high = averaged_periodogram(
        record_noise_segments(m, hp, 128, 200 + static_cast<std::uint64_t>(phase)));
    const double r = stitched_band_rms(low, lp, high, hp, 10.0, 3000.0);
    rms_ok = rms_ok && r >= kBandRmsLo && r <= kBandRmsHi;
    rms_text += (phase > 1 ? "/" : "") + num(r * 1e3, 4);
  }

  // (c) PSD integral vs time-domain rms on the calibrated model.
  const SensorModel m2 = default_phase(2);
  const auto raw = record_noise_segments(m2, lp, 128, 300);
  const PsdEstimate full = averaged_periodogram(raw);
  const double psd_rms = band_rms(full, 0.0, full.freqs.back());
  double ms = 0.0;
  for (const auto& w : raw) {
    const double mu = mean(w.samples());
    double acc = 0.0;
    for (double v : w.samples()) acc += (v - mu) * (v - mu);
    ms += acc / static_cast<double>(w.size());
  }
  const double time_rms = std::sqrt(ms / static_cast<double>(raw.size()));
  const double agree = std::abs(psd_rms / time_rms - 1.0);

  const double secs = seconds_since(t0);
  const bool white_ok = outside == 0;
  report(4, white_ok && rms_ok && agree <= kPsdVsTimeTol && secs < kNoiseRuntimeS,
         "white PSD per bin: worst " + num(worst_bin * 100, 3) + "%, " +
             std::to_string(outside) + "/" + std::to_string(counted) +
             " bins outside +-5% (mean level " +
             num((mean_level / expected - 1.0) * 100, 3) +
             "%); band rms phases 1/2/3 " + rms_text +
             " mV (want 1.26-1.69); PSD vs time rms " + num(agree * 100, 3) +
             "% (tol 1%); " + num(secs, 3) + " s (limit 60 s)");
}

// ------------------------------------------------------------------ 5
struct PulseOutcome {
  PulseMetrics est;
  PulseMetrics ref;
};

PulseOutcome run_pulse(double duration, double f_high) {
  const SensorModel model = without_noise(default_phase(2));
  const double rate = 25000.0;
  const Waveform v_in =
      square_pulse(150.0, duration, rate, default_pulse_record(duration));
  const auto sim = simulate_output(model, v_in, 0);
  if (sim.saturated) throw Error(ErrorKind::kSaturation, "pulse saturated");
  ApodizationSpec spec;
  spec.f_high = f_high;
  const auto res = reconstruct(sim.output, g_noise_free_table, spec, &v_in);
  if (!res.metrics) throw Error(ErrorKind::kNotPulseLike, "no pulse metrics");
  return {*res.metrics, pulse_metrics(v_in)};
}

void criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p25 = run_pulse(25e-3, 4000.0);
  const auto p2_5 = run_pulse(2.5e-3, 4000.0);
  const auto p250 = run_pulse(250e-6, 4000.0);
  const auto p250n = run_pulse(250e-6, 1000.0);
  const double secs = seconds_since(t0);

  auto long_ok = [](const PulseOutcome& p) {
    return std::abs(*p.est.amplitude_error_pct) <= kPulseAmpTolPct &&
           !(p.est.residual_ringing_rms > kRingingFrac * p.est.peak_amplitude);
  };
  auto describe = [](const PulseOutcome& p) {
    return "err " + num(*p.est.amplitude_error_pct, 4) + "%, ringing " +
           num(100.0 * p.est.residual_ringing_rms / p.est.peak_amplitude, 3) +
           "%, fwhm " + num(p.est.fwhm * 1e3, 4) + " ms (ref " +
           num(p.ref.fwhm * 1e3, 4) + ")";
  };
  const bool ok25 = long_ok(p25);
  const bool ok2_5 = long_ok(p2_5);
  const bool ok250 = std::abs(*p250.est.amplitude_error_pct) <= kShortPulseTolPct &&
                     p250.est.fwhm > p250.ref.fwhm;
  const bool ok250n = *p250n.est.amplitude_error_pct < -kNarrowDeficitPct;
  report(5, ok25 && ok2_5 && ok250 && ok250n && secs < kEqRuntimeS,
         "25 ms: " + describe(p25) + "; 2.5 ms: " + describe(p2_5) +
             "; 250 us: " + describe(p250) + "; 250 us @ f_high 1 kHz: err " +
             num(*p250n.est.amplitude_error_pct, 4) + "% (want < -50%); " +
             num(secs, 3) + " s (limit 30 s)");
}

// ------------------------------------------------------------------ 6
void criterion6() {
  const double f_low = 10.0, f_high = 4000.0;
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double f = 2.0 * f_high * i / 9999.0;
    const double wl = f < f_low ? std::sin(M_PI * f / (2.0 * f_low)) : 1.0;
    const double wh = f < f_high ? std::cos(M_PI * f / (2.0 * f_high)) : 0.0;
    worst = std::max(worst, std::abs(window_low(f, f_low) - wl));
    worst = std::max(worst, std::abs(window_high(f, f_high) - wh));
    // Dense coverage of the low edge too.
    const double fl = 2.0 * f_low * i / 9999.0;
    const double wl2 = fl < f_low ? std::sin(M_PI * fl / (2.0 * f_low)) : 1.0;
    worst = std::max(worst, std::abs(window_low(fl, f_low) - wl2));
  }
  const double hl = window_low(f_low / 2.0, f_low);
  const double hh = window_high(f_high / 2.0, f_high);
  const bool pass = worst <= kWindowTol &&
                    std::abs(hl - 0.7071068) <= kHalfPointTol &&
                    std::abs(hh - 0.7071068) <= kHalfPointTol;
  report(6, pass,
         "max |W - analytic| " + num(worst, 3) + " (tol 1e-12); W_L(f_low/2) " +
             num(hl, 9) + ", W_H(f_high/2) " + num(hh, 9));
}

// ------------------------------------------------------------------ 7
void criterion7() {
  const SensorModel model = without_noise(default_phase(2));
  const double rate = 25000.0, f = 100.0;
  const std::size_t n = 25000;  // 1 s, 100 whole periods
  std::vector<double> ins, outs;
  for (int i = 0; i <= 20; ++i) {
    const double a_rms = std::pow(10.0, i * 0.1);  // 1 .. 100 V rms
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] = a_rms * std::sqrt(2.0) * std::sin(2.0 * M_PI * f * k / rate);
    }
    const Waveform v_in(std::move(x), rate);
    const auto sim = simulate_output(model, v_in, 0);
    const auto bin = value_at_frequency(forward_transform(sim.output), f);
    ins.push_back(a_rms);
    outs.push_back(std::abs(bin.value) * std::sqrt(2.0) / static_cast<double>(n));
  }
  const auto fit = loglog_linearity(ins, outs);
  std::vector<double> qx, qy;
  for (int i = 1; i <= 20; ++i) {
    qx.push_back(0.5 * i);
    qy.push_back(3.0 * qx.back() * qx.back());
  }
  const auto quad = loglog_linearity(qx, qy);
  report(7, std::abs(fit.slope - 1.0) <= kSlopeTol &&
                std::abs(quad.slope - 2.0) <= kQuadTol,
         "model sweep slope " + num(fit.slope, 8) + " +- " +
             num(fit.slope_stderr, 3) + " (want 1+-0.005); quadratic slope " +
             num(quad.slope, 12) + " (want 2+-1e-6)");
}

// ------------------------------------------------------------------ 8
int run_cli(const std::string& cli, const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" + cli + "' " + args +
                          " > stdout.txt 2> stderr.txt";
  return std::system(cmd.c_str());
}

void criterion8(const std::string& cli) {
  const std::vector<std::string> steps = {
      "simulate --model default_phase2 --pulse 150:0.0025 --seed 5 --out-dir pulse",
      "simulate --model default_phase2 --noise-free --pulse 150:0.0025 --out-dir clean",
      "simulate --model default_phase1 --sweep-out rec --grid log:20:2000:2 "
      "--averages 2 --seed 3",
      "characterize --data rec --out bode_rec.csv",
      "characterize --model default_phase2 --grid log:1:10000:20 --averages 4 "
      "--seed 9 --out bode.csv",
      "noise --model default_phase3 --segments 32 --seed 4 --out psd.csv "
      "--report report.csv",
      "equalize --input pulse/out.csv --response bode.csv --reference pulse/in.csv "
      "--out est.csv --metrics metrics.csv",
  };
  const fs::path base = fs::temp_directory_path() / "fosense_acceptance_c8";
  fs::remove_all(base);
  std::vector<fs::path> runs = {base / "a", base / "b"};
  bool all_ok = true;
  std::string why;
  for (const auto& dir : runs) {
    fs::create_directories(dir);
    for (const auto& s : steps) {
      // stdout of each step is kept for comparison as well.
      if (run_cli(cli, s, dir) != 0) {
        all_ok = false;
        why = "step failed: " + s;
      }
      fs::rename(dir / "stdout.txt",
                 dir / ("stdout_" + s.substr(0, s.find(' ')) + "_" +
                        std::to_string(&s - steps.data()) + ".txt"));
    }
  }
  std::size_t compared = 0, differing = 0;
  if (all_ok) {
    for (const auto& e : fs::recursive_directory_iterator(runs[0])) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), runs[0]);
      const fs::path other = runs[1] / rel;
      ++compared;
      if (!fs::exists(other) ||
          io::read_text(e.path()) != io::read_text(other)) {
        ++differing;
        why = "differs: " + rel.string();
      }
    }
  }
  fs::remove_all(base);
  report(8, all_ok && differing == 0 && compared > 0,
         std::to_string(compared) + " artifacts from two seeded end-to-end runs, " +
             std::to_string(differing) + " differ" +
             (why.empty() ? "" : " (" + why + ")"));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-fosense-cli>\n";
    return 2;
  }
  const std::vector<std::pair<int, std::function<void()>>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
      {5, criterion5}, {6, criterion6}, {7, criterion7},
      {8, [&] { criterion8(fs::absolute(argv[1]).string()); }}};
  for (const auto& [id, fn] : criteria) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("threw: ") + e.what());
    }
  }
  std::cout << (g_failures == 0 ? "all criteria passed"
                                : std::to_string(g_failures) + " criteria failed")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
