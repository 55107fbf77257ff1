#include "fosense/noise_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fosense/error.hpp"
#include "fosense/io.hpp"
#include "fosense/random.hpp"

namespace fosense {

namespace {

std::string fmt(double v) { return io::format_double(v); }

std::vector<double> taper_window(Taper taper, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (taper == Taper::kHann) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi *
                                  static_cast<double>(i) /
                                  static_cast<double>(n));
    }
  }
  return w;
}

}  // namespace

PsdEstimate averaged_periodogram(std::span<const Waveform> segments,
                                 const PeriodogramOptions& options) {
  if (segments.empty()) {
    throw Error(ErrorKind::kInvalidInput, "need at least one segment");
  }
  const Waveform& first = segments.front();
  if (first.empty()) throw Error(ErrorKind::kInvalidInput, "empty segment");
  for (const auto& s : segments) require_compatible(first, s);

  if (options.declared_max_content_hz) {
    const double nyq = first.nyquist();
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto lp = segments[i].lowpass_hz();
      if (*options.declared_max_content_hz > nyq && (!lp || *lp > nyq)) {
        throw Error(ErrorKind::kAliasingRisk,
                    "segment " + std::to_string(i) +
                        " is not anti-alias filtered but content up to " +
                        fmt(*options.declared_max_content_hz) +
                        " Hz exceeds Nyquist " + fmt(nyq) + " Hz");
      }
    }
  }

  const std::size_t n = first.size();
  const double rate = first.sample_rate();
  const auto window = taper_window(options.taper, n);
  double power_gain = 0.0;
  for (double w : window) power_gain += w * w;
  power_gain /= static_cast<double>(n);

  const std::size_t half = n / 2;
  PsdEstimate psd;
  psd.resolution_bw = rate / static_cast<double>(n);
  psd.n_averages = segments.size();
  psd.freqs.resize(half + 1);
  psd.density.assign(half + 1, 0.0);
  for (std::size_t k = 0; k <= half; ++k) {
    psd.freqs[k] = static_cast<double>(k) * psd.resolution_bw;
  }

  const double norm = 1.0 / (rate * static_cast<double>(n) * power_gain);
  for (const auto& seg : segments) {
    const double mu = options.subtract_mean ? mean(seg.samples()) : 0.0;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = (seg[i] - mu) * window[i];
    const Spectrum s = forward_transform(Waveform(std::move(x), rate));
    for (std::size_t k = 0; k <= half; ++k) {
      const bool edge = k == 0 || 2 * k == n;
      psd.density[k] += std::norm(s.bins[k]) * norm * (edge ? 1.0 : 2.0);
    }
  }
  for (double& d : psd.density) d /= static_cast<double>(segments.size());
  return psd;
}

double band_rms(const PsdEstimate& psd, double f_lo, double f_hi) {
  if (psd.freqs.empty()) {
    throw Error(ErrorKind::kOutOfRange, "empty PSD estimate");
  }
  const double df = psd.resolution_bw;
  const double grid_hi = psd.freqs.back() + 0.5 * df;
  if (!(f_lo < f_hi) || f_lo < 0.0 || f_hi > grid_hi * (1.0 + 1e-12)) {
    throw Error(ErrorKind::kOutOfRange,
                "band [" + fmt(f_lo) + ", " + fmt(f_hi) +
                    "] Hz is outside the PSD grid [0, " + fmt(grid_hi) + "]");
  }
  double power = 0.0;
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    const double lo = std::max(f_lo, psd.freqs[k] - 0.5 * df);
    const double hi = std::min(f_hi, psd.freqs[k] + 0.5 * df);
    if (hi > lo) power += psd.density[k] * (hi - lo);
  }
  return std::sqrt(power);
}

double min_detectable_input(double noise_rms, const BodeTable& response,
                            double f) {
  if (!(noise_rms >= 0.0)) {
    throw Error(ErrorKind::kInvalidInput, "noise rms must be >= 0");
  }
  const double mag = std::abs(interpolate_response(response, f));
  if (!(mag > 0.0)) {
    throw Error(ErrorKind::kUndetectable,
                "|H| is zero at " + fmt(f) + " Hz; no input is detectable");
  }
  return noise_rms / mag;
}

double dynamic_range(double v_max_in, double v_min_in) {
  if (!(v_max_in > 0.0) || !(v_min_in > 0.0) || !(v_max_in > v_min_in)) {
    throw Error(ErrorKind::kInvalidInput,
                "dynamic range needs v_max > v_min > 0");
  }
  return 20.0 * std::log10(v_max_in / v_min_in);
}

AcquisitionPreset low_range_preset() {
  return {"lf", 1000.0, 5000.0, 10.0, 1000.0, 8192};
}

AcquisitionPreset high_range_preset() {
  return {"hf", 10000.0, 50000.0, 1000.0, 10000.0, 8192};
}

std::vector<Waveform> record_noise_segments(const SensorModel& m,
                                            const AcquisitionPreset& preset,
                                            std::size_t count,
                                            std::uint64_t seed) {
  validate(m);
  std::vector<Waveform> out;
  out.reserve(count);
  const double duration =
      static_cast<double>(preset.segment_samples) / preset.sample_rate;
  for (std::size_t i = 0; i < count; ++i) {
    Waveform noise = synthesize_noise(m.noise, m, duration, preset.sample_rate,
                                      derive_seed(seed, i), preset.lowpass_hz);
    std::vector<double> v(noise.samples().begin(), noise.samples().end());
    for (double& x : v) {
      x = std::clamp(x + m.v_quiescent, m.v_clip_low, m.v_clip_high);
    }
    out.emplace_back(std::move(v), preset.sample_rate, 0.0, preset.lowpass_hz);
  }
  return out;
}

double stitched_band_rms(const PsdEstimate& low, const AcquisitionPreset& lp,
                         const PsdEstimate& high, const AcquisitionPreset& hp,
                         double f_lo, double f_hi) {
  if (!(f_lo < f_hi)) {
    throw Error(ErrorKind::kOutOfRange, "band needs f_lo < f_hi");
  }
  // Below the split the finer low range is preferred.
  const double split = std::clamp(lp.band_hi, f_lo, f_hi);
  double power = 0.0;
  if (split > f_lo) {
    if (f_lo < lp.band_lo) {
      throw Error(ErrorKind::kOutOfRange,
                  fmt(f_lo) + " Hz is below the low range");
    }
    power += std::pow(band_rms(low, f_lo, split), 2);
  }
  if (f_hi > split) {
    if (f_hi > hp.band_hi) {
      throw Error(ErrorKind::kOutOfRange,
                  fmt(f_hi) + " Hz is above the high range");
    }
    power += std::pow(band_rms(high, split, f_hi), 2);
  }
  return std::sqrt(power);
}

SensitivityReport make_sensitivity_report(double band_rms_v, double f_lo,
                                          double f_hi,
                                          const BodeTable& response,
                                          std::span<const double> freqs,
                                          double v_max_input) {
  SensitivityReport r;
  r.f_lo = f_lo;
  r.f_hi = f_hi;
  r.band_rms = band_rms_v;
  for (double f : freqs) {
    r.min_detectable.push_back({f, min_detectable_input(band_rms_v, response, f)});
  }
  if (!r.min_detectable.empty() && v_max_input > 0.0) {
    r.dynamic_range_freq = r.min_detectable.front().freq;
    r.v_max_input = v_max_input;
    r.dynamic_range_db =
        dynamic_range(v_max_input, r.min_detectable.front().v_min);
  }
  return r;
}

std::string psd_to_csv(const PsdEstimate& psd) {
  std::string out = "freq_hz,psd_v2_per_hz\n";
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    out += fmt(psd.freqs[k]) + ',' + fmt(psd.density[k]) + '\n';
  }
  return out;
}

std::string report_to_text(const SensitivityReport& r) {
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof(buf), "band %.6g-%.6g Hz: noise %.4g mV rms\n",
                r.f_lo, r.f_hi, r.band_rms * 1e3);
  out += buf;
  for (const auto& p : r.min_detectable) {
    std::snprintf(buf, sizeof(buf),
                  "min detectable input at %.6g Hz: %.4g mV rms\n", p.freq,
                  p.v_min * 1e3);
    out += buf;
  }
  if (r.v_max_input > 0.0) {
    std::snprintf(buf, sizeof(buf),
                  "dynamic range at %.6g Hz (max %.4g V rms): %.2f dB\n",
                  r.dynamic_range_freq, r.v_max_input, r.dynamic_range_db);
    out += buf;
  }
  return out;
}

std::string report_to_csv(const SensitivityReport& r) {
  std::string out = "quantity,freq_hz,value\n";
  out += "band_rms_v," + fmt(r.f_lo) + ':' + fmt(r.f_hi) + ',' +
         fmt(r.band_rms) + '\n';
  for (const auto& p : r.min_detectable) {
    out += "min_detectable_v," + fmt(p.freq) + ',' + fmt(p.v_min) + '\n';
  }
  if (r.v_max_input > 0.0) {
    out += "dynamic_range_db," + fmt(r.dynamic_range_freq) + ',' +
           fmt(r.dynamic_range_db) + '\n';
  }
  return out;
}

}  // namespace fosense
