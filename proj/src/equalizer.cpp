#include "fosense/equalizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fosense/error.hpp"
#include "fosense/io.hpp"

namespace fosense {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) { return io::format_double(v); }

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<long>(mid)));
  }
  return m;
}

// Shared core. `lookup` returns the response at f, or nullopt when f lies
// outside the usable response.
ReconstructionResult reconstruct_impl(
    const Waveform& v_out,
    const std::function<std::optional<cplx>(double)>& lookup,
    double response_peak, const ApodizationSpec& spec,
    const Waveform* reference) {
  validate(spec);
  if (v_out.empty()) {
    throw Error(ErrorKind::kInvalidInput, "output waveform is empty");
  }
  if (!(v_out.sample_rate() > 2.0 * spec.f_high)) {
    throw Error(ErrorKind::kInvalidInput,
                "sample rate " + fmt(v_out.sample_rate()) +
                    " Hz must exceed 2*f_high = " + fmt(2.0 * spec.f_high) +
                    " Hz");
  }

  const double mu = mean(v_out.samples());
  std::vector<double> centered(v_out.samples().begin(), v_out.samples().end());
  for (double& v : centered) v -= mu;
  Spectrum s = forward_transform(Waveform(std::move(centered), v_out.sample_rate()));

  const std::size_t n = s.size();
  struct Pending {
    std::size_t k;
    double w;
    cplx h;
  };
  std::vector<Pending> pass;
  double peak = response_peak;
  for (std::size_t k = 1; 2 * k <= n; ++k) {
    const double f = static_cast<double>(k) * s.bin_spacing;
    const double w = f >= spec.f_high ? 0.0 : apodization(f, spec);
    if (w == 0.0) continue;
    const auto h = lookup(f);
    if (!h) {
      if (w > 0.01) {
        throw Error(ErrorKind::kCoverage,
                    "response does not cover " + fmt(f) +
                        " Hz where the window weight is " + fmt(w));
      }
      continue;
    }
    peak = std::max(peak, std::abs(*h));
    pass.push_back({k, w, *h});
  }

  std::vector<cplx> out(n, cplx{});
  for (const auto& p : pass) {
    if (!(std::abs(p.h) >= 1e-6 * peak)) {
      throw Error(ErrorKind::kIllConditioned,
                  "|H| at " + fmt(static_cast<double>(p.k) * s.bin_spacing) +
                      " Hz is below 1e-6 of its peak inside the passband");
    }
    out[p.k] = s.bins[p.k] * p.w / p.h;
    if (2 * p.k == n) {
      out[p.k] = out[p.k].real();
    } else {
      out[n - p.k] = std::conj(out[p.k]);
    }
  }

  Waveform est =
      inverse_transform(Spectrum{std::move(out), s.bin_spacing}, v_out.t0());
  ReconstructionResult result{std::move(est), std::nullopt};
  try {
    result.metrics = pulse_metrics(result.estimate, reference);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNotPulseLike) throw;
  }
  return result;
}

}  // namespace

void validate(const ApodizationSpec& spec) {
  if (!(spec.f_low > 0.0) || !(spec.f_high > spec.f_low)) {
    throw Error(ErrorKind::kInvalidInput, "need 0 < f_low < f_high");
  }
  for (const auto& n : spec.notches) {
    if (!(n.width > 0.0) || !(n.center > 0.0)) {
      throw Error(ErrorKind::kInvalidInput,
                  "notch center and width must be > 0");
    }
  }
}

double window_low(double f, double f_low) {
  if (f <= 0.0) return 0.0;
  if (f >= f_low) return 1.0;
  return std::sin(kPi * f / (2.0 * f_low));
}

double window_high(double f, double f_high) {
  if (f >= f_high) return 0.0;
  if (f <= 0.0) return 1.0;
  return std::cos(kPi * f / (2.0 * f_high));
}

double notch_gain(double f, const Notch& notch) {
  const double d = std::abs(f - notch.center);
  if (d >= 0.5 * notch.width) return 1.0;
  const double s = std::sin(kPi * d / notch.width);
  return s * s;
}

double apodization(double f, const ApodizationSpec& spec) {
  double w = window_low(f, spec.f_low) * window_high(f, spec.f_high);
  for (const auto& n : spec.notches) w *= notch_gain(f, n);
  return w;
}

namespace {

struct Crossings {
  std::size_t ip = 0;      // index of the peak
  double signed_peak = 0;  // deviation at the peak
  double lead = 0.0;       // interpolated half-max crossings, in samples
  double trail = 0.0;
};

// dev(i) is the deviation of sample i from the baseline.
template <typename Dev>
Crossings find_crossings(std::size_t n, const Dev& dev) {
  Crossings c;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(dev(i)) > std::abs(dev(c.ip))) c.ip = i;
  }
  c.signed_peak = dev(c.ip);
  if (c.signed_peak == 0.0) {
    throw Error(ErrorKind::kNotPulseLike, "record is flat");
  }
  const double sgn = c.signed_peak > 0.0 ? 1.0 : -1.0;
  const double half = 0.5 * std::abs(c.signed_peak);
  auto above = [&](std::size_t i) { return sgn * dev(i) - half; };
  std::size_t first = 0;
  while (first < n && above(first) < 0.0) ++first;
  std::size_t last = n - 1;
  while (last > 0 && above(last) < 0.0) --last;
  if (first == 0 || last == n - 1) {
    throw Error(ErrorKind::kNotPulseLike,
                "no half-maximum crossing on both sides of the peak");
  }
  const double a0 = above(first - 1), a1 = above(first);
  c.lead = static_cast<double>(first - 1) + a0 / (a0 - a1);
  const double b0 = above(last), b1 = above(last + 1);
  c.trail = static_cast<double>(last) + b0 / (b0 - b1);
  return c;
}

}  // namespace

PulseMetrics pulse_metrics(const Waveform& estimate, const Waveform* reference) {
  const auto v = estimate.samples();
  const std::size_t n = v.size();
  if (n < 3) throw Error(ErrorKind::kNotPulseLike, "record too short");

  // Pass 1 against the median locates the pulse.
  const double med = median(std::vector<double>(v.begin(), v.end()));
  const Crossings rough =
      find_crossings(n, [&](std::size_t i) { return v[i] - med; });

  // Pass 2: least-squares line through the samples more than one width away
  // from the pulse on either side. Falls back to the median when either side
  // has fewer than two such samples.
  const double width = rough.trail - rough.lead;
  double offset = med, slope = 0.0;
  {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t cnt = 0, before = 0, after = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = static_cast<double>(i);
      const bool pre = x < rough.lead - width;
      const bool post = x > rough.trail + width;
      if (!pre && !post) continue;
      before += pre;
      after += post;
      ++cnt;
      sx += x;
      sy += v[i];
      sxx += x * x;
      sxy += x * v[i];
    }
    const double c = static_cast<double>(cnt);
    const double den = c * sxx - sx * sx;
    if (before >= 2 && after >= 2 && den > 0.0) {
      slope = (c * sxy - sx * sy) / den;
      offset = (sy - slope * sx) / c;
    }
  }
  auto dev = [&](std::size_t i) {
    return v[i] - (offset + slope * static_cast<double>(i));
  };
  const Crossings c = find_crossings(n, dev);

  PulseMetrics m;
  m.baseline = offset + slope * static_cast<double>(c.ip);
  m.baseline_slope = slope * estimate.sample_rate();
  m.peak_amplitude = std::abs(c.signed_peak);
  m.peak_time = static_cast<double>(c.ip) / estimate.sample_rate();
  m.fwhm = (c.trail - c.lead) / estimate.sample_rate();

  const auto start =
      static_cast<std::size_t>(std::ceil(c.trail + (c.trail - c.lead)));
  if (start < n) {
    double acc = 0.0;
    for (std::size_t i = start; i < n; ++i) acc += dev(i) * dev(i);
    m.residual_ringing_rms = std::sqrt(acc / static_cast<double>(n - start));
  } else {
    m.residual_ringing_rms = std::numeric_limits<double>::quiet_NaN();
  }

  if (reference) {
    const PulseMetrics ref = pulse_metrics(*reference);
    m.amplitude_error_pct =
        100.0 * (m.peak_amplitude - ref.peak_amplitude) / ref.peak_amplitude;
  }
  return m;
}

ReconstructionResult reconstruct(const Waveform& v_out, const ResponseFn& h,
                                 const ApodizationSpec& spec,
                                 const Waveform* reference) {
  return reconstruct_impl(
      v_out, [&h](double f) -> std::optional<cplx> { return h(f); }, 0.0,
      spec, reference);
}

ReconstructionResult reconstruct(const Waveform& v_out,
                                 const BodeTable& response,
                                 const ApodizationSpec& spec,
                                 const Waveform* reference) {
  if (response.empty()) {
    throw Error(ErrorKind::kCoverage, "response table is empty");
  }
  double peak = 0.0;
  for (const auto& r : response.rows()) peak = std::max(peak, std::abs(r.value));
  return reconstruct_impl(
      v_out,
      [&response](double f) -> std::optional<cplx> {
        if (f > response.max_freq()) return std::nullopt;
        return interpolate_response(response, f, Extrapolation::kHighPassBelow);
      },
      peak, spec, reference);
}

Waveform square_pulse(double amplitude, double duration, double rate,
                      double record) {
  if (!(rate > 0.0) || !(duration > 0.0) || !(record >= duration)) {
    throw Error(ErrorKind::kInvalidInput,
                "pulse needs rate > 0 and 0 < duration <= record");
  }
  const auto total = static_cast<std::size_t>(std::llround(record * rate));
  const auto on = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(duration * rate)));
  if (on > total) {
    throw Error(ErrorKind::kInvalidInput, "pulse longer than record");
  }
  std::vector<double> x(total, 0.0);
  const std::size_t start = (total - on) / 2;
  std::fill(x.begin() + static_cast<long>(start),
            x.begin() + static_cast<long>(start + on), amplitude);
  return Waveform(std::move(x), rate);
}

double default_pulse_record(double duration) {
  return std::max(4.0 * duration, 0.1);
}

}  // namespace fosense
