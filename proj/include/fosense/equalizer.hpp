#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fosense/characterization.hpp"
#include "fosense/waveform.hpp"

namespace fosense {

struct Notch {
  double center = 0.0;  // Hz
  double width = 0.0;   // Hz, full width of the tapered notch
};

struct ApodizationSpec {
  double f_low = 10.0;     // Hz
  double f_high = 4000.0;  // Hz
  std::vector<Notch> notches;
};

void validate(const ApodizationSpec& spec);

/// sin(pi f / (2 f_low)) below f_low, 1 above.
double window_low(double f, double f_low);
/// cos(pi f / (2 f_high)) below f_high, exactly 0 from f_high up.
double window_high(double f, double f_high);
/// sin^2(pi (f - c) / w) within w/2 of the center, 1 elsewhere.
double notch_gain(double f, const Notch& notch);
/// Product of both windows and every notch.
double apodization(double f, const ApodizationSpec& spec);

struct PulseMetrics {
  double baseline = 0.0;        // fitted baseline at the peak, V
  double baseline_slope = 0.0;  // V/s
  double peak_amplitude = 0.0;  // max |v - baseline|
  double peak_time = 0.0;       // s, relative to the first sample
  double fwhm = 0.0;            // s
  std::optional<double> amplitude_error_pct;
  // rms of v - baseline from one fwhm after the trailing half-max crossing to
  // the end of the record; NaN when that window is empty.
  double residual_ringing_rms = 0.0;
};

/// Throws kNotPulseLike when no half-maximum crossing exists on either side of
/// the peak.
PulseMetrics pulse_metrics(const Waveform& estimate,
                           const Waveform* reference = nullptr);

struct ReconstructionResult {
  Waveform estimate;  // zero-mean, relative volts
  std::optional<PulseMetrics> metrics;
};

using ResponseFn = std::function<cplx(double)>;

/// Apodized inverse filter with an analytic response (no coverage checks).
ReconstructionResult reconstruct(const Waveform& v_out, const ResponseFn& h,
                                 const ApodizationSpec& spec,
                                 const Waveform* reference = nullptr);

/// Apodized inverse filter with a measured response. Below the first row the
/// response follows a +20 dB/decade high-pass tail; above the last row every
/// bin with window weight > 0.01 raises kCoverage.
ReconstructionResult reconstruct(const Waveform& v_out,
                                 const BodeTable& response,
                                 const ApodizationSpec& spec,
                                 const Waveform* reference = nullptr);

/// Centered square pulse of round(duration*rate) samples inside a record of
/// round(record*rate) samples; the remaining samples split evenly before and
/// after.
Waveform square_pulse(double amplitude, double duration, double rate,
                      double record);

/// Default record length for a pulse: max(4 * duration, 0.1 s).
double default_pulse_record(double duration);

}  // namespace fosense
