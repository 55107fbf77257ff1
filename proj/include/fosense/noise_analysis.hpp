#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fosense/characterization.hpp"
#include "fosense/sensor_model.hpp"
#include "fosense/waveform.hpp"

namespace fosense {

/// Single-sided PSD in V^2/Hz on bins 0..N/2 of the segment length.
struct PsdEstimate {
  std::vector<double> freqs;
  std::vector<double> density;
  std::size_t n_averages = 0;
  double resolution_bw = 0.0;  // 1/T of one segment
};

enum class Taper { kRectangular, kHann };

struct PeriodogramOptions {
  bool subtract_mean = true;
  Taper taper = Taper::kRectangular;
  // Highest frequency the caller declares present in the measured signal.
  // Unfiltered segments whose Nyquist lies below it are refused.
  std::optional<double> declared_max_content_hz;
};

PsdEstimate averaged_periodogram(std::span<const Waveform> segments,
                                 const PeriodogramOptions& options = {});

/// sqrt of sum(density * overlap) where each bin owns
/// [f_k - df/2, f_k + df/2] and partially covered bins are weighted by the
/// overlapping fraction.
double band_rms(const PsdEstimate& psd, double f_lo, double f_hi);

/// Input-referred level whose output rms equals the noise.
double min_detectable_input(double noise_rms, const BodeTable& response,
                            double f);

double dynamic_range(double v_max_in, double v_min_in);

// Two-range acquisition: an anti-aliasing lowpass ahead of the digitizer and
// the band each range is trusted for.
struct AcquisitionPreset {
  std::string name;
  double lowpass_hz = 0.0;
  double sample_rate = 0.0;
  double band_lo = 0.0;
  double band_hi = 0.0;
  std::size_t segment_samples = 0;
};

AcquisitionPreset low_range_preset();   // 1 kHz filter, 5 kS/s, 10-1000 Hz
AcquisitionPreset high_range_preset();  // 10 kHz filter, 50 kS/s, 1-10 kHz

/// No-input sensor output records (quiescent level plus noise, clipped).
std::vector<Waveform> record_noise_segments(const SensorModel& m,
                                            const AcquisitionPreset& preset,
                                            std::size_t count,
                                            std::uint64_t seed);

/// Band rms assembled from the two ranges: each sub-band is integrated on the
/// estimate whose band covers it, and powers add.
double stitched_band_rms(const PsdEstimate& low, const AcquisitionPreset& lp,
                         const PsdEstimate& high, const AcquisitionPreset& hp,
                         double f_lo, double f_hi);

struct SensitivityReport {
  double f_lo = 0.0;
  double f_hi = 0.0;
  double band_rms = 0.0;
  struct Point {
    double freq = 0.0;
    double v_min = 0.0;
  };
  std::vector<Point> min_detectable;
  double dynamic_range_freq = 0.0;
  double v_max_input = 0.0;
  double dynamic_range_db = 0.0;
};

/// Uses the first min-detectable frequency for the dynamic-range figure.
SensitivityReport make_sensitivity_report(double band_rms_v, double f_lo,
                                          double f_hi,
                                          const BodeTable& response,
                                          std::span<const double> freqs,
                                          double v_max_input);

std::string psd_to_csv(const PsdEstimate& psd);
std::string report_to_text(const SensitivityReport& r);
std::string report_to_csv(const SensitivityReport& r);

}  // namespace fosense
