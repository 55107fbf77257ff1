#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace fosense {

using cplx = std::complex<double>;

/// Uniformly sampled real time series in volts.
///
/// Immutable after construction. `lowpass_hz` records the cutoff of an
/// anti-aliasing filter that preceded acquisition, when there was one.
class Waveform {
 public:
  Waveform(std::vector<double> samples, double sample_rate, double t0 = 0.0,
           std::optional<double> lowpass_hz = std::nullopt);

  std::span<const double> samples() const noexcept { return samples_; }
  double operator[](std::size_t i) const noexcept { return samples_[i]; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  double sample_rate() const noexcept { return sample_rate_; }
  double t0() const noexcept { return t0_; }
  std::optional<double> lowpass_hz() const noexcept { return lowpass_hz_; }

  double duration() const noexcept {
    return static_cast<double>(samples_.size()) / sample_rate_;
  }
  double nyquist() const noexcept { return 0.5 * sample_rate_; }
  double time_at(std::size_t i) const noexcept {
    return t0_ + static_cast<double>(i) / sample_rate_;
  }

 private:
  std::vector<double> samples_;
  double sample_rate_;
  double t0_;
  std::optional<double> lowpass_hz_;
};

/// Full-length DFT of a waveform. Bin k sits at k * bin_spacing for
/// k <= N/2 and at (k - N) * bin_spacing above.
struct Spectrum {
  std::vector<cplx> bins;
  double bin_spacing = 0.0;

  std::size_t size() const noexcept { return bins.size(); }
  double sample_rate() const noexcept {
    return bin_spacing * static_cast<double>(bins.size());
  }
  /// Signed frequency of bin k.
  double frequency_of(std::size_t k) const noexcept;
};

/// Strictly increasing, non-negative list of frequencies in Hz.
class FrequencyGrid {
 public:
  explicit FrequencyGrid(std::vector<double> frequencies);

  /// `per_decade` log-spaced points from f_start up to and including f_stop.
  static FrequencyGrid log_spaced(double f_start, double f_stop,
                                  int per_decade);

  std::span<const double> frequencies() const noexcept { return freqs_; }
  std::size_t size() const noexcept { return freqs_.size(); }
  double operator[](std::size_t i) const noexcept { return freqs_[i]; }

 private:
  std::vector<double> freqs_;
};

/// Throws kMismatch unless both waveforms share rate and length.
void require_compatible(const Waveform& a, const Waveform& b);

/// Unnormalized analysis sum with an e^{-j w t} kernel.
Spectrum forward_transform(const Waveform& w);

struct InverseResult {
  Waveform waveform;
  // rms of the discarded imaginary part relative to the rms of the real part
  double imag_residue_rel = 0.0;
};

/// 1/N synthesis. Throws kSymmetryViolation when the spectrum is not
/// Hermitian to within 1e-9 of its peak magnitude.
InverseResult inverse_transform_checked(const Spectrum& s, double t0 = 0.0);
Waveform inverse_transform(const Spectrum& s, double t0 = 0.0);

struct BinValue {
  cplx value;
  double frequency = 0.0;  // exact frequency of the bin used
  std::size_t bin = 0;
};

/// Nearest-bin lookup on [0, Nyquist]; no interpolation.
BinValue value_at_frequency(const Spectrum& s, double f);
/// Same bin as value_at_frequency(forward_transform(w), f), computed alone.
BinValue value_at_frequency(const Waveform& w, double f);

double mean(std::span<const double> x) noexcept;
double rms(std::span<const double> x) noexcept;

}  // namespace fosense
