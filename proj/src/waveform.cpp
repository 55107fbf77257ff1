#include "fosense/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fosense/error.hpp"
#include "fosense/fft.hpp"

namespace fosense {

Waveform::Waveform(std::vector<double> samples, double sample_rate, double t0,
                   std::optional<double> lowpass_hz)
    : samples_(std::move(samples)),
      sample_rate_(sample_rate),
      t0_(t0),
      lowpass_hz_(lowpass_hz) {
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) {
    throw Error(ErrorKind::kInvalidInput,
                "sample rate must be positive, got " +
                    std::to_string(sample_rate_));
  }
  if (lowpass_hz_ && !(*lowpass_hz_ > 0.0)) {
    throw Error(ErrorKind::kInvalidInput, "lowpass cutoff must be positive");
  }
}

double Spectrum::frequency_of(std::size_t k) const noexcept {
  const std::size_t n = bins.size();
  const double kk = k <= n / 2 ? static_cast<double>(k)
                               : static_cast<double>(k) - static_cast<double>(n);
  return kk * bin_spacing;
}

FrequencyGrid::FrequencyGrid(std::vector<double> frequencies)
    : freqs_(std::move(frequencies)) {
  for (std::size_t i = 0; i < freqs_.size(); ++i) {
    if (!(freqs_[i] >= 0.0) || !std::isfinite(freqs_[i])) {
      throw Error(ErrorKind::kInvalidInput,
                  "grid frequencies must be finite and >= 0");
    }
    if (i > 0 && !(freqs_[i] > freqs_[i - 1])) {
      throw Error(ErrorKind::kInvalidInput,
                  "grid frequencies must be strictly increasing");
    }
  }
}

FrequencyGrid FrequencyGrid::log_spaced(double f_start, double f_stop,
                                        int per_decade) {
  if (!(f_start > 0.0) || !(f_stop >= f_start) || per_decade < 1) {
    throw Error(ErrorKind::kInvalidInput,
                "log grid needs 0 < start <= stop and per_decade >= 1");
  }
  const double lo = std::log10(f_start);
  const double hi = std::log10(f_stop);
  const auto steps =
      static_cast<long>(std::floor((hi - lo) * per_decade + 1e-9));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps) + 2);
  for (long i = 0; i <= steps; ++i) {
    out.push_back(std::pow(10.0, lo + static_cast<double>(i) / per_decade));
  }
  if (f_stop > out.back() * (1.0 + 1e-9)) out.push_back(f_stop);
  return FrequencyGrid(std::move(out));
}

void require_compatible(const Waveform& a, const Waveform& b) {
  if (a.size() != b.size() || a.sample_rate() != b.sample_rate()) {
    throw Error(ErrorKind::kMismatch,
                "waveforms differ in length or sample rate (" +
                    std::to_string(a.size()) + " @ " +
                    std::to_string(a.sample_rate()) + " Hz vs " +
                    std::to_string(b.size()) + " @ " +
                    std::to_string(b.sample_rate()) + " Hz)");
  }
}

Spectrum forward_transform(const Waveform& w) {
  if (w.empty()) {
    throw Error(ErrorKind::kInvalidInput, "cannot transform an empty waveform");
  }
  const std::size_t n = w.size();
  std::vector<cplx> bins = fft::forward_real(w.samples());
  bins.resize(n);
  for (std::size_t k = n / 2 + 1; k < n; ++k) bins[k] = std::conj(bins[n - k]);
  return Spectrum{std::move(bins),
                  w.sample_rate() / static_cast<double>(w.size())};
}

namespace {

void require_hermitian(const Spectrum& s) {
  const std::size_t n = s.size();
  if (n == 0) {
    throw Error(ErrorKind::kInvalidInput, "cannot invert an empty spectrum");
  }
  double peak = 0.0;
  for (const auto& b : s.bins) peak = std::max(peak, std::abs(b));
  double asym = std::abs(s.bins[0].imag());
  for (std::size_t k = 1; k < n; ++k) {
    asym = std::max(asym, std::abs(s.bins[n - k] - std::conj(s.bins[k])));
  }
  if (asym > 1e-9 * peak) {
    throw Error(ErrorKind::kSymmetryViolation,
                "spectrum is not Hermitian (max asymmetry " +
                    std::to_string(asym / peak) + " of peak)");
  }
}

}  // namespace

InverseResult inverse_transform_checked(const Spectrum& s, double t0) {
  require_hermitian(s);
  const std::size_t n = s.size();
  std::vector<cplx> buf = s.bins;
  fft::transform(buf, fft::Direction::kInverse);
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<double> re(n);
  double re2 = 0.0, im2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = buf[i].real() * scale;
    const double im = buf[i].imag() * scale;
    re2 += re[i] * re[i];
    im2 += im * im;
  }
  const double rel = re2 > 0.0 ? std::sqrt(im2 / re2) : std::sqrt(im2);
  return InverseResult{Waveform(std::move(re), s.sample_rate(), t0), rel};
}

Waveform inverse_transform(const Spectrum& s, double t0) {
  require_hermitian(s);
  const std::size_t n = s.size();
  return Waveform(fft::inverse_real(std::span(s.bins).first(n / 2 + 1), n),
                  s.sample_rate(), t0);
}

BinValue value_at_frequency(const Spectrum& s, double f) {
  const double nyq = 0.5 * s.sample_rate();
  if (!(f >= 0.0)) {
    throw Error(ErrorKind::kOutOfBand, "probe frequency must be >= 0");
  }
  if (f > nyq * (1.0 + 1e-12)) {
    throw Error(ErrorKind::kOutOfBand,
                "probe frequency " + std::to_string(f) +
                    " Hz exceeds Nyquist " + std::to_string(nyq) + " Hz");
  }
  auto k = static_cast<std::size_t>(std::llround(f / s.bin_spacing));
  k = std::min(k, s.size() / 2);
  return BinValue{s.bins[k], static_cast<double>(k) * s.bin_spacing, k};
}

BinValue value_at_frequency(const Waveform& w, double f) {
  if (w.empty()) {
    throw Error(ErrorKind::kInvalidInput, "cannot transform an empty waveform");
  }
  const double spacing = w.sample_rate() / static_cast<double>(w.size());
  const double nyq = w.nyquist();
  if (!(f >= 0.0)) {
    throw Error(ErrorKind::kOutOfBand, "probe frequency must be >= 0");
  }
  if (f > nyq * (1.0 + 1e-12)) {
    throw Error(ErrorKind::kOutOfBand,
                "probe frequency " + std::to_string(f) +
                    " Hz exceeds Nyquist " + std::to_string(nyq) + " Hz");
  }
  auto k = static_cast<std::size_t>(std::llround(f / spacing));
  k = std::min(k, w.size() / 2);
  return BinValue{fft::real_bin(w.samples(), k),
                  static_cast<double>(k) * spacing, k};
}

double mean(std::span<const double> x) noexcept {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) /
         static_cast<double>(x.size());
}

double rms(std::span<const double> x) noexcept {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace fosense
