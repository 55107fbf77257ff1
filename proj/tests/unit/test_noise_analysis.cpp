#include <doctest.h>

#include <functional>

#include <cmath>
#include <random>

#include "fosense/characterization.hpp"
#include "fosense/error.hpp"
#include "fosense/noise_analysis.hpp"

using namespace fosense;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kInvalidInput;
}

std::vector<Waveform> white(std::size_t count, std::size_t n, double rate,
                            double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<Waveform> out;
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<double> x(n);
    for (auto& v : x) v = g(rng);
    out.emplace_back(std::move(x), rate);
  }
  return out;
}

double rel_spread(const PsdEstimate& p) {
  double m = 0, m2 = 0;
  std::size_t c = 0;
  for (std::size_t k = 1; k + 1 < p.density.size(); ++k, ++c) {
    m += p.density[k];
    m2 += p.density[k] * p.density[k];
  }
  m /= c;
  return std::sqrt(m2 / c - m * m) / m;
}

}  // namespace

TEST_CASE("white noise level is sigma^2 over Nyquist") {
  const auto segs = white(128, 2048, 1000.0, 0.5, 1);
  const auto psd = averaged_periodogram(segs);
  CHECK(psd.n_averages == 128);
  CHECK(psd.resolution_bw == doctest::Approx(1000.0 / 2048));
  double mean_level = 0;
  for (std::size_t k = 1; k + 1 < psd.density.size(); ++k) mean_level += psd.density[k];
  mean_level /= static_cast<double>(psd.density.size() - 2);
  CHECK(mean_level == doctest::Approx(0.25 / 500.0).epsilon(0.01));
  for (double d : psd.density) CHECK(d >= 0.0);
}

TEST_CASE("per-bin spread scales as 1/sqrt(averages)") {
  const double s8 = rel_spread(averaged_periodogram(white(8, 1024, 1000.0, 1.0, 2)));
  const double s128 =
      rel_spread(averaged_periodogram(white(128, 1024, 1000.0, 1.0, 3)));
  CHECK(s8 / s128 == doctest::Approx(4.0).epsilon(0.3));
  CHECK(s128 == doctest::Approx(1.0 / std::sqrt(128.0)).epsilon(0.3));
}

TEST_CASE("a bin-centred tone integrates to its rms") {
  const double rate = 1000.0, f = 125.0, amp = 0.3;
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = amp * std::sin(2 * M_PI * f * i / rate);
  const std::vector<Waveform> one{Waveform(x, rate)};
  const auto psd = averaged_periodogram(one);
  CHECK(band_rms(psd, 120.0, 130.0) == doctest::Approx(amp / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(band_rms(psd, 10.0, 100.0) < 1e-12);
}

TEST_CASE("Hann taper keeps the white level") {
  PeriodogramOptions o;
  o.taper = Taper::kHann;
  const auto psd = averaged_periodogram(white(128, 1024, 1000.0, 1.0, 4), o);
  CHECK(band_rms(psd, 50.0, 450.0) == doctest::Approx(std::sqrt(400.0 / 500.0)).epsilon(0.03));
}

TEST_CASE("flat density integrates exactly") {
  PsdEstimate p;
  for (int k = 0; k <= 100; ++k) {
    p.freqs.push_back(k * 10.0);
    p.density.push_back(4e-6);
  }
  p.resolution_bw = 10.0;
  p.n_averages = 1;
  CHECK(band_rms(p, 100.0, 900.0) == doctest::Approx(std::sqrt(4e-6 * 800.0)).epsilon(1e-12));
  CHECK(band_rms(p, 103.0, 487.0) == doctest::Approx(std::sqrt(4e-6 * 384.0)).epsilon(1e-12));
  CHECK(kind_of([&] { band_rms(p, 500.0, 100.0); }) == ErrorKind::kOutOfRange);
  CHECK(kind_of([&] { band_rms(p, 100.0, 2000.0); }) == ErrorKind::kOutOfRange);
}

TEST_CASE("segments must agree and respect the anti-alias declaration") {
  std::vector<Waveform> mixed{Waveform(std::vector<double>(64, 0.0), 100.0),
                              Waveform(std::vector<double>(32, 0.0), 100.0)};
  CHECK(kind_of([&] { averaged_periodogram(mixed); }) == ErrorKind::kMismatch);

  PeriodogramOptions o;
  o.declared_max_content_hz = 5000.0;
  const auto raw = white(2, 256, 1000.0, 1.0, 5);
  CHECK(kind_of([&] { averaged_periodogram(raw, o); }) == ErrorKind::kAliasingRisk);
  std::vector<Waveform> filtered;
  for (const auto& w : raw) {
    filtered.emplace_back(std::vector<double>(w.samples().begin(), w.samples().end()),
                          1000.0, 0.0, 400.0);
  }
  CHECK_NOTHROW(averaged_periodogram(filtered, o));
}

TEST_CASE("minimum detectable input and dynamic range") {
  const auto m = default_phase(2);
  const auto t = sample_response(m, FrequencyGrid::log_spaced(1.0, 10000.0, 40));
  const double h60 = std::abs(transfer_function(m, 60.0));
  CHECK(min_detectable_input(1.54e-3, t, 60.0) ==
        doctest::Approx(1.54e-3 / h60).epsilon(1e-3));
  CHECK(min_detectable_input(1.54e-3, t, 60.0) == doctest::Approx(0.30).epsilon(0.15));
  CHECK(kind_of([&] { min_detectable_input(1e-3, t, 0.1); }) == ErrorKind::kOutOfRange);
  CHECK(dynamic_range(280.0, 0.30) == doctest::Approx(59.40).epsilon(1e-3));
  CHECK(kind_of([] { dynamic_range(1.0, 0.0); }) == ErrorKind::kInvalidInput);
}

TEST_CASE("resonance sensitivity for the strongly resonant phase") {
  // 31 dB of boost on the flat 0.3 V detection limit.
  CHECK(1.4e-3 / (0.00505 * std::pow(10.0, 31.0 / 20.0)) ==
        doctest::Approx(7.8e-3).epsilon(0.01));
  auto m = default_phase(2);
  m.f_res = 2080.0;
  m.q_factor = 60.0;
  const auto t = sample_response(m, FrequencyGrid({1000.0, 2080.0, 3000.0}));
  const double v = min_detectable_input(1.54e-3, t, 2080.0);
  CHECK(v >= 5e-3);
  CHECK(v <= 7e-3);
}

TEST_CASE("two-range acquisition reproduces the calibrated band rms") {
  const auto lp = low_range_preset();
  const auto hp = high_range_preset();
  CHECK(lp.lowpass_hz == 1000.0);
  CHECK(lp.sample_rate == 5000.0);
  CHECK(hp.lowpass_hz == 10000.0);
  CHECK(hp.sample_rate == 50000.0);
  const auto m = default_phase(1);
  const auto low = averaged_periodogram(record_noise_segments(m, lp, 128, 1));
  const auto high = averaged_periodogram(record_noise_segments(m, hp, 128, 2));
  const double r = stitched_band_rms(low, lp, high, hp, 10.0, 3000.0);
  CHECK(r == doctest::Approx(1.40e-3).epsilon(0.05));
  // Without the stitch, each range alone is restricted to its own band.
  CHECK(kind_of([&] { stitched_band_rms(low, lp, high, hp, 1.0, 3000.0); }) ==
        ErrorKind::kOutOfRange);
}

TEST_CASE("report invariants") {
  const auto m = default_phase(2);
  const auto t = sample_response(m, FrequencyGrid::log_spaced(1.0, 10000.0, 40));
  const std::vector<double> freqs{60.0, 2000.0};
  const auto r = make_sensitivity_report(1.54e-3, 10.0, 3000.0, t, freqs, 280.0);
  REQUIRE(r.min_detectable.size() == 2);
  CHECK(r.dynamic_range_freq == 60.0);
  CHECK(r.dynamic_range_db ==
        doctest::Approx(20 * std::log10(280.0 / r.min_detectable[0].v_min)));
  CHECK(r.min_detectable[1].v_min < r.min_detectable[0].v_min / 30.0);
  CHECK(report_to_csv(r).rfind("quantity,freq_hz,value\n", 0) == 0);
}
