#include "fosense/sensor_model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "fosense/error.hpp"
#include "fosense/fft.hpp"
#include "fosense/io.hpp"
#include "fosense/random.hpp"

namespace fosense {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Second-order resonance normalized to unity at dc.
cplx resonance(double f_res, double q, double f) {
  return cplx(f_res * f_res, 0.0) /
         cplx(f_res * f_res - f * f, f * f_res / q);
}

[[noreturn]] void invalid(const std::string& msg) {
  throw Error(ErrorKind::kInvalidInput, msg);
}

}  // namespace

bool NoiseModel::is_zero() const noexcept {
  if (base_density != 0.0) return false;
  return std::all_of(spurs.begin(), spurs.end(),
                     [](const Spur& s) { return s.rms == 0.0; });
}

void validate(const NoiseModel& n) {
  if (!(n.base_density >= 0.0)) invalid("noise base_density must be >= 0");
  if (!(n.resonance_boost >= 0.0)) invalid("noise resonance_boost must be >= 0");
  for (const auto& s : n.spurs) {
    if (!(s.frequency > 0.0)) invalid("spur frequency must be > 0");
    if (!(s.rms >= 0.0)) invalid("spur rms must be >= 0");
  }
}

void validate(const SensorModel& m) {
  if (!(m.gain_flat > 0.0)) invalid("gain_flat must be > 0");
  if (!(m.f_corner > 0.0)) invalid("f_corner must be > 0");
  if (!(m.f_corner < m.f_res)) invalid("f_corner must be below f_res");
  if (!(m.q_factor > 0.5)) invalid("q_factor must exceed 0.5");
  if (!(m.v_clip_low < m.v_quiescent && m.v_quiescent < m.v_clip_high)) {
    invalid("need v_clip_low < v_quiescent < v_clip_high");
  }
  validate(m.noise);
}

SensorModel default_phase(int phase) {
  if (phase < 1 || phase > 3) invalid("phase must be 1, 2 or 3");

  // Spur levels are not quantified anywhere upstream; these are plausible
  // placeholders. The floor density is solved per phase so that the
  // 10-3000 Hz rms lands on 1.40 / 1.54 / 1.48 mV.
  static const std::vector<Spur> kSpurs = {
      {60.0, 0.30e-3},  {92.0, 0.08e-3},  {148.0, 0.08e-3},
      {180.0, 0.15e-3}, {300.0, 0.12e-3}, {420.0, 0.10e-3},
  };
  static constexpr double kDensity[] = {22.1e-6, 24.5e-6, 23.5e-6};

  SensorModel m;
  m.gain_flat = 0.00505;
  if (phase == 1) m.gain_flat *= std::pow(10.0, -0.5 / 20.0);
  m.f_corner = 2.0;
  m.f_res = 2000.0;
  m.q_factor = 35.0;
  m.v_quiescent = 2.0;
  m.v_clip_low = 0.0;
  m.v_clip_high = 5.0;
  m.noise.base_density = kDensity[phase - 1];
  m.noise.resonance_boost = 8.0;
  m.noise.spurs = kSpurs;
  return m;
}

SensorModel without_noise(SensorModel m) {
  m.noise = NoiseModel{};
  return m;
}

cplx transfer_function(const SensorModel& m, double f) {
  if (f == 0.0) return {0.0, 0.0};
  const double x = f / m.f_corner;
  const cplx hp = cplx(0.0, x) / cplx(1.0, x);
  return m.gain_flat * hp * resonance(m.f_res, m.q_factor, f);
}

double flat_band_frequency(const SensorModel& m) {
  return std::sqrt(10.0 * m.f_corner * m.f_res / 4.0);
}

Waveform linear_response(const SensorModel& m, const Waveform& v_in) {
  validate(m);
  if (v_in.empty()) invalid("input waveform is empty");
  const double rate = v_in.sample_rate();
  if (rate < 10.0 * m.f_res) {
    throw Error(ErrorKind::kAliasingRisk,
                "sample rate " + io::format_double(rate) +
                    " Hz is below 10*f_res = " +
                    io::format_double(10.0 * m.f_res) + " Hz");
  }

  const std::size_t n = v_in.size();
  const auto settle =
      static_cast<std::size_t>(std::ceil(5.0 / m.f_corner * rate));
  const std::size_t total = fft::next_power_of_two(n + settle);
  const std::size_t pad = total - n;

  std::vector<double> padded(total, v_in[0]);
  std::copy(v_in.samples().begin(), v_in.samples().end(),
            padded.begin() + static_cast<std::ptrdiff_t>(pad));
  std::vector<cplx> half = fft::forward_real(padded);

  const double df = rate / static_cast<double>(total);
  half[0] = 0.0;
  for (std::size_t k = 1; k < half.size(); ++k) {
    half[k] *= transfer_function(m, static_cast<double>(k) * df);
  }
  if (total % 2 == 0) {
    // Nyquist bin must stay real for a real output.
    half.back() = half.back().real();
  }
  const std::vector<double> full = fft::inverse_real(half, total);
  std::vector<double> out(full.begin() + static_cast<std::ptrdiff_t>(pad),
                          full.end());
  return Waveform(std::move(out), rate, v_in.t0(), v_in.lowpass_hz());
}

SimulationResult apply_output_stage(const SensorModel& m,
                                    const Waveform& linear,
                                    std::uint64_t seed) {
  std::vector<double> out(linear.samples().begin(), linear.samples().end());
  if (!m.noise.is_zero()) {
    const Waveform noise = synthesize_noise(m.noise, m, linear.duration(),
                                            linear.sample_rate(), seed);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += noise[i];
  }
  bool saturated = false;
  for (double& v : out) {
    v += m.v_quiescent;
    if (v < m.v_clip_low || v > m.v_clip_high) {
      saturated = true;
      v = std::clamp(v, m.v_clip_low, m.v_clip_high);
    }
  }
  return {Waveform(std::move(out), linear.sample_rate(), linear.t0(),
                   linear.lowpass_hz()),
          saturated};
}

SimulationResult simulate_output(const SensorModel& m, const Waveform& v_in,
                                 std::uint64_t seed) {
  return apply_output_stage(m, linear_response(m, v_in), seed);
}

double noise_floor_psd(const NoiseModel& n, const SensorModel& m, double f) {
  const double base = n.base_density * n.base_density;
  if (n.resonance_boost == 0.0) return base;
  const double shape = std::norm(resonance(m.f_res, m.q_factor, f)) /
                       (m.q_factor * m.q_factor);
  return base * (1.0 + n.resonance_boost * shape);
}

double implied_band_rms(const NoiseModel& n, const SensorModel& m, double f_lo,
                        double f_hi) {
  if (!(f_lo < f_hi)) invalid("band needs f_lo < f_hi");
  // Composite Simpson; the step resolves the resonance half-width.
  const double step_target = std::min(0.5, m.f_res / (40.0 * m.q_factor));
  auto intervals = static_cast<std::size_t>(std::ceil((f_hi - f_lo) / step_target));
  intervals += intervals % 2;
  const double h = (f_hi - f_lo) / static_cast<double>(intervals);
  double acc = noise_floor_psd(n, m, f_lo) + noise_floor_psd(n, m, f_hi);
  for (std::size_t i = 1; i < intervals; ++i) {
    acc += (i % 2 ? 4.0 : 2.0) *
           noise_floor_psd(n, m, f_lo + static_cast<double>(i) * h);
  }
  double power = acc * h / 3.0;
  for (const auto& s : n.spurs) {
    if (s.frequency >= f_lo && s.frequency <= f_hi) power += s.rms * s.rms;
  }
  return std::sqrt(power);
}

Waveform synthesize_noise(const NoiseModel& n, const SensorModel& m,
                          double duration, double rate, std::uint64_t seed,
                          std::optional<double> lowpass_hz) {
  validate(n);
  if (!(rate > 0.0)) invalid("noise sample rate must be > 0");
  const double count = std::round(duration * rate);
  if (!(count >= 2.0)) invalid("noise record needs duration*rate >= 2");
  const auto len = static_cast<std::size_t>(count);
  if (n.is_zero()) return Waveform(std::vector<double>(len, 0.0), rate, 0.0, lowpass_hz);

  auto rng = make_rng(seed, 0x6e6f697365ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double df = rate / static_cast<double>(len);
  const double cutoff = lowpass_hz.value_or(rate);
  std::vector<double> out(len, 0.0);
  if (n.base_density > 0.0) {
    // Single-sided density P maps to E|X_k|^2 = P * rate * N / 2.
    std::vector<cplx> half(len / 2 + 1, cplx{});
    const double scale = rate * static_cast<double>(len) / 2.0;
    for (std::size_t k = 1; k <= len / 2; ++k) {
      const double f = static_cast<double>(k) * df;
      const double re = gauss(rng);
      const double im = gauss(rng);
      if (f > cutoff) continue;
      const double var = noise_floor_psd(n, m, f) * scale;
      if (2 * k == len) {
        half[k] = cplx(std::sqrt(var) * re, 0.0);
      } else {
        half[k] = std::sqrt(var / 2.0) * cplx(re, im);
      }
    }
    out = fft::inverse_real(half, len);
  }

  std::uniform_real_distribution<double> phase_dist(0.0, kTwoPi);
  for (const auto& s : n.spurs) {
    const double phase = phase_dist(rng);
    if (s.rms == 0.0 || s.frequency >= 0.5 * rate || s.frequency > cutoff) {
      continue;
    }
    const double amp = std::sqrt(2.0) * s.rms;
    const double w = kTwoPi * s.frequency / rate;
    // Phasor rotation, re-anchored exactly every block so rounding cannot
    // accumulate over long records.
    const cplx step = std::polar(1.0, w);
    constexpr std::size_t kBlock = 1024;
    for (std::size_t b = 0; b < len; b += kBlock) {
      cplx z = std::polar(amp, w * static_cast<double>(b) + phase);
      const std::size_t end = std::min(len, b + kBlock);
      for (std::size_t i = b; i < end; ++i) {
        out[i] += z.imag();
        z = cplx(z.real() * step.real() - z.imag() * step.imag(),
                 z.real() * step.imag() + z.imag() * step.real());
      }
    }
  }

  const double mu = mean(out);
  for (double& v : out) v -= mu;
  return Waveform(std::move(out), rate, 0.0, lowpass_hz);
}

double divider_ratio(const DividerModel& d) {
  if (!(d.c_series > 0.0) || !(d.c_piezo > 0.0)) {
    invalid("divider capacitances must be > 0");
  }
  if (std::isinf(d.c_series)) return 1.0;
  return d.c_series / (d.c_series + d.c_piezo);
}

SensorModel parse_model_config(std::string_view text, std::string_view source) {
  const std::string ctx(source);
  SensorModel m;
  bool spurs_reset = false;
  int line_no = 0;
  for (std::string line : io::split_lines(text)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);

    const auto eq = line.find('=');
    const std::string where = ctx + ":" + std::to_string(line_no);
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kIo, where + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));

    if (key == "base") {
      if (value.rfind("default_phase", 0) != 0 || value.size() != 14) {
        throw Error(ErrorKind::kIo, where + ": unknown base '" + value + "'");
      }
      m = default_phase(value.back() - '0');
      continue;
    }
    if (key == "spur") {
      const auto colon = value.find(':');
      if (colon == std::string::npos) {
        throw Error(ErrorKind::kIo, where + ": spur needs <hz>:<rms>");
      }
      if (!spurs_reset) {
        m.noise.spurs.clear();
        spurs_reset = true;
      }
      m.noise.spurs.push_back(
          {io::parse_double(std::string_view(value).substr(0, colon), where),
           io::parse_double(std::string_view(value).substr(colon + 1), where)});
      continue;
    }
    const double v = io::parse_double(value, where);
    if (key == "gain_flat") m.gain_flat = v;
    else if (key == "f_corner_hz") m.f_corner = v;
    else if (key == "f_res_hz") m.f_res = v;
    else if (key == "q_factor") m.q_factor = v;
    else if (key == "v_quiescent") m.v_quiescent = v;
    else if (key == "v_clip_low") m.v_clip_low = v;
    else if (key == "v_clip_high") m.v_clip_high = v;
    else if (key == "noise_base_density") m.noise.base_density = v;
    else if (key == "noise_resonance_boost") m.noise.resonance_boost = v;
    else throw Error(ErrorKind::kIo, where + ": unknown key '" + key + "'");
  }
  validate(m);
  return m;
}

std::string model_to_config(const SensorModel& m) {
  std::string out;
  auto put = [&out](const char* key, double v) {
    out += key;
    out += '=';
    out += io::format_double(v);
    out += '\n';
  };
  put("gain_flat", m.gain_flat);
  put("f_corner_hz", m.f_corner);
  put("f_res_hz", m.f_res);
  put("q_factor", m.q_factor);
  put("v_quiescent", m.v_quiescent);
  put("v_clip_low", m.v_clip_low);
  put("v_clip_high", m.v_clip_high);
  put("noise_base_density", m.noise.base_density);
  put("noise_resonance_boost", m.noise.resonance_boost);
  for (const auto& s : m.noise.spurs) {
    out += "spur=" + io::format_double(s.frequency) + ":" +
           io::format_double(s.rms) + "\n";
  }
  return out;
}

SensorModel load_model(std::string_view name_or_path) {
  if (name_or_path.size() == 14 &&
      name_or_path.substr(0, 13) == "default_phase") {
    const char c = name_or_path.back();
    if (c >= '1' && c <= '3') return default_phase(c - '0');
  }
  const std::filesystem::path path{std::string(name_or_path)};
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::kIo, "model '" + path.string() +
                                    "' is neither a builtin nor a file");
  }
  return parse_model_config(io::read_text(path), path.string());
}

}  // namespace fosense
