#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fosense/waveform.hpp"

namespace fosense {

struct Spur {
  double frequency = 0.0;  // Hz
  double rms = 0.0;        // V
};

/// Output-referred noise: a white floor raised around the resonance, plus
/// narrowband spurs.
struct NoiseModel {
  double base_density = 0.0;     // single-sided, V/sqrt(Hz)
  std::vector<Spur> spurs;
  double resonance_boost = 0.0;  // peak floor PSD / base PSD - 1 at f_res

  bool is_zero() const noexcept;
};

/// One electrical phase of the sensor. The response is
///   H(f) = gain_flat * HP(f) * RES(f)
/// with a first-order high-pass at f_corner and a second-order resonance
/// (f_res, q_factor) normalized to unity at dc.
struct SensorModel {
  double gain_flat = 0.0;
  double f_corner = 0.0;
  double f_res = 0.0;
  double q_factor = 0.0;
  double v_quiescent = 0.0;
  double v_clip_low = 0.0;
  double v_clip_high = 0.0;
  NoiseModel noise;
};

struct DividerModel {
  double c_series = 0.0;  // F
  double c_piezo = 0.0;   // F
};

/// Throws kInvalidInput on violated model invariants.
void validate(const SensorModel& m);
void validate(const NoiseModel& n);

/// Builtin per-phase defaults, phase in {1, 2, 3}.
SensorModel default_phase(int phase);

SensorModel without_noise(SensorModel m);

cplx transfer_function(const SensorModel& m, double f);

/// Flat-band reference frequency: geometric mean of 10*f_corner and f_res/4.
double flat_band_frequency(const SensorModel& m);

// Output stage of a simulation: quiescent offset, noise, clipping.
struct SimulationResult {
  Waveform output;
  bool saturated = false;
};

/// Linear part only: IFFT(H * FFT(v_in)) with the system at rest and the
/// input held at its first sample for a settle interval of at least
/// 5/f_corner before the record. Requires rate >= 10*f_res.
Waveform linear_response(const SensorModel& m, const Waveform& v_in);

/// Adds v_quiescent and seeded noise to a linear response, then clips.
SimulationResult apply_output_stage(const SensorModel& m, const Waveform& linear,
                                    std::uint64_t seed);

SimulationResult simulate_output(const SensorModel& m, const Waveform& v_in,
                                 std::uint64_t seed);

/// Continuous part of the noise floor (no spurs), single-sided V^2/Hz.
double noise_floor_psd(const NoiseModel& n, const SensorModel& m, double f);

/// rms over [f_lo, f_hi] implied by the noise parameters: the floor
/// integrated numerically plus every spur inside the band.
double implied_band_rms(const NoiseModel& n, const SensorModel& m, double f_lo,
                        double f_hi);

/// Zero-mean noise record of round(duration*rate) samples. With `lowpass_hz`
/// set, content above the cutoff is removed (ideal anti-aliasing filter) and
/// the cutoff is recorded on the waveform.
Waveform synthesize_noise(const NoiseModel& n, const SensorModel& m,
                          double duration, double rate, std::uint64_t seed,
                          std::optional<double> lowpass_hz = std::nullopt);

double divider_ratio(const DividerModel& d);

// Sensor config text: one `key=value` per line, SI units, '#' comments.
// Keys: gain_flat f_corner_hz f_res_hz q_factor v_quiescent v_clip_low
// v_clip_high noise_base_density noise_resonance_boost spur=<hz>:<rms>.
// An optional `base=default_phaseN` line starts from a builtin.
SensorModel parse_model_config(std::string_view text,
                               std::string_view source = "<config>");
std::string model_to_config(const SensorModel& m);

/// `default_phase1|2|3` or a path to a config file.
SensorModel load_model(std::string_view name_or_path);

}  // namespace fosense
