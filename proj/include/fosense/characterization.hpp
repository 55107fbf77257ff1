#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fosense/sensor_model.hpp"
#include "fosense/waveform.hpp"

namespace fosense {

struct SweepEntry {
  double probe_freq = 0.0;   // Hz, exactly on a DFT bin
  double sample_rate = 0.0;  // Hz
  std::size_t n_samples = 0;
  std::size_t n_periods = 0;

  double samples_per_period() const noexcept {
    return sample_rate / probe_freq;
  }
};

struct SweepPlan {
  std::vector<SweepEntry> entries;
  std::size_t n_averages = 1;
};

struct PlanOptions {
  std::size_t target_periods = 50;
  std::size_t min_periods = 28;
  double min_samples_per_period = 35.0;
  // Floor on the sample rate, e.g. the simulator's 10*f_res requirement.
  double min_sample_rate = 0.0;
  std::size_t max_samples = std::size_t{1} << 24;
};

/// Record lengths are powers of two; the sample rate is then derived so the
/// probe lands on bin n_periods exactly.
SweepPlan plan_sweep(const FrequencyGrid& freqs, std::size_t n_averages,
                     const PlanOptions& options = {});

/// Throws kPlanning naming the first violated constraint.
void validate(const SweepPlan& plan, const PlanOptions& options = {});

struct BodeRow {
  double freq = 0.0;
  double magnitude_db = 0.0;
  double phase_deg = 0.0;  // unwrapped
  cplx value;
};

/// Measured or sampled frequency response, rows strictly increasing in
/// frequency with phase unwrapped across rows.
class BodeTable {
 public:
  BodeTable() = default;
  /// Unwraps arg(value) across rows.
  static BodeTable from_complex(std::span<const double> freqs,
                                std::span<const cplx> values);
  /// Rows as given; checks every invariant.
  explicit BodeTable(std::vector<BodeRow> rows);

  std::span<const BodeRow> rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  const BodeRow& operator[](std::size_t i) const noexcept { return rows_[i]; }
  double min_freq() const noexcept { return rows_.front().freq; }
  double max_freq() const noexcept { return rows_.back().freq; }

 private:
  std::vector<BodeRow> rows_;
};

BodeTable sample_response(const SensorModel& m, const FrequencyGrid& grid);

enum class Extrapolation {
  kNone,          // outside the table -> kOutOfRange
  kHighPassBelow  // below the first row: +20 dB/decade, phase held
};

/// Linear in (log f, dB) for magnitude and in log f for unwrapped phase.
cplx interpolate_response(const BodeTable& table, double f,
                          Extrapolation below = Extrapolation::kNone);

std::string bode_to_csv(const BodeTable& table);
BodeTable bode_from_csv(std::string_view text, std::string_view source);

/// H(f0) = V_out(f0) / V_in(f0) from the nearest DFT bins.
cplx estimate_response_point(const Waveform& v_in, const Waveform& v_out,
                             double probe_freq);

struct SyntheticSource {
  SensorModel model;
  double drive_amplitude = 5.0;  // V peak
  double drive_offset = 5.0;     // V; unipolar drive with 50% dc
  std::uint64_t seed = 0;
};

struct RecordedSource {
  std::filesystem::path directory;
};

using SweepSource = std::variant<SyntheticSource, RecordedSource>;

/// File name for one recorded trace inside a sweep directory.
std::string trace_file_name(std::size_t point, std::size_t trace,
                            bool output);

struct TracePair {
  Waveform v_in;
  Waveform v_out;
  bool saturated = false;
};

/// Steady-state sine traces for one plan entry: the drive runs for a
/// settle interval before the record starts; each trace gets its own noise.
std::vector<TracePair> synthesize_traces(const SyntheticSource& src,
                                         const SweepEntry& entry,
                                         std::size_t n_traces,
                                         std::size_t point_index);

/// Writes every trace of the plan plus plan.csv into `dir`.
void write_sweep_recordings(const SyntheticSource& src, const SweepPlan& plan,
                            const std::filesystem::path& dir);

std::string plan_to_csv(const SweepPlan& plan);
SweepPlan plan_from_csv(std::string_view text, std::string_view source);

/// Complex mean of per-trace estimates at each plan entry.
BodeTable run_sweep(const SweepSource& source, const SweepPlan& plan);

struct Bandwidth {
  double f_low = 0.0;
  double f_high = 0.0;
  double flat_level_db = 0.0;
};

/// Contiguous band around `ref_freq` where |H| stays within `tolerance_db`
/// below the level at `ref_freq`; edges interpolated in log f.
Bandwidth effective_bandwidth(const BodeTable& table, double ref_freq,
                              double tolerance_db = 0.25);

struct Peak {
  double freq = 0.0;
  double magnitude_db = 0.0;
};
Peak response_peak(const BodeTable& table);

/// `log:<start>:<stop>:<per_decade>` or `list:<f1>,<f2>,...`.
FrequencyGrid parse_grid(std::string_view spec);

}  // namespace fosense
