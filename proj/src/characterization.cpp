#include "fosense/characterization.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "fosense/error.hpp"
#include "fosense/fft.hpp"
#include "fosense/io.hpp"
#include "fosense/random.hpp"

namespace fosense {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string fmt(double v) { return io::format_double(v); }

[[noreturn]] void planning(const std::string& msg) {
  throw Error(ErrorKind::kPlanning, msg);
}

double to_db(const cplx& v) { return 20.0 * std::log10(std::abs(v)); }

cplx from_polar_db(double db, double deg) {
  return std::polar(std::pow(10.0, db / 20.0), deg * kDegToRad);
}

}  // namespace

SweepPlan plan_sweep(const FrequencyGrid& freqs, std::size_t n_averages,
                     const PlanOptions& options) {
  if (n_averages < 1) planning("n_averages must be >= 1");
  SweepPlan plan;
  plan.n_averages = n_averages;
  for (double f : freqs.frequencies()) {
    if (!(f > 0.0) || !std::isfinite(f)) {
      planning("probe frequency must be > 0, got " + fmt(f));
    }
    const double rate_floor = std::max(options.min_sample_rate,
                                       options.min_samples_per_period * f);
    const double needed =
        std::ceil(static_cast<double>(options.target_periods) * rate_floor / f -
                  1e-9);
    std::size_t periods = options.target_periods;
    std::size_t n = 0;
    if (needed <= static_cast<double>(options.max_samples)) {
      n = fft::next_power_of_two(static_cast<std::size_t>(needed));
    }
    if (n == 0 || n > options.max_samples) {
      // Fall back to fewer periods in the longest permitted record.
      n = std::bit_floor(options.max_samples);
      periods = static_cast<std::size_t>(
          std::floor(static_cast<double>(n) * f / rate_floor));
      periods = std::min(periods, options.target_periods);
      if (periods < options.min_periods) {
        planning("probe " + fmt(f) + " Hz: at most " + std::to_string(periods) +
                 " periods fit in " + std::to_string(n) +
                 " samples, below the minimum of " +
                 std::to_string(options.min_periods) + " periods");
      }
    }
    const double rate =
        static_cast<double>(n) * f / static_cast<double>(periods);
    if (!std::isfinite(rate)) planning("probe " + fmt(f) + " Hz is unplannable");
    plan.entries.push_back({f, rate, n, periods});
  }
  validate(plan, options);
  return plan;
}

void validate(const SweepPlan& plan, const PlanOptions& options) {
  for (const auto& e : plan.entries) {
    const std::string at = "probe " + fmt(e.probe_freq) + " Hz: ";
    if (e.n_periods < options.min_periods) {
      planning(at + "fewer than " + std::to_string(options.min_periods) +
               " recorded periods");
    }
    if (e.samples_per_period() < options.min_samples_per_period * (1 - 1e-12)) {
      planning(at + "fewer than " + fmt(options.min_samples_per_period) +
               " samples per period");
    }
    const double bins = static_cast<double>(e.n_samples) * e.probe_freq /
                        e.sample_rate;
    if (std::abs(bins - std::round(bins)) > 1e-9 * std::max(1.0, bins)) {
      planning(at + "probe does not fall on an exact DFT bin");
    }
  }
}

BodeTable BodeTable::from_complex(std::span<const double> freqs,
                                  std::span<const cplx> values) {
  if (freqs.size() != values.size()) {
    throw Error(ErrorKind::kMismatch, "frequency and value counts differ");
  }
  std::vector<BodeRow> rows;
  rows.reserve(freqs.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    double ph = std::arg(values[i]) * kRadToDeg;
    if (i > 0) ph -= 360.0 * std::round((ph - prev) / 360.0);
    prev = ph;
    rows.push_back({freqs[i], to_db(values[i]), ph, values[i]});
  }
  return BodeTable(std::move(rows));
}

BodeTable::BodeTable(std::vector<BodeRow> rows) : rows_(std::move(rows)) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (!(r.freq > 0.0) || (i > 0 && !(r.freq > rows_[i - 1].freq))) {
      throw Error(ErrorKind::kInvalidInput,
                  "Bode rows need strictly increasing positive frequencies");
    }
    if (std::abs(r.value) == 0.0) {
      throw Error(ErrorKind::kInvalidInput,
                  "Bode row at " + fmt(r.freq) + " Hz has zero magnitude");
    }
    if (std::abs(r.magnitude_db - to_db(r.value)) > 1e-6) {
      throw Error(ErrorKind::kInvalidInput,
                  "Bode row at " + fmt(r.freq) +
                      " Hz: magnitude_db disagrees with complex value");
    }
    const double wrapped = std::remainder(
        r.phase_deg - std::arg(r.value) * kRadToDeg, 360.0);
    if (std::abs(wrapped) > 1e-6) {
      throw Error(ErrorKind::kInvalidInput,
                  "Bode row at " + fmt(r.freq) +
                      " Hz: phase_deg disagrees with complex value");
    }
    if (i > 0 && std::abs(r.phase_deg - rows_[i - 1].phase_deg) > 180.0) {
      throw Error(ErrorKind::kInvalidInput,
                  "Bode phase is not unwrapped at " + fmt(r.freq) + " Hz");
    }
  }
}

BodeTable sample_response(const SensorModel& m, const FrequencyGrid& grid) {
  std::vector<double> f(grid.frequencies().begin(), grid.frequencies().end());
  std::vector<cplx> h;
  h.reserve(f.size());
  for (double x : f) h.push_back(transfer_function(m, x));
  return BodeTable::from_complex(f, h);
}

cplx interpolate_response(const BodeTable& table, double f,
                          Extrapolation below) {
  if (table.empty()) {
    throw Error(ErrorKind::kOutOfRange, "empty response table");
  }
  const auto rows = table.rows();
  if (f < rows.front().freq) {
    if (below == Extrapolation::kHighPassBelow && f > 0.0) {
      return rows.front().value * (f / rows.front().freq);
    }
    throw Error(ErrorKind::kOutOfRange,
                fmt(f) + " Hz is below the response table (" +
                    fmt(rows.front().freq) + " Hz)");
  }
  if (f > rows.back().freq) {
    throw Error(ErrorKind::kOutOfRange,
                fmt(f) + " Hz is above the response table (" +
                    fmt(rows.back().freq) + " Hz)");
  }
  auto hi = std::lower_bound(
      rows.begin(), rows.end(), f,
      [](const BodeRow& r, double x) { return r.freq < x; });
  if (hi->freq == f) return hi->value;
  auto lo = hi - 1;
  const double t = std::log(f / lo->freq) / std::log(hi->freq / lo->freq);
  return from_polar_db(lo->magnitude_db + t * (hi->magnitude_db - lo->magnitude_db),
                       lo->phase_deg + t * (hi->phase_deg - lo->phase_deg));
}

std::string bode_to_csv(const BodeTable& table) {
  std::string out = "freq_hz,mag_db,phase_deg,re,im\n";
  for (const auto& r : table.rows()) {
    out += fmt(r.freq) + ',' + fmt(r.magnitude_db) + ',' + fmt(r.phase_deg) +
           ',' + fmt(r.value.real()) + ',' + fmt(r.value.imag()) + '\n';
  }
  return out;
}

BodeTable bode_from_csv(std::string_view text, std::string_view source) {
  const auto lines = io::split_lines(text);
  const std::string ctx(source);
  if (lines.empty() || lines[0] != "freq_hz,mag_db,phase_deg,re,im") {
    throw Error(ErrorKind::kIo,
                ctx + ": expected header 'freq_hz,mag_db,phase_deg,re,im'");
  }
  std::vector<BodeRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<double> cols;
    std::string_view rest = lines[i];
    const std::string where = ctx + " line " + std::to_string(i + 1);
    while (true) {
      const auto comma = rest.find(',');
      cols.push_back(io::parse_double(rest.substr(0, comma), where));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != 5) {
      throw Error(ErrorKind::kIo, where + ": expected 5 columns");
    }
    rows.push_back({cols[0], cols[1], cols[2], cplx(cols[3], cols[4])});
  }
  try {
    return BodeTable(std::move(rows));
  } catch (const Error& e) {
    throw Error(ErrorKind::kIo, ctx + ": " + e.what());
  }
}

cplx estimate_response_point(const Waveform& v_in, const Waveform& v_out,
                             double probe_freq) {
  require_compatible(v_in, v_out);
  const auto in_bin = value_at_frequency(v_in, probe_freq);
  const auto out_bin = value_at_frequency(v_out, probe_freq);
  double peak = 0.0;
  for (double v : v_in.samples()) peak = std::max(peak, std::abs(v));
  const double floor = 1e-6 * static_cast<double>(v_in.size()) * peak;
  if (!(std::abs(in_bin.value) >= floor) || std::abs(in_bin.value) == 0.0) {
    throw Error(ErrorKind::kDivisionDegenerate,
                "probe " + fmt(probe_freq) + " Hz is absent from the input");
  }
  return out_bin.value / in_bin.value;
}

std::string trace_file_name(std::size_t point, std::size_t trace, bool output) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "point_%04zu_trace_%03zu_%s.csv", point,
                trace, output ? "out" : "in");
  return buf;
}

namespace {

struct SyntheticPoint {
  Waveform v_in;
  Waveform clean;  // linear response, no offset or noise
};

SyntheticPoint synthesize_point(const SyntheticSource& src,
                                const SweepEntry& e) {
  const std::size_t n = e.n_samples;
  if (e.sample_rate < 10.0 * src.model.f_res) {
    throw Error(ErrorKind::kAliasingRisk,
                "probe " + fmt(e.probe_freq) + " Hz: sample rate " +
                    fmt(e.sample_rate) + " Hz is below 10*f_res = " +
                    fmt(10.0 * src.model.f_res) + " Hz");
  }
  // Sample i has phase 2*pi*i*n_periods/n; the product is reduced mod n so
  // long records do not accumulate phase error. The record holds whole drive
  // periods, so the steady state of a drive that has been running
  // indefinitely is the sine scaled and shifted by H(probe); H(0) = 0 removes
  // the drive offset.
  const cplx h = transfer_function(src.model, e.probe_freq);
  const double gain = std::abs(h);
  const double shift = std::arg(h);
  std::vector<double> in(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = 2.0 * std::numbers::pi *
                         static_cast<double>((i * e.n_periods) % n) /
                         static_cast<double>(n);
    in[i] = src.drive_offset + src.drive_amplitude * std::sin(theta);
    out[i] = src.drive_amplitude * gain * std::sin(theta + shift);
  }
  return {Waveform(std::move(in), e.sample_rate),
          Waveform(std::move(out), e.sample_rate)};
}

std::uint64_t trace_seed(std::uint64_t seed, std::size_t point,
                         std::size_t trace) {
  return derive_seed(derive_seed(seed, point), trace);
}

// Calls fn(trace_index, v_in, v_out) once per trace without holding every
// trace in memory.
void for_each_trace(
    const SweepSource& source, const SweepEntry& e, std::size_t point,
    std::size_t n_traces,
    const std::function<void(std::size_t, const Waveform&, const Waveform&)>&
        fn) {
  if (const auto* syn = std::get_if<SyntheticSource>(&source)) {
    const SyntheticPoint pt = synthesize_point(*syn, e);
    for (std::size_t t = 0; t < n_traces; ++t) {
      const auto res = apply_output_stage(syn->model, pt.clean,
                                          trace_seed(syn->seed, point, t));
      if (res.saturated) {
        throw Error(ErrorKind::kSaturation,
                    "probe " + fmt(e.probe_freq) + " Hz trace " +
                        std::to_string(t) + ": sensor output saturated");
      }
      fn(t, pt.v_in, res.output);
    }
    return;
  }
  const auto& dir = std::get<RecordedSource>(source).directory;
  for (std::size_t t = 0; t < n_traces; ++t) {
    const std::string at =
        "probe " + fmt(e.probe_freq) + " Hz trace " + std::to_string(t);
    auto load = [&](bool output) {
      const auto path = dir / trace_file_name(point, t, output);
      if (!std::filesystem::exists(path)) {
        throw Error(ErrorKind::kIo, at + ": missing '" + path.string() + "'");
      }
      Waveform w = io::read_waveform(path);
      if (w.size() != e.n_samples ||
          std::abs(w.sample_rate() - e.sample_rate) > 1e-9 * e.sample_rate) {
        throw Error(ErrorKind::kIo,
                    at + ": '" + path.string() + "' has " +
                        std::to_string(w.size()) + " samples @ " +
                        fmt(w.sample_rate()) + " Hz, plan expects " +
                        std::to_string(e.n_samples) + " @ " +
                        fmt(e.sample_rate) + " Hz");
      }
      return w;
    };
    const Waveform in = load(false);
    const Waveform out = load(true);
    fn(t, in, out);
  }
}

}  // namespace

std::vector<TracePair> synthesize_traces(const SyntheticSource& src,
                                         const SweepEntry& entry,
                                         std::size_t n_traces,
                                         std::size_t point_index) {
  const SyntheticPoint pt = synthesize_point(src, entry);
  std::vector<TracePair> out;
  out.reserve(n_traces);
  for (std::size_t t = 0; t < n_traces; ++t) {
    auto res = apply_output_stage(src.model, pt.clean,
                                  trace_seed(src.seed, point_index, t));
    out.push_back({pt.v_in, std::move(res.output), res.saturated});
  }
  return out;
}

std::string plan_to_csv(const SweepPlan& plan) {
  std::string out = "# n_averages=" + std::to_string(plan.n_averages) + "\n";
  out += "probe_freq_hz,sample_rate_hz,n_samples,n_periods\n";
  for (const auto& e : plan.entries) {
    out += fmt(e.probe_freq) + ',' + fmt(e.sample_rate) + ',' +
           std::to_string(e.n_samples) + ',' + std::to_string(e.n_periods) +
           '\n';
  }
  return out;
}

SweepPlan plan_from_csv(std::string_view text, std::string_view source) {
  const auto lines = io::split_lines(text);
  const std::string ctx(source);
  if (lines.size() < 2 || lines[0].rfind("# n_averages=", 0) != 0 ||
      lines[1] != "probe_freq_hz,sample_rate_hz,n_samples,n_periods") {
    throw Error(ErrorKind::kIo, ctx + ": not a sweep plan file");
  }
  SweepPlan plan;
  plan.n_averages = static_cast<std::size_t>(
      io::parse_double(std::string_view(lines[0]).substr(13), ctx));
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<double> cols;
    std::string_view rest = lines[i];
    const std::string where = ctx + " line " + std::to_string(i + 1);
    while (true) {
      const auto comma = rest.find(',');
      cols.push_back(io::parse_double(rest.substr(0, comma), where));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != 4) {
      throw Error(ErrorKind::kIo, where + ": expected 4 columns");
    }
    plan.entries.push_back({cols[0], cols[1], static_cast<std::size_t>(cols[2]),
                            static_cast<std::size_t>(cols[3])});
  }
  return plan;
}

void write_sweep_recordings(const SyntheticSource& src, const SweepPlan& plan,
                            const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t p = 0; p < plan.entries.size(); ++p) {
    for_each_trace(SweepSource{src}, plan.entries[p], p, plan.n_averages,
                   [&](std::size_t t, const Waveform& in, const Waveform& out) {
                     io::write_waveform(dir / trace_file_name(p, t, false), in);
                     io::write_waveform(dir / trace_file_name(p, t, true), out);
                   });
  }
  io::write_text_atomic(dir / "plan.csv", plan_to_csv(plan));
}

BodeTable run_sweep(const SweepSource& source, const SweepPlan& plan) {
  if (plan.entries.empty()) {
    throw Error(ErrorKind::kInvalidInput, "sweep plan has no entries");
  }
  std::vector<double> freqs;
  std::vector<cplx> values;
  for (std::size_t p = 0; p < plan.entries.size(); ++p) {
    const auto& e = plan.entries[p];
    cplx acc{};
    for_each_trace(source, e, p, plan.n_averages,
                   [&](std::size_t, const Waveform& in, const Waveform& out) {
                     acc += estimate_response_point(in, out, e.probe_freq);
                   });
    freqs.push_back(e.probe_freq);
    values.push_back(acc / static_cast<double>(plan.n_averages));
  }
  return BodeTable::from_complex(freqs, values);
}

Bandwidth effective_bandwidth(const BodeTable& table, double ref_freq,
                              double tolerance_db) {
  const double ref_db = to_db(interpolate_response(table, ref_freq));
  const double threshold = ref_db - tolerance_db;
  const auto rows = table.rows();

  // Crossing between (fa, da) above threshold and (fb, db) below it.
  auto crossing = [threshold](double fa, double da, double fb, double db) {
    const double t = (da - threshold) / (da - db);
    return std::exp(std::log(fa) + t * (std::log(fb) - std::log(fa)));
  };

  Bandwidth bw{rows.front().freq, rows.back().freq, ref_db};
  double fa = ref_freq, da = ref_db;
  for (const auto& r : rows) {
    if (r.freq <= ref_freq) continue;
    if (r.magnitude_db < threshold) {
      bw.f_high = crossing(fa, da, r.freq, r.magnitude_db);
      break;
    }
    fa = r.freq;
    da = r.magnitude_db;
  }
  fa = ref_freq;
  da = ref_db;
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if (it->freq >= ref_freq) continue;
    if (it->magnitude_db < threshold) {
      bw.f_low = crossing(fa, da, it->freq, it->magnitude_db);
      break;
    }
    fa = it->freq;
    da = it->magnitude_db;
  }
  return bw;
}

Peak response_peak(const BodeTable& table) {
  const auto rows = table.rows();
  const auto it = std::max_element(
      rows.begin(), rows.end(), [](const BodeRow& a, const BodeRow& b) {
        return a.magnitude_db < b.magnitude_db;
      });
  return {it->freq, it->magnitude_db};
}

FrequencyGrid parse_grid(std::string_view spec) {
  auto bad = [&]() -> Error {
    return Error(ErrorKind::kInvalidInput,
                 "grid '" + std::string(spec) +
                     "' is not log:<start>:<stop>:<per_decade> or "
                     "list:<f1>,<f2>,...");
  };
  std::vector<double> parts;
  char sep = 0;
  if (spec.rfind("log:", 0) == 0) sep = ':';
  else if (spec.rfind("list:", 0) == 0) sep = ',';
  else throw bad();
  std::string_view rest = spec.substr(spec.find(':') + 1);
  while (true) {
    const auto pos = rest.find(sep);
    try {
      parts.push_back(io::parse_double(rest.substr(0, pos), "grid"));
    } catch (const Error&) {
      throw bad();
    }
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  if (sep == ':') {
    if (parts.size() != 3) throw bad();
    return FrequencyGrid::log_spaced(parts[0], parts[1],
                                     static_cast<int>(parts[2]));
  }
  return FrequencyGrid(std::move(parts));
}

}  // namespace fosense
