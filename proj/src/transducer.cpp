#include "fosense/transducer.hpp"

#include <cmath>
#include <string>

#include "fosense/error.hpp"
#include "fosense/io.hpp"

namespace fosense {

namespace {

std::vector<std::vector<double>> parse_table(std::string_view text,
                                             std::string_view header,
                                             std::string_view source,
                                             std::size_t columns) {
  const auto lines = io::split_lines(text);
  const std::string ctx(source);
  if (lines.empty() || lines[0] != header) {
    throw Error(ErrorKind::kIo,
                ctx + ": expected header '" + std::string(header) + "'");
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = ctx + " line " + std::to_string(i + 1);
    std::vector<double> cols;
    std::string_view rest = lines[i];
    while (true) {
      const auto comma = rest.find(',');
      cols.push_back(io::parse_double(rest.substr(0, comma), where));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != columns) {
      throw Error(ErrorKind::kIo, where + ": expected " +
                                      std::to_string(columns) + " columns");
    }
    rows.push_back(std::move(cols));
  }
  return rows;
}

}  // namespace

DisplacementCurve::DisplacementCurve(std::vector<CurvePoint> points)
    : points_(std::move(points)) {
  if (points_.size() < 3) {
    throw Error(ErrorKind::kInsufficientData,
                "displacement curve needs at least 3 points");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(points_[i].power >= 0.0)) {
      throw Error(ErrorKind::kInvalidInput, "optical power must be >= 0");
    }
    if (i > 0 && !(points_[i].displacement_um > points_[i - 1].displacement_um)) {
      throw Error(ErrorKind::kInvalidInput,
                  "displacements must be strictly increasing");
    }
  }
}

OperatingPoint operating_point(const DisplacementCurve& curve) {
  const auto p = curve.points();
  OperatingPoint best{p[1].displacement_um, 0.0};
  double best_abs = -1.0;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    const double slope = (p[i + 1].power - p[i - 1].power) /
                         (p[i + 1].displacement_um - p[i - 1].displacement_um);
    // Relative tolerance so rounding noise on equal slopes keeps the
    // earlier point.
    if (std::abs(slope) > best_abs * (1.0 + 1e-9) + 1e-300) {
      best_abs = std::abs(slope);
      best = {p[i].displacement_um, slope};
    }
  }
  return best;
}

LinearityFit loglog_linearity(std::span<const double> inputs,
                              std::span<const double> outputs) {
  if (inputs.size() != outputs.size()) {
    throw Error(ErrorKind::kMismatch, "input and output counts differ");
  }
  if (inputs.size() < 3) {
    throw Error(ErrorKind::kInsufficientData, "need at least 3 pairs");
  }
  const std::size_t n = inputs.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(inputs[i] > 0.0) || !(outputs[i] > 0.0)) {
      throw Error(ErrorKind::kInvalidInput,
                  "log-log fit needs strictly positive values");
    }
    x[i] = std::log10(inputs[i]);
    y[i] = std::log10(outputs[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) {
    throw Error(ErrorKind::kInsufficientData, "inputs are all equal");
  }
  LinearityFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += r * r;
  }
  fit.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  return fit;
}

double displacement_dynamic_range(double max_pp, double min_detectable) {
  if (!(max_pp > 0.0) || !(min_detectable > 0.0)) {
    throw Error(ErrorKind::kInvalidInput,
                "displacements must be strictly positive");
  }
  return 20.0 * std::log10(max_pp / min_detectable);
}

DisplacementCurve reference_displacement_curve() {
  std::vector<CurvePoint> pts;
  for (int d = 0; d <= 1000; d += 20) {
    const double x = static_cast<double>(d);
    const double rise = 1.0 / (1.0 + std::exp(-(x - 280.0) / 60.0));
    const double decline = x > 500.0 ? 1.0 - 0.0006 * (x - 500.0) : 1.0;
    pts.push_back({x, rise * decline});
  }
  return DisplacementCurve(std::move(pts));
}

DisplacementCurve curve_from_csv(std::string_view text, std::string_view source) {
  std::vector<CurvePoint> pts;
  for (const auto& r : parse_table(text, "displacement_um,power_norm", source, 2)) {
    pts.push_back({r[0], r[1]});
  }
  return DisplacementCurve(std::move(pts));
}

LinearityPairs pairs_from_csv(std::string_view text, std::string_view source) {
  LinearityPairs out;
  for (const auto& r : parse_table(text, "input_v,output_v", source, 2)) {
    out.inputs.push_back(r[0]);
    out.outputs.push_back(r[1]);
  }
  return out;
}

}  // namespace fosense
