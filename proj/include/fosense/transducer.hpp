#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace fosense {

struct CurvePoint {
  double displacement_um = 0.0;
  double power = 0.0;  // normalized optical power
};

/// Collected optical power against probe/reflector separation.
class DisplacementCurve {
 public:
  /// Needs >= 3 points, strictly increasing displacement, powers >= 0.
  explicit DisplacementCurve(std::vector<CurvePoint> points);

  std::span<const CurvePoint> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }

 private:
  std::vector<CurvePoint> points_;
};

struct OperatingPoint {
  double displacement_um = 0.0;
  double slope = 0.0;  // power per um
};

/// Interior point with the steepest central-difference slope; ties go to
/// the smallest displacement.
OperatingPoint operating_point(const DisplacementCurve& curve);

struct LinearityFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;  // log10 of output at unit input
};

/// Least squares of log10(output) against log10(input).
LinearityFit loglog_linearity(std::span<const double> inputs,
                              std::span<const double> outputs);

double displacement_dynamic_range(double max_pp, double min_detectable);

/// Shape-level stand-in for a measured power-vs-separation curve: steep rise
/// centered near 280 um, plateau around 500 um, gentle decline after.
/// Not a measurement; only for shape tests and demos.
DisplacementCurve reference_displacement_curve();

DisplacementCurve curve_from_csv(std::string_view text, std::string_view source);

struct LinearityPairs {
  std::vector<double> inputs;
  std::vector<double> outputs;
};
/// Header `input_v,output_v`.
LinearityPairs pairs_from_csv(std::string_view text, std::string_view source);

}  // namespace fosense
