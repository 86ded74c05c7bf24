#pragma once

#include <cstddef>
#include <span>

namespace flowbn::flows {

// Raw log-scales are squashed into [-kLogScaleBound, kLogScaleBound].
inline constexpr double kLogScaleBound = 7.0;

double bounded_log_scale(double raw);
// d bounded_log_scale / d raw
double bounded_log_scale_grad(double raw);

// g(x; m, s) = x * exp(s) + m. `s` is the already-bounded log-scale.
double affine_forward(double x, double m, double s);
double affine_inverse(double y, double m, double s);

// Monotone piecewise-linear normalizer on [-kPwlBound, kPwlBound] split into
// equal-width bins. Bin slopes come from a softmax of the unnormalized
// heights, floored at kPwlMinSlope, and scaled so the map sends the interval
// onto itself. Outside the interval the boundary slopes continue linearly.
inline constexpr double kPwlBound = 6.0;
inline constexpr double kPwlMinSlope = 1e-4;

// Derived shape of one monotone normalizer. `slopes` has B entries, `knots`
// holds the B + 1 output values at the bin edges.
struct PwlShape {
  std::span<double> slopes;
  std::span<double> knots;
};

void pwl_build(std::span<const double> heights, PwlShape shape);

struct PwlValue {
  double y;
  double log_slope;
  std::size_t bin;
};

PwlValue pwl_forward(double x, const PwlShape& shape);
double pwl_inverse(double y, const PwlShape& shape);

// Backpropagates (dy, dlog_slope) through one evaluation. Writes the
// gradient with respect to the raw heights and returns dL/dx.
double pwl_backward(double x, const PwlValue& value, const PwlShape& shape, double dy, double dlog_slope,
                    std::span<double> dheights);

// Convenience forms that build the shape internally.
double monotone_forward(double x, std::span<const double> heights);
double monotone_inverse(double y, std::span<const double> heights);

}  // namespace flowbn::flows
