#include "flowbn/flows/normalizers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "flowbn/error.hpp"

namespace flowbn::flows {

double bounded_log_scale(double raw) { return kLogScaleBound * std::tanh(raw / kLogScaleBound); }

double bounded_log_scale_grad(double raw) {
  const double t = std::tanh(raw / kLogScaleBound);
  return 1.0 - t * t;
}

double affine_forward(double x, double m, double s) {
  if (!std::isfinite(x) || !std::isfinite(m) || !std::isfinite(s)) {
    throw InputError("affine_forward: non-finite input");
  }
  return x * std::exp(s) + m;
}

double affine_inverse(double y, double m, double s) {
  if (!std::isfinite(y) || !std::isfinite(m) || !std::isfinite(s)) {
    throw InputError("affine_inverse: non-finite input");
  }
  return (y - m) * std::exp(-s);
}

void pwl_build(std::span<const double> heights, PwlShape shape) {
  const std::size_t bins = heights.size();
  const double hmax = *std::max_element(heights.begin(), heights.end());
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    shape.slopes[b] = std::exp(heights[b] - hmax);
    total += shape.slopes[b];
  }
  const double scale = (1.0 - kPwlMinSlope) * static_cast<double>(bins) / total;
  const double width = 2.0 * kPwlBound / static_cast<double>(bins);
  shape.knots[0] = -kPwlBound;
  for (std::size_t b = 0; b < bins; ++b) {
    shape.slopes[b] = kPwlMinSlope + scale * shape.slopes[b];
    shape.knots[b + 1] = shape.knots[b] + width * shape.slopes[b];
  }
}

namespace {

double bin_width(const PwlShape& shape) { return 2.0 * kPwlBound / static_cast<double>(shape.slopes.size()); }

double bin_start(std::size_t bin, double width) { return -kPwlBound + static_cast<double>(bin) * width; }

}  // namespace

PwlValue pwl_forward(double x, const PwlShape& shape) {
  const std::size_t bins = shape.slopes.size();
  const double width = bin_width(shape);
  const double pos = std::floor((x + kPwlBound) / width);
  std::size_t bin = 0;
  if (pos >= static_cast<double>(bins)) {
    bin = bins - 1;
  } else if (pos > 0.0) {
    bin = static_cast<std::size_t>(pos);
  }
  const double slope = shape.slopes[bin];
  return {shape.knots[bin] + slope * (x - bin_start(bin, width)), std::log(slope), bin};
}

double pwl_inverse(double y, const PwlShape& shape) {
  if (!std::isfinite(y)) throw InversionError("monotone normalizer: cannot invert a non-finite value");
  const std::size_t bins = shape.slopes.size();
  // Last interior knot not above y; tails fall back to the boundary bins.
  const auto inner = shape.knots.subspan(1, bins - 1);
  const auto it = std::upper_bound(inner.begin(), inner.end(), y);
  const auto bin = static_cast<std::size_t>(it - inner.begin());
  const double x = bin_start(bin, bin_width(shape)) + (y - shape.knots[bin]) / shape.slopes[bin];
  if (!std::isfinite(x)) throw InversionError("monotone normalizer: inversion produced a non-finite value");
  return x;
}

double pwl_backward(double x, const PwlValue& value, const PwlShape& shape, double dy, double dlog_slope,
                    std::span<double> dheights) {
  const std::size_t bins = shape.slopes.size();
  const double width = bin_width(shape);
  const double scale = (1.0 - kPwlMinSlope) * static_cast<double>(bins);
  const std::size_t b = value.bin;

  // g[c] = dL/dslope_c, weighted by the softmax a_c = (slope_c - floor)/scale.
  double weighted_sum = 0.0;
  for (std::size_t c = 0; c < bins; ++c) {
    double g = 0.0;
    if (c < b) {
      g = dy * width;
    } else if (c == b) {
      g = dy * (x - bin_start(b, width)) + dlog_slope / shape.slopes[b];
    }
    const double a = (shape.slopes[c] - kPwlMinSlope) / scale;
    dheights[c] = g;
    weighted_sum += g * a;
  }
  for (std::size_t c = 0; c < bins; ++c) {
    const double a = (shape.slopes[c] - kPwlMinSlope) / scale;
    dheights[c] = scale * a * (dheights[c] - weighted_sum);
  }
  return dy * shape.slopes[b];
}

double monotone_forward(double x, std::span<const double> heights) {
  if (heights.size() < 2) throw InputError("monotone_forward: need at least 2 bins");
  for (double h : heights) {
    if (!std::isfinite(h)) throw InputError("monotone_forward: non-finite bin height");
  }
  if (!std::isfinite(x)) throw InputError("monotone_forward: non-finite input");
  std::vector<double> slopes(heights.size()), knots(heights.size() + 1);
  const PwlShape shape{slopes, knots};
  pwl_build(heights, shape);
  return pwl_forward(x, shape).y;
}

double monotone_inverse(double y, std::span<const double> heights) {
  if (heights.size() < 2) throw InputError("monotone_inverse: need at least 2 bins");
  std::vector<double> slopes(heights.size()), knots(heights.size() + 1);
  const PwlShape shape{slopes, knots};
  pwl_build(heights, shape);
  return pwl_inverse(y, shape);
}

}  // namespace flowbn::flows
