#include "flowbn/lab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowbn/error.hpp"

namespace flowbn::lab {

Moments moments(std::span<const double> values) {
  if (values.size() < 2) throw InputError("moments: need at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw DegenerateInputError("moments: all values are equal");
  return {mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

NormalityResult normality_test(std::span<const double> values) {
  const Moments m = moments(values);
  return {m.skewness, m.excess_kurtosis,
          std::fabs(m.skewness) < kSkewLimit && std::fabs(m.excess_kurtosis) < kKurtosisLimit};
}

double Histogram2d::total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

namespace {

std::size_t bin_of(double v, double lo, double hi, std::size_t bins) {
  const double pos = std::floor((v - lo) / (hi - lo) * static_cast<double>(bins));
  if (!(pos > 0.0)) return 0;
  if (pos >= static_cast<double>(bins)) return bins - 1;
  return static_cast<std::size_t>(pos);
}

// Plug-in entropy of a count vector (nats) and its number of occupied cells.
std::pair<double, std::size_t> entropy(std::span<const double> counts, double total) {
  double acc = 0.0;
  std::size_t occupied = 0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    ++occupied;
    acc += c * std::log(c);
  }
  return {std::log(total) - acc / total, occupied};
}

// Bins span the 0.1% to 99.9% sample quantiles; the few points outside land
// in the edge bins. A full min..max range lets single outliers stretch the
// bins and biases the estimate low for strongly dependent pairs.
constexpr double kRangeQuantile = 1e-3;

std::pair<double, double> histogram_range(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) throw DegenerateInputError("mutual_information: constant component");
  const auto k = static_cast<std::size_t>(kRangeQuantile * static_cast<double>(sorted.size() - 1));
  const double lo = sorted[k];
  const double hi = sorted[sorted.size() - 1 - k];
  if (lo < hi) return {lo, hi};
  return {sorted.front(), sorted.back()};
}

}  // namespace

Histogram2d histogram2d(std::span<const double> x, std::span<const double> y, double x_min, double x_max,
                        double y_min, double y_max, std::size_t x_bins, std::size_t y_bins) {
  if (x.size() != y.size()) throw InputError("histogram2d: x and y differ in length");
  if (x_bins == 0 || y_bins == 0) throw InputError("histogram2d: need at least one bin per axis");
  if (!(x_max > x_min) || !(y_max > y_min)) throw InputError("histogram2d: empty bounds");
  Histogram2d h{x_min, x_max, y_min, y_max, x_bins, y_bins, std::vector<double>(x_bins * y_bins, 0.0)};
  for (std::size_t k = 0; k < x.size(); ++k) {
    h.counts[bin_of(x[k], x_min, x_max, x_bins) * y_bins + bin_of(y[k], y_min, y_max, y_bins)] += 1.0;
  }
  return h;
}

double mutual_information(std::span<const double> x, std::span<const double> y, std::size_t bins) {
  if (x.size() != y.size()) throw InputError("mutual_information: x and y differ in length");
  if (x.size() < kMinMiSamples) throw InputError("mutual_information: need at least 10000 samples");
  if (bins < 8 || bins > 64) throw InputError("mutual_information: bins must lie in [8, 64]");
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k]) || !std::isfinite(y[k])) throw InputError("mutual_information: non-finite sample");
  }
  const auto [x_lo, x_hi] = histogram_range(x);
  const auto [y_lo, y_hi] = histogram_range(y);
  const Histogram2d h = histogram2d(x, y, x_lo, x_hi, y_lo, y_hi, bins, bins);
  std::vector<double> px(bins, 0.0), py(bins, 0.0);
  for (std::size_t i = 0; i < bins; ++i) {
    for (std::size_t j = 0; j < bins; ++j) {
      px[i] += h.count(i, j);
      py[j] += h.count(i, j);
    }
  }
  const double n = static_cast<double>(x.size());
  const auto [hx, mx] = entropy(px, n);
  const auto [hy, my] = entropy(py, n);
  const auto [hxy, mxy] = entropy(h.counts, n);
  // Miller-Madow: each entropy gains (occupied - 1) / 2n.
  const double correction = (static_cast<double>(mx) + static_cast<double>(my) - static_cast<double>(mxy) - 1.0) /
                            (2.0 * n);
  return std::max(0.0, hx + hy - hxy + correction);
}

double gaussian_mutual_information(double rho) { return -0.5 * std::log(1.0 - rho * rho); }

}  // namespace flowbn::lab
