#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flowbn::lab {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // population (divide by n)
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

// Throws InputError for fewer than two values, DegenerateInputError when
// all values are equal.
Moments moments(std::span<const double> values);

inline constexpr double kSkewLimit = 0.05;
inline constexpr double kKurtosisLimit = 0.1;

struct NormalityResult {
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  bool normal = false;  // |skew| < kSkewLimit and |excess kurtosis| < kKurtosisLimit
};

NormalityResult normality_test(std::span<const double> values);

// Equal-width 2D histogram. Counts are stored row-major with x bins along
// rows and y bins along columns. Values on the upper bound fall in the last
// bin; values outside the bounds are clamped into the edge bins.
struct Histogram2d {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  std::size_t x_bins = 0, y_bins = 0;
  std::vector<double> counts;

  double count(std::size_t i, std::size_t j) const { return counts[i * y_bins + j]; }
  double total() const;
};

Histogram2d histogram2d(std::span<const double> x, std::span<const double> y, double x_min, double x_max,
                        double y_min, double y_max, std::size_t x_bins, std::size_t y_bins);

inline constexpr std::size_t kMinMiSamples = 10000;

// Plug-in mutual information (nats) of a `bins` x `bins` histogram spanning
// the central 99.8% of each component, with the Miller-Madow correction applied to each
// entropy, clamped at 0. Requires at least kMinMiSamples pairs and bins in
// [8, 64] (InputError); a constant component raises DegenerateInputError.
double mutual_information(std::span<const double> x, std::span<const double> y, std::size_t bins);

// I(X;Y) of a bivariate normal with correlation rho.
double gaussian_mutual_information(double rho);

}  // namespace flowbn::lab
