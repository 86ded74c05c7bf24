#include "flowbn/lab/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flowbn/error.hpp"

namespace flowbn::lab {

namespace {

constexpr double kPi = std::numbers::pi;
const double kLogTwoPi = std::log(2.0 * kPi);

double normal_log_density(double x, double mean, double sd) {
  const double u = (x - mean) / sd;
  return -0.5 * u * u - std::log(sd) - 0.5 * kLogTwoPi;
}

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

std::string target_name(TargetKind kind) {
  switch (kind) {
    case TargetKind::EightGaussians:
      return "eight_gaussians";
    case TargetKind::TwoMoons:
      return "two_moons";
    case TargetKind::Checkerboard:
      return "checkerboard";
    case TargetKind::IndependentBimodal:
      return "independent_bimodal";
  }
  return "unknown";
}

TargetKind parse_target(const std::string& name) {
  for (auto k : {TargetKind::EightGaussians, TargetKind::TwoMoons, TargetKind::Checkerboard,
                 TargetKind::IndependentBimodal}) {
    if (target_name(k) == name) return k;
  }
  throw InputError("unknown target '" + name +
                   "' (valid: eight_gaussians, two_moons, checkerboard, independent_bimodal)");
}

num::Matrix eight_gaussians_centers() {
  num::Matrix c(8, 2);
  for (std::size_t k = 0; k < 8; ++k) {
    const double a = static_cast<double>(k) * kPi / 4.0;
    c(k, 0) = kEightGaussiansRadius * std::cos(a);
    c(k, 1) = kEightGaussiansRadius * std::sin(a);
  }
  return c;
}

num::Matrix sample_target(const ToyTarget& target, num::Rng& rng, std::size_t n) {
  if (n == 0) throw InputError("sample_target: n must be at least 1");
  if (target.component > 1) throw InputError("sample_target: component must be 0 or 1");
  num::Matrix out(n, 2);
  switch (target.kind) {
    case TargetKind::EightGaussians: {
      const num::Matrix centers = eight_gaussians_centers();
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t k = rng.below(8);
        out(r, 0) = centers(k, 0) + kEightGaussiansSd * rng.normal();
        out(r, 1) = centers(k, 1) + kEightGaussiansSd * rng.normal();
      }
      break;
    }
    case TargetKind::TwoMoons:
      for (std::size_t r = 0; r < n; ++r) {
        const bool lower = rng.below(2) == 1;
        const double t = kPi * rng.uniform();
        const double x = lower ? 1.0 - std::cos(t) : std::cos(t);
        const double y = lower ? 0.5 - std::sin(t) : std::sin(t);
        out(r, 0) = x - 0.5 + kMoonsNoise * rng.normal();
        out(r, 1) = y - 0.25 + kMoonsNoise * rng.normal();
      }
      break;
    case TargetKind::Checkerboard:
      for (std::size_t r = 0; r < n; ++r) {
        const double offset = rng.below(2) == 1 ? 0.0 : -4.0;
        out(r, 0) = offset + 4.0 * rng.uniform();
        out(r, 1) = offset + 4.0 * rng.uniform();
      }
      break;
    case TargetKind::IndependentBimodal: {
      const std::size_t other = 1 - target.component;
      for (std::size_t r = 0; r < n; ++r) {
        const double sign = rng.below(2) == 1 ? 1.0 : -1.0;
        out(r, target.component) = sign * target.separation + kBimodalSd * rng.normal();
        out(r, other) = rng.normal();
      }
      break;
    }
  }
  return out;
}

std::optional<double> target_log_density(const ToyTarget& target, std::span<const double> x) {
  if (x.size() != 2) throw InputError("target_log_density: expected a 2D point");
  switch (target.kind) {
    case TargetKind::EightGaussians: {
      const num::Matrix centers = eight_gaussians_centers();
      double acc = -INFINITY;
      for (std::size_t k = 0; k < 8; ++k) {
        const double lp = normal_log_density(x[0], centers(k, 0), kEightGaussiansSd) +
                          normal_log_density(x[1], centers(k, 1), kEightGaussiansSd);
        acc = k == 0 ? lp : log_sum_exp(acc, lp);
      }
      return acc - std::log(8.0);
    }
    case TargetKind::IndependentBimodal: {
      const double xi = x[target.component];
      const double mix = log_sum_exp(normal_log_density(xi, -target.separation, kBimodalSd),
                                     normal_log_density(xi, target.separation, kBimodalSd)) -
                         std::log(2.0);
      return mix + normal_log_density(x[1 - target.component], 0.0, 1.0);
    }
    default:
      return std::nullopt;
  }
}

}  // namespace flowbn::lab
