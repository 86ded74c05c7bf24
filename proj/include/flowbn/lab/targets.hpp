#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "flowbn/numcore/matrix.hpp"
#include "flowbn/numcore/rng.hpp"

namespace flowbn::lab {

enum class TargetKind { EightGaussians, TwoMoons, Checkerboard, IndependentBimodal };

// 2D toy densities.
//   EightGaussians: equal mixture of N(c_k, 0.2^2 I), c_k on the radius-2
//     circle at angles k*pi/4.
//   TwoMoons: two interleaved half circles with N(0, 0.1^2) noise, centred
//     on the origin.
//   Checkerboard: uniform on the two diagonal cells [-4,0]^2 and [0,4]^2 of
//     a 2x2 board over [-4,4]^2.
//   IndependentBimodal: component `component` is an equal mixture of
//     N(-separation, 0.25) and N(separation, 0.25); the other component is
//     standard normal; the two are independent.
struct ToyTarget {
  TargetKind kind = TargetKind::EightGaussians;
  std::size_t component = 0;  // IndependentBimodal only, 0-based
  double separation = 2.0;    // IndependentBimodal only

  std::size_t dim() const { return 2; }
};

inline constexpr double kEightGaussiansRadius = 2.0;
inline constexpr double kEightGaussiansSd = 0.2;
inline constexpr double kMoonsNoise = 0.1;
inline constexpr double kBimodalSd = 0.5;

// snake_case names: eight_gaussians, two_moons, checkerboard, independent_bimodal.
std::string target_name(TargetKind kind);
// Throws InputError listing the valid names.
TargetKind parse_target(const std::string& name);

// n x 2 matrix of i.i.d. draws. Throws InputError for n == 0.
num::Matrix sample_target(const ToyTarget& target, num::Rng& rng, std::size_t n);

// Closed-form log-density where one exists (EightGaussians,
// IndependentBimodal); nullopt for the others.
std::optional<double> target_log_density(const ToyTarget& target, std::span<const double> x);

// Centres of the EightGaussians mixture, one row per component.
num::Matrix eight_gaussians_centers();

}  // namespace flowbn::lab
