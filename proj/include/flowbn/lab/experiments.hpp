#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowbn/flows/model.hpp"
#include "flowbn/flows/spec.hpp"
#include "flowbn/flows/train.hpp"
#include "flowbn/lab/density.hpp"
#include "flowbn/lab/stats.hpp"
#include "flowbn/lab/targets.hpp"

namespace flowbn::lab {

struct ExperimentConfig {
  flows::TrainConfig train;  // the seed is replaced per run
  flows::ModelOptions model;
  // Standard deviation of Gaussian noise added to the identity-start
  // parameters before training. The exact identity start is a stationary
  // point for every cross-component dependence on independent targets.
  double init_noise = 0.01;
  std::size_t train_samples = 10000;
  std::size_t test_samples = 10000;
  std::size_t mi_samples = 100000;
  std::size_t mi_bins = 32;
  std::size_t normality_samples = 100000;
  std::size_t grid_resolution = 0;  // 0 disables density grids
  GridBounds grid_bounds;
  std::size_t threads = 1;  // concurrent runs
};

using Named = std::vector<std::pair<std::string, double>>;

// One trained configuration. NLLs are NaN when the run diverged.
struct RunResult {
  std::string label;
  std::string spec;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  std::string status = "ok";
  double train_nll = 0.0;
  double validation_nll = 0.0;
  double test_nll = 0.0;
  Named extras;
  double wall_seconds = 0.0;           // metadata only
  std::optional<DensityGrid> grid;     // not part of the serialized report

  bool ok() const { return status == "ok"; }
};

struct SummaryRow {
  std::string label;
  std::size_t runs = 0;  // runs that did not diverge
  double mean_test_nll = 0.0;
  double sd_test_nll = 0.0;  // sample standard deviation, 0 for a single run
  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

struct ExperimentReport {
  std::string experiment;
  std::string target;
  std::vector<std::uint64_t> seeds;
  std::vector<RunResult> runs;  // seed-major, configuration order within a seed
  std::vector<SummaryRow> summary;
  Named results;

  bool any_diverged() const;
  const SummaryRow* find_summary(const std::string& label) const;
  std::optional<double> result(const std::string& name) const;
};

inline constexpr int kReportSchemaVersion = 1;

// Scientific content only; wall times go to report_metadata_json.
std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);
std::string report_metadata_json(const ExperimentReport& report, double total_wall_seconds);
// One row per run.
std::string report_to_csv(const ExperimentReport& report);

// Affine coupling ladder over `steps_range` (each in 1..6) plus the
// monotone "universal" baseline, for every seed (at least 3). Training data
// and the held-out test set come from disjoint streams derived from the
// seed. Diverged runs are recorded and left out of the summary.
ExperimentReport capacity_ladder(const ToyTarget& target, std::span<const std::size_t> steps_range,
                                 std::span<const std::uint64_t> seeds, const ExperimentConfig& config);

// Samples the model and tests one component for normality. A single-step
// model only accepts a component that gets constant normalizer parameters;
// multi-step models accept any component. Violations throw InputError.
NormalityResult marginal_normality_check(const flows::FlowModel& model, std::size_t component, std::size_t n,
                                         num::Rng& rng);

// Per seed: a 1-step and a 3-step affine coupling flow trained on `target`,
// each followed by marginal_normality_check on component 0.
ExperimentReport normality_experiment(const ToyTarget& target, std::span<const std::uint64_t> seeds,
                                      const ExperimentConfig& config);

// K affine coupling steps in which `component` sits at position 0 of every
// step, so it never receives conditioning inputs.
flows::FlowSpec chain_flow_spec(std::size_t steps, std::size_t component);

// Second difference of x_component along the latent coordinate that feeds
// it, at latent point z with probe spacing h.
double chain_second_difference(const flows::FlowModel& chain, std::size_t component, std::span<const double> z,
                               double h);

// Marginal of x_component under a chain flow: exactly N(mean, sd^2).
struct GaussianMarginal {
  double mean = 0.0;
  double sd = 1.0;
};
GaussianMarginal chain_marginal(const flows::FlowModel& chain, std::size_t component);

// Mean NLL of the best single Gaussian for the bimodal component,
// 0.5 (ln 2 pi + ln(separation^2 + sd^2) + 1).
double best_gaussian_nll(double separation);

// IndependentBimodal(component 0, separation) target. Per seed trains a
// chain flow and a full affine coupling flow with `steps` steps (1..6).
// Chain runs carry marginal_nll, gaussian_fit_nll, second_difference,
// skewness and excess_kurtosis; full runs carry mi. Experiment-level
// results: means of those plus mi_floor, the estimator on independent
// target samples.
ExperimentReport nonuniversality_experiment(double separation, std::size_t steps,
                                            std::span<const std::uint64_t> seeds, const ExperimentConfig& config);

}  // namespace flowbn::lab
