#include "flowbn/lab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>

#include "flowbn/error.hpp"
#include "flowbn/flows/flow.hpp"

namespace flowbn::lab {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Seed streams. Data streams are shared by every configuration of a seed;
// model streams are offset by the configuration index.
constexpr std::uint64_t kTrainDataStream = 1;
constexpr std::uint64_t kTestDataStream = 2;
constexpr std::uint64_t kControlStream = 3;
constexpr std::uint64_t kInitStream = 100;
constexpr std::uint64_t kShuffleStream = 200;
constexpr std::uint64_t kSampleStream = 300;

std::uint64_t stream(std::uint64_t seed, std::uint64_t s) { return num::Rng::derive_seed(seed, s); }

// Runs fn(0..count-1), `threads` at a time. Results keep index order. The
// first exception by index is rethrown once every job has finished.
std::vector<RunResult> fan_out(std::size_t count, std::size_t threads,
                               const std::function<RunResult(std::size_t)>& fn) {
  std::vector<RunResult> results(count);
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(threads < 1 ? 1 : threads))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      results[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

struct Trained {
  RunResult result;
  std::optional<flows::FlowModel> model;
};

Trained train_one(const std::string& label, const flows::FlowSpec& spec, std::uint64_t seed, std::size_t config_index,
                  const num::Matrix& train_data, const num::Matrix& test_data, const ExperimentConfig& config) {
  const auto start = Clock::now();
  Trained out;
  RunResult& r = out.result;
  r.label = label;
  r.spec = flows::describe(spec);
  r.seed = seed;
  r.steps = spec.steps.size();

  num::Rng init(stream(seed, kInitStream + config_index));
  flows::TrainConfig tc = config.train;
  tc.seed = stream(seed, kShuffleStream + config_index);
  try {
    flows::FlowModel model(spec, init, config.model);
    if (config.init_noise > 0.0) flows::perturb_parameters(model, init, config.init_noise);
    flows::TrainResult trained = flows::train(std::move(model), train_data, tc);
    r.train_nll = trained.trace.empty() ? flows::mean_nll(trained.model, train_data) : trained.trace.back().train_nll;
    r.validation_nll = trained.final_validation_nll;
    r.test_nll = flows::mean_nll(trained.model, test_data);
    if (!std::isfinite(r.test_nll)) throw DivergenceError("non-finite test loss");
    if (config.grid_resolution > 0) r.grid = density_grid(trained.model, config.grid_bounds, config.grid_resolution);
    out.model = std::move(trained.model);
  } catch (const DivergenceError& e) {
    r.status = std::string("diverged: ") + e.what();
  } catch (const EvaluationError& e) {
    r.status = std::string("diverged: ") + e.what();
  }
  if (!r.ok()) {
    r.train_nll = r.validation_nll = r.test_nll = kNaN;
    r.grid.reset();
  }
  r.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs, const std::vector<std::string>& labels) {
  std::vector<SummaryRow> rows;
  for (const auto& label : labels) {
    SummaryRow row{label, 0, 0.0, 0.0};
    std::vector<double> values;
    for (const auto& r : runs) {
      if (r.label == label && r.ok()) values.push_back(r.test_nll);
    }
    row.runs = values.size();
    if (values.empty()) {
      row.mean_test_nll = row.sd_test_nll = kNaN;
    } else {
      for (double v : values) row.mean_test_nll += v;
      row.mean_test_nll /= static_cast<double>(values.size());
      if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - row.mean_test_nll) * (v - row.mean_test_nll);
        row.sd_test_nll = std::sqrt(ss / static_cast<double>(values.size() - 1));
      }
    }
    rows.push_back(row);
  }
  return rows;
}

double extra(const RunResult& r, const std::string& name) {
  for (const auto& [k, v] : r.extras) {
    if (k == name) return v;
  }
  return kNaN;
}

// Mean of an extra over the runs with the given label that did not diverge.
double mean_extra(const std::vector<RunResult>& runs, const std::string& label, const std::string& name) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (r.label != label || !r.ok()) continue;
    total += extra(r, name);
    ++n;
  }
  return n ? total / static_cast<double>(n) : kNaN;
}

void check_seeds(std::span<const std::uint64_t> seeds, std::size_t minimum, const char* what) {
  if (seeds.size() < minimum) {
    throw InputError(std::string(what) + ": needs at least " + std::to_string(minimum) + " seed(s)");
  }
}

std::vector<double> column(const num::Matrix& m, std::size_t c) {
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = m(r, c);
  return out;
}

}  // namespace

bool ExperimentReport::any_diverged() const {
  for (const auto& r : runs) {
    if (!r.ok()) return true;
  }
  return false;
}

const SummaryRow* ExperimentReport::find_summary(const std::string& label) const {
  for (const auto& row : summary) {
    if (row.label == label) return &row;
  }
  return nullptr;
}

std::optional<double> ExperimentReport::result(const std::string& name) const {
  for (const auto& [k, v] : results) {
    if (k == name) return v;
  }
  return std::nullopt;
}

ExperimentReport capacity_ladder(const ToyTarget& target, std::span<const std::size_t> steps_range,
                                 std::span<const std::uint64_t> seeds, const ExperimentConfig& config) {
  check_seeds(seeds, 3, "capacity_ladder");
  if (steps_range.empty()) throw InputError("capacity_ladder: empty step range");
  for (std::size_t k : steps_range) {
    if (k < 1 || k > 6) throw InputError("capacity_ladder: step counts must lie in 1..6");
  }

  std::vector<std::pair<std::string, flows::FlowSpec>> configs;
  for (std::size_t k : steps_range) {
    configs.emplace_back("K=" + std::to_string(k), flows::make_stacked_flow(2, k, flows::Coupling{2}));
  }
  configs.emplace_back("universal", flows::make_stacked_flow(2, 1, flows::Coupling{2}, flows::MonotonePwl{32}));

  std::vector<num::Matrix> train_data, test_data;
  for (auto seed : seeds) {
    num::Rng a(stream(seed, kTrainDataStream));
    num::Rng b(stream(seed, kTestDataStream));
    train_data.push_back(sample_target(target, a, config.train_samples));
    test_data.push_back(sample_target(target, b, config.test_samples));
  }

  ExperimentReport report;
  report.experiment = "capacity";
  report.target = target_name(target.kind);
  report.seeds.assign(seeds.begin(), seeds.end());
  const std::size_t per_seed = configs.size();
  report.runs = fan_out(seeds.size() * per_seed, config.threads, [&](std::size_t job) {
    const std::size_t s = job / per_seed;
    const std::size_t c = job % per_seed;
    return train_one(configs[c].first, configs[c].second, seeds[s], c, train_data[s], test_data[s], config).result;
  });
  std::vector<std::string> labels;
  for (const auto& c : configs) labels.push_back(c.first);
  report.summary = summarize(report.runs, labels);
  return report;
}

NormalityResult marginal_normality_check(const flows::FlowModel& model, std::size_t component, std::size_t n,
                                         num::Rng& rng) {
  if (component >= model.dim()) throw InputError("marginal_normality_check: component out of range");
  if (model.step_count() == 1) {
    const auto& layout = model.layout(0);
    if (!layout.slots[layout.inverse_order[component]].constant) {
      throw InputError("marginal_normality_check: component " + std::to_string(component + 1) +
                       " is conditioned on other components in a single-step flow");
    }
  }
  const flows::SampleBatch s = flows::sample(model, rng, n);
  return normality_test(column(s.x, component));
}

ExperimentReport normality_experiment(const ToyTarget& target, std::span<const std::uint64_t> seeds,
                                      const ExperimentConfig& config) {
  check_seeds(seeds, 1, "normality_experiment");
  const std::vector<std::pair<std::string, flows::FlowSpec>> configs = {
      {"K=1", flows::make_stacked_flow(2, 1, flows::Coupling{2})},
      {"K=3", flows::make_stacked_flow(2, 3, flows::Coupling{2})},
  };
  ExperimentReport report;
  report.experiment = "normality";
  report.target = target_name(target.kind);
  report.seeds.assign(seeds.begin(), seeds.end());
  const std::size_t per_seed = configs.size();
  report.runs = fan_out(seeds.size() * per_seed, config.threads, [&](std::size_t job) {
    const std::uint64_t seed = seeds[job / per_seed];
    const std::size_t c = job % per_seed;
    num::Rng a(stream(seed, kTrainDataStream));
    num::Rng b(stream(seed, kTestDataStream));
    const num::Matrix train_data = sample_target(target, a, config.train_samples);
    const num::Matrix test_data = sample_target(target, b, config.test_samples);
    Trained t = train_one(configs[c].first, configs[c].second, seed, c, train_data, test_data, config);
    if (t.model) {
      num::Rng rng(stream(seed, kSampleStream + c));
      const NormalityResult nr = marginal_normality_check(*t.model, 0, config.normality_samples, rng);
      t.result.extras = {{"skewness", nr.skewness},
                         {"excess_kurtosis", nr.excess_kurtosis},
                         {"normal", nr.normal ? 1.0 : 0.0}};
    }
    return t.result;
  });
  report.summary = summarize(report.runs, {"K=1", "K=3"});
  for (const auto& label : {"K=1", "K=3"}) {
    const std::string prefix = label == std::string("K=1") ? "k1_" : "k3_";
    report.results.emplace_back(prefix + "normal_fraction", mean_extra(report.runs, label, "normal"));
  }
  return report;
}

flows::FlowSpec chain_flow_spec(std::size_t steps, std::size_t component) {
  if (component > 1) throw InputError("chain_flow_spec: component must be 0 or 1");
  flows::FlowSpec spec = flows::make_stacked_flow(2, steps, flows::Coupling{2});
  for (auto& s : spec.steps) s.permutation = flows::IdentityPermutation{};
  if (component == 1) spec.steps[0].permutation = flows::ReversePermutation{};
  return spec;
}

double chain_second_difference(const flows::FlowModel& chain, std::size_t component, std::span<const double> z,
                               double h) {
  std::vector<double> probe(z.begin(), z.end());
  const double mid = probe[0];
  auto at = [&](double v) {
    probe[0] = v;
    return flows::flow_inverse(chain, probe)[component];
  };
  return at(mid + h) - 2.0 * at(mid) + at(mid - h);
}

GaussianMarginal chain_marginal(const flows::FlowModel& chain, std::size_t component) {
  const std::vector<double> zero(chain.dim(), 0.0);
  std::vector<double> one = zero;
  one[0] = 1.0;
  const double b = flows::flow_inverse(chain, zero)[component];
  const double a = flows::flow_inverse(chain, one)[component] - b;
  return {b, std::fabs(a)};
}

double best_gaussian_nll(double separation) {
  const double var = separation * separation + kBimodalSd * kBimodalSd;
  return 0.5 * (std::log(2.0 * std::numbers::pi) + std::log(var) + 1.0);
}

ExperimentReport nonuniversality_experiment(double separation, std::size_t steps,
                                            std::span<const std::uint64_t> seeds, const ExperimentConfig& config) {
  check_seeds(seeds, 1, "nonuniversality_experiment");
  if (steps < 1 || steps > 6) throw InputError("nonuniversality_experiment: steps must lie in 1..6");
  if (!(separation > 0.0)) throw InputError("nonuniversality_experiment: separation must be positive");
  const ToyTarget target{TargetKind::IndependentBimodal, 0, separation};
  const std::vector<std::pair<std::string, flows::FlowSpec>> configs = {
      {"chain", chain_flow_spec(steps, 0)},
      {"full", flows::make_stacked_flow(2, steps, flows::Coupling{2})},
  };
  const double gaussian_fit = best_gaussian_nll(separation);

  ExperimentReport report;
  report.experiment = "nonuniversal";
  report.target = target_name(target.kind);
  report.seeds.assign(seeds.begin(), seeds.end());
  const std::size_t per_seed = configs.size();
  report.runs = fan_out(seeds.size() * per_seed, config.threads, [&](std::size_t job) {
    const std::uint64_t seed = seeds[job / per_seed];
    const std::size_t c = job % per_seed;
    num::Rng a(stream(seed, kTrainDataStream));
    num::Rng b(stream(seed, kTestDataStream));
    const num::Matrix train_data = sample_target(target, a, config.train_samples);
    const num::Matrix test_data = sample_target(target, b, config.test_samples);
    Trained t = train_one(configs[c].first, configs[c].second, seed, c, train_data, test_data, config);
    if (!t.model) return t.result;
    num::Rng rng(stream(seed, kSampleStream + c));
    if (c == 0) {
      const GaussianMarginal g = chain_marginal(*t.model, 0);
      double nll = 0.0;
      for (std::size_t r = 0; r < test_data.rows(); ++r) {
        const double u = (test_data(r, 0) - g.mean) / g.sd;
        nll += 0.5 * u * u + std::log(g.sd) + 0.5 * std::log(2.0 * std::numbers::pi);
      }
      nll /= static_cast<double>(test_data.rows());
      std::vector<double> z{rng.normal(), rng.normal()};
      const double second = chain_second_difference(*t.model, 0, z, 1.0);
      const NormalityResult nr = marginal_normality_check(*t.model, 0, config.normality_samples, rng);
      t.result.extras = {{"marginal_nll", nll},
                         {"gaussian_fit_nll", gaussian_fit},
                         {"second_difference", second},
                         {"skewness", nr.skewness},
                         {"excess_kurtosis", nr.excess_kurtosis}};
    } else {
      const flows::SampleBatch s = flows::sample(*t.model, rng, config.mi_samples);
      t.result.extras = {{"mi", mutual_information(column(s.x, 0), column(s.x, 1), config.mi_bins)}};
    }
    return t.result;
  });
  report.summary = summarize(report.runs, {"chain", "full"});

  num::Rng control(stream(seeds[0], kControlStream));
  const num::Matrix independent = sample_target(target, control, config.mi_samples);
  report.results = {{"marginal_nll", mean_extra(report.runs, "chain", "marginal_nll")},
                    {"gaussian_fit_nll", gaussian_fit},
                    {"second_difference", mean_extra(report.runs, "chain", "second_difference")},
                    {"mi", mean_extra(report.runs, "full", "mi")},
                    {"mi_floor", mutual_information(column(independent, 0), column(independent, 1), config.mi_bins)}};
  return report;
}

}  // namespace flowbn::lab
