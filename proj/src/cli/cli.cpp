#include "flowbn/cli/cli.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "flowbn/bn/compile.hpp"
#include "flowbn/bn/dsep.hpp"
#include "flowbn/bn/io.hpp"
#include "flowbn/error.hpp"
#include "flowbn/flows/io.hpp"
#include "flowbn/flows/train.hpp"
#include "flowbn/lab/experiments.hpp"
#include "flowbn/numcore/kernels.hpp"
#include "flowbn/numcore/rng.hpp"

namespace flowbn::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 42;
  std::string out = ".";
  std::size_t threads = 1;
};

struct TrainArgs {
  std::string spec;
  std::string data;
  std::size_t epochs = 300;
  std::size_t batch = 256;
  double lr = 1e-3;
  double validation = 0.1;
  std::vector<std::size_t> hidden = {64, 64};
};

struct ExtractArgs {
  std::string spec;
  bool latents = false;
  std::string format = "dot";
};

struct DsepArgs {
  std::string bn;
  std::vector<std::string> x;
  std::vector<std::string> y;
  std::vector<std::string> z;
};

struct ExperimentArgs {
  std::string name;
  std::string target = "eight_gaussians";
  std::size_t seeds = 3;
  std::vector<std::size_t> steps;
  std::size_t epochs = 300;
  std::size_t samples = 10000;
  std::size_t test_samples = 10000;
  std::size_t batch = 256;
  double lr = 1e-3;
  double separation = 2.0;
  std::size_t grid = 64;
  std::size_t mi_samples = 100000;
  std::size_t normality_samples = 100000;
  std::vector<std::size_t> hidden = {64, 64};
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

fs::path prepare_out(const Globals& g) {
  const fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory '" + g.out + "'");
  return dir;
}

// Empty list entries come from `--z ""` and mean "no node".
std::vector<std::string> non_empty(const std::vector<std::string>& ids) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    if (!id.empty()) out.push_back(id);
  }
  return out;
}

int cmd_train(const Globals& g, const TrainArgs& a, std::ostream& out) {
  const flows::FlowSpec spec = flows::spec_from_json(flows::read_text_file(a.spec));
  const num::Matrix data = flows::read_csv_file(a.data);
  if (data.cols() != spec.dim) {
    throw InputError("'" + a.data + "' has " + std::to_string(data.cols()) + " columns but the spec has dim " +
                     std::to_string(spec.dim));
  }
  const fs::path dir = prepare_out(g);

  num::Rng rng(g.seed);
  flows::ModelOptions options;
  options.hidden = a.hidden;
  flows::TrainConfig config;
  config.epochs = a.epochs;
  config.batch_size = a.batch;
  config.validation_fraction = a.validation;
  config.seed = g.seed;
  config.adam.learning_rate = a.lr;
  const flows::TrainResult result = flows::train(flows::FlowModel(spec, rng, options), data, config);

  const fs::path checkpoint = dir / "checkpoint.json";
  const fs::path trace = dir / "trace.csv";
  flows::write_text_file(checkpoint, flows::checkpoint_to_json(result.model));
  std::string csv = "epoch,train_nll,validation_nll\n";
  for (const auto& e : result.trace) {
    csv += std::to_string(e.epoch) + "," + fmt(e.train_nll) + "," + fmt(e.validation_nll) + "\n";
  }
  flows::write_text_file(trace, csv);

  out << "checkpoint=" << checkpoint.string() << "\n";
  out << "trace=" << trace.string() << "\n";
  out << "epochs=" << result.trace.size() << "\n";
  out << "nll=" << fmt(result.final_validation_nll) << "\n";
  return kExitOk;
}

int cmd_extract_bn(const Globals& g, const ExtractArgs& a, std::ostream& out) {
  const flows::FlowSpec spec = flows::spec_from_json(flows::read_text_file(a.spec));
  const bn::Bn graph = bn::bn_from_flow(spec, a.latents);
  const fs::path dir = prepare_out(g);
  const fs::path file = dir / (fs::path(a.spec).stem().string() + "_bn." + a.format);
  flows::write_text_file(file, a.format == "dot" ? bn::export_dot(graph) : bn::to_json(graph));
  out << "bn=" << file.string() << "\n";
  out << "nodes=" << graph.size() << "\n";
  out << "edges=" << graph.edges().size() << "\n";
  return kExitOk;
}

int cmd_dsep(const DsepArgs& a, std::ostream& out) {
  const bn::Bn graph = bn::bn_from_json(flows::read_text_file(a.bn));
  const bn::CiStatement q{non_empty(a.x), non_empty(a.y), non_empty(a.z)};
  out << (bn::d_separated(graph, q) ? "d-separated" : "d-connected") << "\n";
  return kExitOk;
}

// "K=3" -> "3steps"; other labels keep their name and gain the step count.
std::string panel_stem(const std::string& experiment, const lab::RunResult& r) {
  const std::string prefix = experiment + "_seed" + std::to_string(r.seed) + "_";
  if (r.label.rfind("K=", 0) == 0) return prefix + r.label.substr(2) + "steps";
  if (r.label == "universal") return prefix + "universal";
  return prefix + r.label + "_" + std::to_string(r.steps) + "steps";
}

void write_grid(const fs::path& dir, const std::string& stem, const lab::DensityGrid& grid) {
  flows::write_text_file(dir / (stem + ".csv"), lab::grid_to_csv(grid));
  flows::write_text_file(dir / (stem + ".pgm"), lab::grid_to_pgm(grid));
}

int cmd_experiment(const Globals& g, const ExperimentArgs& a, std::ostream& out) {
  if (a.name != "capacity" && a.name != "nonuniversal" && a.name != "normality") {
    throw InputError("unknown experiment '" + a.name + "' (valid: capacity, nonuniversal, normality)");
  }
  lab::ToyTarget target;
  target.kind = lab::parse_target(a.target);
  target.separation = a.separation;
  if (a.name == "nonuniversal" && target.kind != lab::TargetKind::IndependentBimodal) {
    target.kind = lab::TargetKind::IndependentBimodal;
  }
  if (a.seeds == 0) throw InputError("--seeds must be positive");

  lab::ExperimentConfig config;
  config.train.epochs = a.epochs;
  config.train.batch_size = a.batch;
  config.train.adam.learning_rate = a.lr;
  config.model.hidden = a.hidden;
  config.train_samples = a.samples;
  config.test_samples = a.test_samples;
  config.mi_samples = a.mi_samples;
  config.normality_samples = a.normality_samples;
  config.grid_resolution = a.grid;
  config.threads = g.threads;

  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.seeds; ++i) seeds.push_back(g.seed + i);
  const fs::path dir = prepare_out(g);

  const auto start = std::chrono::steady_clock::now();
  lab::ExperimentReport report;
  if (a.name == "capacity") {
    const std::vector<std::size_t> steps = a.steps.empty() ? std::vector<std::size_t>{1, 2, 3, 4, 5} : a.steps;
    report = lab::capacity_ladder(target, steps, seeds, config);
  } else if (a.name == "normality") {
    report = lab::normality_experiment(target, seeds, config);
  } else {
    if (a.steps.size() > 1) throw InputError("nonuniversal takes a single --steps value");
    report = lab::nonuniversality_experiment(a.separation, a.steps.empty() ? 5 : a.steps.front(), seeds, config);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path json = dir / (a.name + "_report.json");
  flows::write_text_file(json, lab::report_to_json(report));
  flows::write_text_file(dir / (a.name + "_report.csv"), lab::report_to_csv(report));
  flows::write_text_file(dir / (a.name + "_metadata.json"), lab::report_metadata_json(report, wall));
  std::size_t panels = 0;
  for (const auto& r : report.runs) {
    if (!r.grid) continue;
    write_grid(dir, panel_stem(a.name, r), *r.grid);
    ++panels;
  }
  if (a.grid > 0 && lab::target_log_density(target, std::vector<double>{0.0, 0.0})) {
    write_grid(dir, a.name + "_target", lab::density_grid(target, config.grid_bounds, a.grid));
  }

  out << "report=" << json.string() << "\n";
  out << "runs=" << report.runs.size() << "\n";
  out << "panels=" << panels << "\n";
  for (const auto& row : report.summary) {
    out << "mean_test_nll[" << row.label << "]=" << fmt(row.mean_test_nll) << "\n";
  }
  for (const auto& [name, value] : report.results) out << name << "=" << fmt(value) << "\n";
  out << "diverged=" << (report.any_diverged() ? 1 : 0) << "\n";
  return report.any_diverged() ? kExitNumerical : kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Normalizing flows and their equivalent Bayesian networks", "flowbn"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory, created if absent")->capture_default_str();
  app.add_option("--threads", g.threads, "Concurrent experiment runs")->capture_default_str()->check(CLI::PositiveNumber);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Fit a flow to a CSV dataset by maximum likelihood");
  train->fallthrough();
  train->add_option("--spec", ta.spec, "Flow spec JSON")->required();
  train->add_option("--data", ta.data, "Data CSV, one row per sample")->required();
  train->add_option("--epochs", ta.epochs)->capture_default_str();
  train->add_option("--batch", ta.batch)->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--lr", ta.lr)->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--validation", ta.validation, "Held-out fraction")->capture_default_str()->check(CLI::Range(0.0, 0.9));
  train->add_option("--hidden", ta.hidden, "Conditioner hidden widths")->delimiter(',')->capture_default_str();

  ExtractArgs ea;
  auto* extract = app.add_subcommand("extract-bn", "Write the equivalent Bayesian network of a flow spec");
  extract->fallthrough();
  extract->add_option("--spec", ea.spec, "Flow spec JSON")->required();
  extract->add_flag("--latents", ea.latents, "Include latent and intermediate layers");
  extract->add_option("--format", ea.format)->capture_default_str()->check(CLI::IsMember({"dot", "json"}));

  DsepArgs da;
  auto* dsep = app.add_subcommand("dsep", "Test X _|_ Y | Z by d-separation");
  dsep->fallthrough();
  dsep->add_option("--bn", da.bn, "BN JSON")->required();
  dsep->add_option("--x", da.x, "Comma-separated node ids")->delimiter(',')->required();
  dsep->add_option("--y", da.y, "Comma-separated node ids")->delimiter(',')->required();
  dsep->add_option("--z", da.z, "Comma-separated node ids")->delimiter(',');

  ExperimentArgs xa;
  auto* experiment = app.add_subcommand("experiment", "Run a toy-density experiment");
  experiment->fallthrough();
  experiment->add_option("--name", xa.name, "capacity, nonuniversal or normality")->required();
  experiment->add_option("--target", xa.target)->capture_default_str();
  experiment->add_option("--seeds", xa.seeds, "Number of seeds, counting up from --seed")->capture_default_str();
  experiment->add_option("--steps", xa.steps, "Step counts (capacity) or the step count (nonuniversal)")->delimiter(',');
  experiment->add_option("--epochs", xa.epochs)->capture_default_str();
  experiment->add_option("--samples", xa.samples, "Training samples")->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_option("--test-samples", xa.test_samples)->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_option("--batch", xa.batch)->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_option("--lr", xa.lr)->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_option("--separation", xa.separation, "Bimodal mode offset")->capture_default_str();
  experiment->add_option("--grid", xa.grid, "Density grid resolution, 0 for none")->capture_default_str();
  experiment->add_option("--mi-samples", xa.mi_samples)->capture_default_str();
  experiment->add_option("--normality-samples", xa.normality_samples)->capture_default_str();
  experiment->add_option("--hidden", xa.hidden, "Conditioner hidden widths")->delimiter(',')->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  // Only experiment fan-out runs concurrently.
  num::kernels::set_thread_count(1);
  try {
    if (train->parsed()) return cmd_train(g, ta, out);
    if (extract->parsed()) return cmd_extract_bn(g, ea, out);
    if (dsep->parsed()) return cmd_dsep(da, out);
    return cmd_experiment(g, xa, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const EvaluationError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const InversionError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace flowbn::cli
