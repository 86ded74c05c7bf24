#include "flowbn/flows/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowbn/error.hpp"
#include "flowbn/flows/flow.hpp"

namespace flowbn::flows {

namespace {

void shuffle(std::vector<std::size_t>& v, num::Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

double checked_nll(const FlowModel& model, const num::Matrix& rows) {
  double nll = 0.0;
  try {
    nll = mean_nll(model, rows);
  } catch (const EvaluationError& e) {
    throw DivergenceError(std::string("train: ") + e.what());
  }
  if (!std::isfinite(nll)) throw DivergenceError("train: non-finite validation loss");
  return nll;
}

}  // namespace

TrainResult train(FlowModel model, const num::Matrix& dataset, const TrainConfig& config) {
  if (dataset.rows() == 0) throw InputError("train: empty dataset");
  if (dataset.cols() != model.dim()) {
    throw InputError("train: dataset has " + std::to_string(dataset.cols()) + " columns, model expects " +
                     std::to_string(model.dim()));
  }
  if (!dataset.all_finite()) throw InputError("train: dataset contains non-finite values");
  if (config.batch_size == 0) throw InputError("train: batch size must be positive");
  if (config.validation_fraction < 0.0 || config.validation_fraction >= 1.0) {
    throw InputError("train: validation fraction must lie in [0, 1)");
  }

  num::Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.rows());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  const auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(order.size())));
  const std::size_t n_train = order.size() - n_val;
  const std::vector<std::size_t> val_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  const num::Matrix validation = dataset.gather_rows(val_idx.empty() ? train_idx : val_idx);

  const auto blocks = model.parameter_blocks();
  num::AdamState adam(model.parameter_count(), config.adam);
  std::vector<double> params = model.flat_parameters();

  TrainResult result{model, {}, 0.0};
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(train_idx, rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < n_train; begin += config.batch_size) {
      const std::size_t end = std::min(n_train, begin + config.batch_size);
      const num::Matrix batch = dataset.gather_rows(
          std::span<const std::size_t>(train_idx).subspan(begin, end - begin));
      const NllGradient g = nll_gradient(model, batch);
      adam.step(params, g.gradient, blocks);
      model.set_flat_parameters(params);
      epoch_loss += g.loss * static_cast<double>(end - begin);
    }
    EpochRecord rec{epoch + 1, epoch_loss / static_cast<double>(n_train), checked_nll(model, validation)};
    result.trace.push_back(rec);
  }
  result.final_validation_nll =
      result.trace.empty() ? checked_nll(model, validation) : result.trace.back().validation_nll;
  result.model = std::move(model);
  return result;
}

}  // namespace flowbn::flows
