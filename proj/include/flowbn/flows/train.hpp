#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "flowbn/flows/model.hpp"
#include "flowbn/numcore/adam.hpp"
#include "flowbn/numcore/matrix.hpp"

namespace flowbn::flows {

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 256;
  double validation_fraction = 0.1;
  std::uint64_t seed = 42;
  num::AdamConfig adam;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_nll = 0.0;       // mean over the epoch's minibatches, weighted by size
  double validation_nll = 0.0;  // on the held-out split after the epoch
};

struct TrainResult {
  FlowModel model;
  std::vector<EpochRecord> trace;
  double final_validation_nll = 0.0;
};

// Maximum-likelihood training with Adam on shuffled minibatches. The rows
// are split once (seeded) into train/validation parts. When the split leaves
// no validation rows the training rows stand in for them. Throws
// DivergenceError when a loss or gradient becomes non-finite.
TrainResult train(FlowModel model, const num::Matrix& dataset, const TrainConfig& config);

}  // namespace flowbn::flows
