#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "flowbn/flows/model.hpp"
#include "flowbn/numcore/matrix.hpp"
#include "flowbn/numcore/rng.hpp"

namespace flowbn::flows {

// Batched results hold one row per sample.
struct StepOutput {
  num::Matrix y;
  std::vector<double> logdet;
};

struct FlowOutput {
  num::Matrix z;
  std::vector<double> logdet;
};

struct SampleBatch {
  num::Matrix x;
  std::vector<double> log_prob;
};

struct NllGradient {
  double loss = 0.0;              // mean negative log-likelihood (nats)
  std::vector<double> gradient;   // flat, FlowModel::parameter_blocks() layout
};

// One step in the data-to-latent direction: permute the input, then apply
// each normalizer with conditioner-produced parameters. Output stays in the
// permuted order.
StepOutput step_forward_batch(const FlowModel& model, std::size_t step, const num::Matrix& x);
std::pair<std::vector<double>, double> step_forward(const FlowModel& model, std::size_t step,
                                                    std::span<const double> x);
num::Matrix step_inverse_batch(const FlowModel& model, std::size_t step, const num::Matrix& y);

FlowOutput flow_forward_batch(const FlowModel& model, const num::Matrix& x);
std::pair<std::vector<double>, double> flow_forward(const FlowModel& model, std::span<const double> x);

num::Matrix flow_inverse_batch(const FlowModel& model, const num::Matrix& z);
std::vector<double> flow_inverse(const FlowModel& model, std::span<const double> z);

// log p(x) under a standard normal base density.
std::vector<double> log_prob_batch(const FlowModel& model, const num::Matrix& x);
double log_prob(const FlowModel& model, std::span<const double> x);

double standard_normal_log_density(std::span<const double> z);

SampleBatch sample(const FlowModel& model, num::Rng& rng, std::size_t n);

double mean_nll(const FlowModel& model, const num::Matrix& batch);
NllGradient nll_gradient(const FlowModel& model, const num::Matrix& batch);

}  // namespace flowbn::flows
