// Serial reference kernels versus their OpenMP counterparts on the shapes
// that dominate flow training (batch 256, hidden width 64).
#include <benchmark/benchmark.h>

#include "flowbn/flows/flow.hpp"
#include "flowbn/flows/spec.hpp"
#include "flowbn/numcore/kernels.hpp"
#include "flowbn/numcore/mlp.hpp"
#include "flowbn/numcore/rng.hpp"

namespace {

using flowbn::num::Matrix;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  flowbn::num::Rng rng(seed);
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

template <auto Kernel>
void BM_AffineRows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto width = static_cast<std::size_t>(state.range(1));
  const Matrix x = random_matrix(n, width, 1);
  const Matrix w = random_matrix(width, width, 2);
  const std::vector<double> b(width, 0.1);
  Matrix y(n, width);
  for (auto _ : state) {
    Kernel(x.view(), w.view(), b, y.mut_view());
    benchmark::DoNotOptimize(y.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * width * width));
}

template <auto Kernel>
void BM_InputGrad(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto width = static_cast<std::size_t>(state.range(1));
  const Matrix dy = random_matrix(n, width, 3);
  const Matrix w = random_matrix(width, width, 4);
  Matrix dx(n, width);
  for (auto _ : state) {
    Kernel(dy.view(), w.view(), dx.mut_view());
    benchmark::DoNotOptimize(dx.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * width * width));
}

template <auto Kernel>
void BM_WeightGrad(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto width = static_cast<std::size_t>(state.range(1));
  const Matrix x = random_matrix(n, width, 5);
  const Matrix dy = random_matrix(n, width, 6);
  Matrix dw(width, width);
  std::vector<double> db(width);
  for (auto _ : state) {
    Kernel(x.view(), dy.view(), dw.mut_view(), db);
    benchmark::DoNotOptimize(dw.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * width * width));
}

template <auto Kernel>
void BM_Tanh(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto width = static_cast<std::size_t>(state.range(1));
  const Matrix src = random_matrix(n, width, 7);
  Matrix a = src;
  for (auto _ : state) {
    a = src;
    Kernel(a.mut_view());
    benchmark::DoNotOptimize(a.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * width));
}

namespace ks = flowbn::num::kernels::serial;
namespace kp = flowbn::num::kernels::parallel;

BENCHMARK(BM_AffineRows<ks::affine_rows>)->Args({256, 64})->Args({4096, 64});
BENCHMARK(BM_AffineRows<kp::affine_rows>)->Args({256, 64})->Args({4096, 64});
BENCHMARK(BM_InputGrad<ks::input_grad>)->Args({256, 64})->Args({4096, 64});
BENCHMARK(BM_InputGrad<kp::input_grad>)->Args({256, 64})->Args({4096, 64});
BENCHMARK(BM_WeightGrad<ks::weight_grad>)->Args({256, 64})->Args({4096, 64});
BENCHMARK(BM_WeightGrad<kp::weight_grad>)->Args({256, 64})->Args({4096, 64});
BENCHMARK(BM_Tanh<ks::tanh_inplace>)->Args({256, 64});
BENCHMARK(BM_Tanh<kp::tanh_inplace>)->Args({256, 64});

// One minibatch gradient of a 3-step affine coupling flow in 2D.
void BM_FlowGradient(benchmark::State& state) {
  flowbn::num::Rng rng(11);
  flowbn::flows::FlowModel model(flowbn::flows::make_stacked_flow(2, 3, flowbn::flows::Coupling{2}), rng);
  flowbn::flows::perturb_parameters(model, rng, 0.05);
  const Matrix batch = random_matrix(256, 2, 12);
  for (auto _ : state) {
    auto g = flowbn::flows::nll_gradient(model, batch);
    benchmark::DoNotOptimize(g.gradient.data());
  }
}
BENCHMARK(BM_FlowGradient);

// Conditioner network of a 2D coupling step: forward with tape, then backward.
void BM_MlpStep(benchmark::State& state) {
  flowbn::num::Rng rng(12);
  auto net = flowbn::num::Mlp::initialized({1, 64, 64, 2}, rng, false);
  const Matrix x = random_matrix(256, 1, 13);
  const Matrix dy = random_matrix(256, 2, 14);
  std::vector<double> grad(net.parameter_count());
  for (auto _ : state) {
    flowbn::num::MlpTape tape;
    net.forward_batch(x, &tape);
    Matrix dx;
    net.backward_batch(tape, dy, grad, &dx);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_MlpStep);

}  // namespace

BENCHMARK_MAIN();
