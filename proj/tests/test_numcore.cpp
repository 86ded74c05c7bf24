#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "flowbn/error.hpp"
#include "flowbn/numcore/adam.hpp"
#include "flowbn/numcore/kernels.hpp"
#include "flowbn/numcore/matrix.hpp"
#include "flowbn/numcore/mlp.hpp"
#include "flowbn/numcore/rng.hpp"
#include "support.hpp"

using namespace flowbn;
using num::Matrix;

namespace {

Matrix random_matrix(num::Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

// Largest |a - b| relative to max(|a|, |b|, 1).
double max_rel_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::fabs(a[i] - b[i]) / std::max({std::fabs(a[i]), std::fabs(b[i]), 1.0}));
  }
  return worst;
}

// Worst finite-difference relative error of mlp_backward over all
// parameters and inputs of `net` at `x` for the loss sum_o w_o * y_o.
double mlp_gradient_error(num::Mlp net, const std::vector<double>& x, const std::vector<double>& w) {
  auto loss = [&](const num::Mlp& m, const std::vector<double>& in) {
    const auto y = num::mlp_forward(m, in);
    return std::inner_product(y.begin(), y.end(), w.begin(), 0.0);
  };
  const auto g = num::mlp_backward(net, x, w);
  const double h = 1e-6;
  double worst = 0.0;
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = loss(net, x);
    params[i] = keep - h;
    const double down = loss(net, x);
    params[i] = keep;
    worst = std::max(worst, test::relative_error(g.parameters[i], (up - down) / (2 * h)));
  }
  std::vector<double> xx = x;
  for (std::size_t i = 0; i < xx.size(); ++i) {
    const double keep = xx[i];
    xx[i] = keep + h;
    const double up = loss(net, xx);
    xx[i] = keep - h;
    const double down = loss(net, xx);
    xx[i] = keep;
    worst = std::max(worst, test::relative_error(g.input[i], (up - down) / (2 * h)));
  }
  return worst;
}

}  // namespace

TEST_SUITE("numcore.matrix") {
  TEST_CASE("shape and element access") {
    Matrix m{{1, 2, 3}, {4, 5, 6}};
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m.size() == 6);
    CHECK(m(1, 2) == 6);
    CHECK(m.row(1)[0] == 4);
    CHECK(m.all_finite());
    m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(m.all_finite());
  }

  TEST_CASE("column selection and row gathers") {
    const Matrix m{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
    const std::vector<std::size_t> cols{2, 0};
    CHECK(m.select_columns(cols) == Matrix{{3, 1}, {6, 4}, {9, 7}});
    const std::vector<std::size_t> rows{2, 2, 0};
    CHECK(m.gather_rows(rows) == Matrix{{7, 8, 9}, {7, 8, 9}, {1, 2, 3}});
    CHECK(m.slice_rows(1, 2) == Matrix{{4, 5, 6}});
    const std::vector<double> r{1.5, 2.5};
    CHECK(Matrix::from_row(r) == Matrix{{1.5, 2.5}});
  }
}

TEST_SUITE("numcore.rng") {
  TEST_CASE("same seed gives the same stream") {
    num::Rng a(123);
    num::Rng b(123);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(num::gaussian_sample(a, 50) == num::gaussian_sample(b, 50));
  }

  TEST_CASE("known SplitMix64 outputs") {
    // Reference values of SplitMix64 seeded with 0.
    num::Rng r(0);
    CHECK(r.next_u64() == 0xe220a8397b1dcdafULL);
    CHECK(r.next_u64() == 0x6e789e6aa1b965f4ULL);
    CHECK(r.next_u64() == 0x06c45d188009454fULL);
  }

  TEST_CASE("derived streams differ") {
    CHECK(num::Rng::derive_seed(1, 0) != num::Rng::derive_seed(1, 1));
    CHECK(num::Rng::derive_seed(1, 0) != num::Rng::derive_seed(2, 0));
    CHECK(num::Rng::derive_seed(5, 9) == num::Rng::derive_seed(5, 9));
  }

  TEST_CASE("uniform and bounded integers stay in range") {
    num::Rng r(9);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 70000; ++i) {
      const double u = r.uniform();
      CHECK((u >= 0.0 && u < 1.0));
      ++hits[r.below(7)];
    }
    for (int h : hits) CHECK(std::abs(h - 10000) < 500);
  }

  TEST_CASE("gaussian moments at 1e6 draws") {
    num::Rng r(2024);
    const auto s = num::gaussian_sample(r, 1000000);
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.size() - 1);
    CHECK(std::fabs(mean) < 0.01);
    CHECK(std::fabs(var - 1.0) < 0.01);
  }

  TEST_CASE("single draw and empty request") {
    num::Rng r(4);
    const auto one = num::gaussian_sample(r, 1);
    REQUIRE(one.size() == 1);
    CHECK(std::isfinite(one[0]));
    CHECK_THROWS_AS(num::gaussian_sample(r, 0), InputError);
  }
}

TEST_SUITE("numcore.kernels") {
  TEST_CASE("parallel kernels match the serial reference") {
    num::Rng rng(77);
    const std::vector<std::array<std::size_t, 3>> shapes{
        {1, 1, 1}, {3, 2, 5}, {7, 64, 64}, {256, 64, 2}, {33, 1, 64}, {129, 64, 37}, {600, 64, 64}};
    const int saved = num::kernels::thread_count();
    for (int threads : {1, 2, 3}) {
      num::kernels::set_thread_count(threads);
      for (const auto& [n, in, out] : shapes) {
        const Matrix x = random_matrix(rng, n, in);
        const Matrix w = random_matrix(rng, in, out);
        const Matrix dy = random_matrix(rng, n, out);
        const Matrix b = random_matrix(rng, 1, out);

        Matrix ys(n, out), yp(n, out);
        num::kernels::serial::affine_rows(x.view(), w.view(), b.values(), ys.mut_view());
        num::kernels::parallel::affine_rows(x.view(), w.view(), b.values(), yp.mut_view());
        CHECK(max_rel_diff(ys.values(), yp.values()) < 1e-13);

        Matrix dxs(n, in), dxp(n, in);
        num::kernels::serial::input_grad(dy.view(), w.view(), dxs.mut_view());
        num::kernels::parallel::input_grad(dy.view(), w.view(), dxp.mut_view());
        CHECK(max_rel_diff(dxs.values(), dxp.values()) < 1e-13);

        Matrix dws(in, out, 0.5), dwp(in, out, 0.5);
        std::vector<double> dbs(out, 0.25), dbp(out, 0.25);
        num::kernels::serial::weight_grad(x.view(), dy.view(), dws.mut_view(), dbs);
        num::kernels::parallel::weight_grad(x.view(), dy.view(), dwp.mut_view(), dbp);
        CHECK(max_rel_diff(dws.values(), dwp.values()) < 1e-13);
        CHECK(max_rel_diff(dbs, dbp) < 1e-13);

        Matrix ts = x, tp = x;
        num::kernels::serial::tanh_inplace(ts.mut_view());
        num::kernels::parallel::tanh_inplace(tp.mut_view());
        CHECK(max_rel_diff(ts.values(), tp.values()) < 1e-15);

        Matrix gs(n, in), gp(n, in);
        num::kernels::serial::tanh_backward(ts.view(), x.view(), gs.mut_view());
        num::kernels::parallel::tanh_backward(ts.view(), x.view(), gp.mut_view());
        CHECK(max_rel_diff(gs.values(), gp.values()) < 1e-15);
      }
    }
    num::kernels::set_thread_count(saved);
  }

  TEST_CASE("parallel results do not depend on thread count") {
    num::Rng rng(78);
    const Matrix x = random_matrix(rng, 500, 64);
    const Matrix w = random_matrix(rng, 64, 64);
    const std::vector<double> b(64, 0.1);
    const int saved = num::kernels::thread_count();
    num::kernels::set_thread_count(1);
    Matrix y1(500, 64);
    num::kernels::parallel::affine_rows(x.view(), w.view(), b, y1.mut_view());
    num::kernels::set_thread_count(4);
    Matrix y4(500, 64);
    num::kernels::parallel::affine_rows(x.view(), w.view(), b, y4.mut_view());
    num::kernels::set_thread_count(saved);
    CHECK(y1 == y4);
  }

  TEST_CASE("tanh over the whole real line") {
    std::vector<double> xs{0.0, -0.0, 1e-300, -1e-12, 0.5, -0.5, 1.0, 3.0, -7.5, 9.75, 19.0, 19.6, -25.0, 700.0, -1e300};
    for (int i = -4000; i <= 4000; ++i) xs.push_back(i * 0.005);
    Matrix m(1, xs.size());
    std::copy(xs.begin(), xs.end(), m.values().begin());
    num::kernels::parallel::tanh_inplace(m.mut_view());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double want = std::tanh(xs[i]);
      CHECK(std::fabs(m(0, i) - want) <= 4e-16 * std::max(1e-300, std::fabs(want)) + 1e-300);
    }
  }
}

TEST_SUITE("numcore.mlp") {
  TEST_CASE("zero network outputs zeros") {
    const num::Mlp net({3, 5, 2});
    const auto y = num::mlp_forward(net, std::vector<double>{0.3, -2.0, 7.0});
    CHECK(y == std::vector<double>{0.0, 0.0});
  }

  TEST_CASE("identity-start initialization zeros only the last layer") {
    num::Rng rng(1);
    const auto net = num::Mlp::initialized({2, 64, 64, 2}, rng);
    const auto y = num::mlp_forward(net, std::vector<double>{0.4, 0.9});
    CHECK(y == std::vector<double>{0.0, 0.0});
    const double limit = std::sqrt(6.0 / (64 + 64));
    const auto w1 = net.weights(1);
    double biggest = 0.0;
    for (std::size_t i = 0; i < w1.rows * w1.cols; ++i) biggest = std::max(biggest, std::fabs(w1.data[i]));
    CHECK(biggest > 0.0);
    CHECK(biggest <= limit);
  }

  TEST_CASE("hand-computed 1-1-1 network") {
    num::Mlp net({1, 1, 1});
    net.weights(0)(0, 0) = 2.0;
    net.bias(0)[0] = -0.3;
    net.weights(1)(0, 0) = 1.5;
    net.bias(1)[0] = 0.25;
    // 1.5 * tanh(2 * 0.5 - 0.3) + 0.25
    const auto y = num::mlp_forward(net, std::vector<double>{0.5});
    CHECK(y[0] == doctest::Approx(1.1565516656757455).epsilon(1e-14));
  }

  TEST_CASE("shape errors") {
    const num::Mlp net({2, 3, 1});
    CHECK_THROWS_AS(num::mlp_forward(net, std::vector<double>{1.0}), InputError);
    CHECK_THROWS_AS(num::mlp_backward(net, std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}), InputError);
    CHECK_THROWS_AS(num::Mlp({3}), InputError);
  }

  TEST_CASE("zero upstream gradient gives zero gradients") {
    num::Rng rng(2);
    const auto net = num::Mlp::initialized({3, 8, 2}, rng, false);
    const auto g = num::mlp_backward(net, std::vector<double>{0.1, 0.2, 0.3}, std::vector<double>{0.0, 0.0});
    for (double v : g.parameters) CHECK(v == 0.0);
    for (double v : g.input) CHECK(v == 0.0);
  }

  TEST_CASE("single linear neuron") {
    num::Mlp net({3, 1});
    net.weights(0)(0, 0) = 0.7;
    net.weights(0)(1, 0) = -1.1;
    net.weights(0)(2, 0) = 0.2;
    const std::vector<double> x{1.25, -3.5, 0.75};
    const auto g = num::mlp_backward(net, x, std::vector<double>{1.0});
    CHECK(g.parameters[0] == 1.25);
    CHECK(g.parameters[1] == -3.5);
    CHECK(g.parameters[2] == 0.75);
    CHECK(g.parameters[3] == 1.0);
    CHECK(g.input == std::vector<double>{0.7, -1.1, 0.2});
  }

  TEST_CASE("2-8-2 gradient matches finite differences") {
    num::Rng rng(3);
    const auto net = num::Mlp::initialized({2, 8, 2}, rng, false);
    CHECK(mlp_gradient_error(net, {0.3, -1.2}, {0.7, -0.4}) < 1e-5);
  }

  TEST_CASE("gradient check on 100 random configurations") {
    num::Rng rng(4);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      std::vector<std::size_t> widths{1 + rng.below(4)};
      const std::size_t hidden = rng.below(3);
      for (std::size_t h = 0; h < hidden; ++h) widths.push_back(1 + rng.below(10));
      widths.push_back(1 + rng.below(4));
      auto net = num::Mlp::initialized(widths, rng, false);
      for (double& p : net.parameters()) p += 0.3 * rng.normal();
      std::vector<double> x(widths.front()), w(widths.back());
      for (double& v : x) v = rng.normal();
      for (double& v : w) v = rng.normal();
      worst = std::max(worst, mlp_gradient_error(net, x, w));
    }
    CHECK(worst < 1e-5);
  }

  TEST_CASE("batched backward equals the sum of per-row backward passes") {
    num::Rng rng(5);
    const auto net = num::Mlp::initialized({3, 16, 16, 4}, rng, false);
    const Matrix x = random_matrix(rng, 40, 3);
    const Matrix dy = random_matrix(rng, 40, 4);
    num::MlpTape tape;
    net.forward_batch(x, &tape);
    std::vector<double> grad(net.parameter_count(), 0.0);
    Matrix dx;
    net.backward_batch(tape, dy, grad, &dx);
    std::vector<double> sum(net.parameter_count(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto g = num::mlp_backward(net, x.row(r), dy.row(r));
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += g.parameters[i];
      for (std::size_t c = 0; c < 3; ++c) CHECK(dx(r, c) == doctest::Approx(g.input[c]).epsilon(1e-12));
    }
    CHECK(max_rel_diff(grad, sum) < 1e-12);
  }
}

TEST_SUITE("numcore.adam") {
  TEST_CASE("zero gradients leave parameters unchanged") {
    num::AdamState state(3, {});
    std::vector<double> p{1.0, -2.0, 3.0};
    const std::vector<double> g(3, 0.0);
    for (int i = 0; i < 100; ++i) num::adam_step(state, p, g);
    CHECK(p == std::vector<double>{1.0, -2.0, 3.0});
    CHECK(state.step_count() == 100);
  }

  TEST_CASE("first step moves each parameter by the learning rate") {
    num::AdamState state(2, {});
    std::vector<double> p{0.0, 0.0};
    num::adam_step(state, p, std::vector<double>{3.0, -0.5});
    // Bias correction makes m_hat = g and v_hat = g^2.
    CHECK(p[0] == doctest::Approx(-1e-3 * 3.0 / (3.0 + 1e-8)).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
    CHECK(state.step_count() == 1);
  }

  TEST_CASE("constant gradient step size approaches the learning rate") {
    num::AdamState state(2, {});
    std::vector<double> p{0.0, 0.0};
    const std::vector<double> g{0.37, -4.2};
    std::vector<double> before;
    for (int i = 0; i < 10000; ++i) {
      before = p;
      num::adam_step(state, p, g);
    }
    CHECK(std::fabs(p[0] - before[0]) == doctest::Approx(1e-3).epsilon(0.01));
    CHECK(std::fabs(p[1] - before[1]) == doctest::Approx(1e-3).epsilon(0.01));
    CHECK(state.step_count() == 10000);
  }

  TEST_CASE("non-finite gradient names its block and changes nothing") {
    num::AdamState state(4, {});
    std::vector<double> p{1.0, 2.0, 3.0, 4.0};
    const std::vector<num::ParamBlock> blocks{{"first", 0, 2}, {"second", 2, 2}};
    std::vector<double> g{0.1, 0.1, std::numeric_limits<double>::quiet_NaN(), 0.1};
    try {
      num::adam_step(state, p, g, blocks);
      FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
      CHECK(std::string(e.what()).find("second") != std::string::npos);
    }
    CHECK(p == std::vector<double>{1.0, 2.0, 3.0, 4.0});
    CHECK(state.step_count() == 0);
    g[2] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(num::adam_step(state, p, g), DivergenceError);
  }

  TEST_CASE("shape mismatch") {
    num::AdamState state(2, {});
    std::vector<double> p{1.0, 2.0};
    CHECK_THROWS_AS(num::adam_step(state, p, std::vector<double>{1.0}), InputError);
  }
}
