#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "flowbn/numcore/kernels.hpp"

namespace flowbn::num::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

// tanh through a range-reduced exp polynomial so the loop vectorizes.
// Agrees with std::tanh to within two ulp over the whole real line.
inline double tanh_vec(double x) {
  const double ax = std::fabs(x);
  const double a = ax < 19.5 ? ax : 19.5;
  // e = exp(-2a) = 2^k * exp(r), |r| <= ln(2)/2
  const double y = -2.0 * a;
  constexpr double kShifter = 0x1.8p52;
  const double shifted = y * 1.4426950408889634 + kShifter;
  const double k = shifted - kShifter;
  const double r = (y - k * 6.93147180369123816490e-01) - k * 1.90821492927058770002e-10;
  // exp(r) - 1 = r * q(r), kept separate from the leading 1 so that small
  // arguments keep full relative precision.
  double q = 1.0 / 6227020800.0;
  q = q * r + 1.0 / 479001600.0;
  q = q * r + 1.0 / 39916800.0;
  q = q * r + 1.0 / 3628800.0;
  q = q * r + 1.0 / 362880.0;
  q = q * r + 1.0 / 40320.0;
  q = q * r + 1.0 / 5040.0;
  q = q * r + 1.0 / 720.0;
  q = q * r + 1.0 / 120.0;
  q = q * r + 1.0 / 24.0;
  q = q * r + 1.0 / 6.0;
  q = q * r + 0.5;
  q = q * r + 1.0;
  // The low mantissa bits of `shifted` hold k; move k + 1023 into the exponent.
  const std::uint64_t scale_bits = (std::bit_cast<std::uint64_t>(shifted) + 1023) << 52;
  const double scale = std::bit_cast<double>(scale_bits);
  // em1 = exp(-2a) - 1; tanh(a) = -em1 / (2 + em1)
  const double em1 = scale * (r * q) + (scale - 1.0);
  const double t = -em1 / (2.0 + em1);
  return x < 0.0 ? -t : t;
}

}  // namespace

int thread_count() { return omp_get_max_threads(); }

void set_thread_count(int n) { omp_set_num_threads(n < 1 ? 1 : n); }

namespace parallel {

namespace {

// Output columns handled per register block.
constexpr std::size_t kBlock = 32;

// Rows handled together; each weight load feeds this many accumulator sets.
constexpr std::size_t kRows = 4;

// y[i, o0:o0+kBlock] = init + sum_k x[i, k] * w[k, o0:o0+kBlock] for kRows
// rows at once.
inline void affine_block(const double* const* xs, DenseView w, std::size_t o0, const double* init, double* const* ys) {
  double acc[kRows][kBlock];
  for (std::size_t r = 0; r < kRows; ++r) {
#pragma omp simd
    for (std::size_t j = 0; j < kBlock; ++j) acc[r][j] = init ? init[o0 + j] : 0.0;
  }
  for (std::size_t k = 0; k < w.rows; ++k) {
    const double* wk = w.row(k) + o0;
    for (std::size_t r = 0; r < kRows; ++r) {
      const double a = xs[r][k];
#pragma omp simd
      for (std::size_t j = 0; j < kBlock; ++j) acc[r][j] += a * wk[j];
    }
  }
  for (std::size_t r = 0; r < kRows; ++r) {
#pragma omp simd
    for (std::size_t j = 0; j < kBlock; ++j) ys[r][o0 + j] = acc[r][j];
  }
}

// Columns [o0, out) as dot products against a transposed copy of those
// columns, so the accumulators stay in registers.
void affine_narrow(DenseView x, DenseView w, std::size_t o0, const double* init, DenseMutView y) {
  const std::size_t in = w.rows;
  const std::size_t m = w.cols - o0;
  std::vector<double> wt(m * in);
  for (std::size_t k = 0; k < in; ++k) {
    for (std::size_t j = 0; j < m; ++j) wt[j * in + k] = w(k, o0 + j);
  }
  const auto n = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static) if (x.rows * in * m > kParallelWork)
  for (std::int64_t is = 0; is < n; ++is) {
    const auto i = static_cast<std::size_t>(is);
    const double* xi = x.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double* wj = wt.data() + j * in;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t k = 0; k < in; ++k) acc += xi[k] * wj[k];
      y(i, o0 + j) = (init ? init[o0 + j] : 0.0) + acc;
    }
  }
}

// y = x * w (+ b when non-null). Full column blocks run over row groups in
// parallel; leftover columns go through affine_narrow.
void affine_impl(DenseView x, DenseView w, const double* b, DenseMutView y) {
  const std::size_t n = x.rows;
  const std::size_t out = w.cols;
  const std::size_t blocked = out - out % kBlock;
  const auto groups = static_cast<std::int64_t>((n + kRows - 1) / kRows);
  if (blocked > 0) {
#pragma omp parallel for schedule(static) if (n * x.cols * blocked > kParallelWork)
    for (std::int64_t g = 0; g < groups; ++g) {
      // A short last group repeats its final row; the duplicate writes agree.
      const double* xs[kRows];
      double* ys[kRows];
      for (std::size_t r = 0; r < kRows; ++r) {
        const std::size_t i = std::min(kRows * static_cast<std::size_t>(g) + r, n - 1);
        xs[r] = x.row(i);
        ys[r] = y.row(i);
      }
      for (std::size_t o0 = 0; o0 < blocked; o0 += kBlock) affine_block(xs, w, o0, b, ys);
    }
  }
  if (blocked < out) affine_narrow(x, w, blocked, b, y);
}

}  // namespace

void affine_rows(DenseView x, DenseView w, std::span<const double> b, DenseMutView y) {
  affine_impl(x, w, b.data(), y);
}

void input_grad(DenseView dy, DenseView w, DenseMutView dx) {
  // dx = dy * w^T, evaluated as a plain product against the transpose.
  Matrix wt(w.cols, w.rows);
  for (std::size_t k = 0; k < w.rows; ++k) {
    for (std::size_t o = 0; o < w.cols; ++o) wt(o, k) = w(k, o);
  }
  affine_impl(dy, wt.view(), nullptr, dx);
}

void weight_grad(DenseView x, DenseView dy, DenseMutView dw, std::span<double> db) {
  const std::size_t rows = x.rows;
  const std::size_t in = x.cols;
  const std::size_t out = dy.cols;
  const std::size_t blocked = out - out % kBlock;
  // Groups of kRows input rows of dw share each load of dy.
  const auto groups = static_cast<std::int64_t>((in + kRows - 1) / kRows);
#pragma omp parallel for schedule(static) if (rows * in * blocked > kParallelWork)
  for (std::int64_t g = 0; g < groups; ++g) {
    std::size_t ks[kRows];
    for (std::size_t r = 0; r < kRows; ++r) ks[r] = std::min(kRows * static_cast<std::size_t>(g) + r, in - 1);
    const std::size_t live = std::min(kRows, in - kRows * static_cast<std::size_t>(g));
    for (std::size_t o0 = 0; o0 < blocked; o0 += kBlock) {
      double acc[kRows][kBlock] = {};
      for (std::size_t i = 0; i < rows; ++i) {
        const double* xi = x.row(i);
        const double* dyi = dy.row(i) + o0;
        for (std::size_t r = 0; r < kRows; ++r) {
          const double a = xi[ks[r]];
#pragma omp simd
          for (std::size_t j = 0; j < kBlock; ++j) acc[r][j] += a * dyi[j];
        }
      }
      // Repeated rows in a short last group are added once.
      for (std::size_t r = 0; r < live; ++r) {
        double* dwk = dw.row(ks[r]) + o0;
#pragma omp simd
        for (std::size_t j = 0; j < kBlock; ++j) dwk[j] += acc[r][j];
      }
    }
  }
  // Leftover columns: accumulate row-wise into a transposed buffer so the
  // inner loop runs over contiguous inputs.
  const std::size_t m = out - blocked;
  if (m > 0) {
    std::vector<double> acc(m * in, 0.0);
    const auto m_signed = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (rows * in * m > kParallelWork)
    for (std::int64_t js = 0; js < m_signed; ++js) {
      const auto j = static_cast<std::size_t>(js);
      double* aj = acc.data() + j * in;
      for (std::size_t i = 0; i < rows; ++i) {
        const double g = dy(i, blocked + j);
        const double* xi = x.row(i);
#pragma omp simd
        for (std::size_t k = 0; k < in; ++k) aj[k] += g * xi[k];
      }
    }
    for (std::size_t k = 0; k < in; ++k) {
      for (std::size_t j = 0; j < m; ++j) dw(k, blocked + j) += acc[j * in + k];
    }
  }
  for (std::size_t i = 0; i < rows; ++i) {
    const double* dyi = dy.row(i);
#pragma omp simd
    for (std::size_t o = 0; o < out; ++o) db[o] += dyi[o];
  }
}

void tanh_inplace(DenseMutView a) {
  const auto total = static_cast<std::int64_t>(a.rows * a.cols);
#pragma omp parallel for simd schedule(static) if (a.rows * a.cols > kParallelWork / 8)
  for (std::int64_t i = 0; i < total; ++i) a.data[i] = tanh_vec(a.data[i]);
}

void tanh_backward(DenseView a, DenseView da, DenseMutView dz) {
  const auto total = static_cast<std::int64_t>(a.rows * a.cols);
#pragma omp parallel for simd schedule(static) if (a.rows * a.cols > kParallelWork)
  for (std::int64_t i = 0; i < total; ++i) {
    dz.data[i] = da.data[i] * (1.0 - a.data[i] * a.data[i]);
  }
}

}  // namespace parallel
}  // namespace flowbn::num::kernels
