#pragma once

#include <span>

#include "flowbn/numcore/matrix.hpp"

// Dense kernels behind the batched MLP. Each kernel exists twice: a plain
// serial reference kept for testing, and an OpenMP version that parallelizes
// over independent output rows. The parallel versions never split a single
// reduction across threads, so their results do not depend on thread count.
//
// Weight layout everywhere: `w` is (in x out) row-major, so y = x * w + b.
namespace flowbn::num::kernels {

namespace serial {

// y(n x out) = x(n x in) * w(in x out) + b(out)
void affine_rows(DenseView x, DenseView w, std::span<const double> b, DenseMutView y);
// dx(n x in) = dy(n x out) * w^T
void input_grad(DenseView dy, DenseView w, DenseMutView dx);
// dw(in x out) += x^T * dy ; db(out) += column sums of dy
void weight_grad(DenseView x, DenseView dy, DenseMutView dw, std::span<double> db);
// a = tanh(a) elementwise
void tanh_inplace(DenseMutView a);
// dz = da * (1 - a^2) elementwise
void tanh_backward(DenseView a, DenseView da, DenseMutView dz);

}  // namespace serial

namespace parallel {

void affine_rows(DenseView x, DenseView w, std::span<const double> b, DenseMutView y);
void input_grad(DenseView dy, DenseView w, DenseMutView dx);
void weight_grad(DenseView x, DenseView dy, DenseMutView dw, std::span<double> db);
void tanh_inplace(DenseMutView a);
void tanh_backward(DenseView a, DenseView da, DenseMutView dz);

}  // namespace parallel

// Number of OpenMP threads used by the parallel kernels (1 without OpenMP).
int thread_count();
void set_thread_count(int n);

}  // namespace flowbn::num::kernels
