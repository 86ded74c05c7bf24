#include <cmath>

#include "flowbn/numcore/kernels.hpp"

namespace flowbn::num::kernels::serial {

void affine_rows(DenseView x, DenseView w, std::span<const double> b, DenseMutView y) {
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t o = 0; o < w.cols; ++o) {
      double acc = b[o];
      for (std::size_t k = 0; k < x.cols; ++k) acc += x(i, k) * w(k, o);
      y(i, o) = acc;
    }
  }
}

void input_grad(DenseView dy, DenseView w, DenseMutView dx) {
  for (std::size_t i = 0; i < dy.rows; ++i) {
    for (std::size_t k = 0; k < w.rows; ++k) {
      double acc = 0.0;
      for (std::size_t o = 0; o < w.cols; ++o) acc += dy(i, o) * w(k, o);
      dx(i, k) = acc;
    }
  }
}

void weight_grad(DenseView x, DenseView dy, DenseMutView dw, std::span<double> db) {
  for (std::size_t k = 0; k < x.cols; ++k) {
    for (std::size_t o = 0; o < dy.cols; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.rows; ++i) acc += x(i, k) * dy(i, o);
      dw(k, o) += acc;
    }
  }
  for (std::size_t o = 0; o < dy.cols; ++o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dy.rows; ++i) acc += dy(i, o);
    db[o] += acc;
  }
}

void tanh_inplace(DenseMutView a) {
  for (std::size_t i = 0; i < a.rows * a.cols; ++i) a.data[i] = std::tanh(a.data[i]);
}

void tanh_backward(DenseView a, DenseView da, DenseMutView dz) {
  for (std::size_t i = 0; i < a.rows * a.cols; ++i) {
    dz.data[i] = da.data[i] * (1.0 - a.data[i] * a.data[i]);
  }
}

}  // namespace flowbn::num::kernels::serial
