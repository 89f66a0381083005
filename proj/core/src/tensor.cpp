#include "reveal/nn/tensor.hpp"

#include <cmath>

namespace reveal::nn {

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace detail {

void gemm_nn(const double* a, const double* b, double* c, int r, int k, int n) {
  for (int i = 0; i < r; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<std::size_t>(l) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, int r, int k, int n) {
  for (int i = 0; i < r; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int l = 0; l < k; ++l) acc += arow[l] * brow[l];
      crow[j] += acc;
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, int r, int k, int n) {
  for (int i = 0; i < r; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    const double* brow = b + static_cast<std::size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      double* crow = c + static_cast<std::size_t>(l) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace detail

}  // namespace reveal::nn
