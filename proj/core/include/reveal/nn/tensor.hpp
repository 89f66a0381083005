#pragma once

#include <cstddef>
#include <vector>

namespace reveal::nn {

// Dense row-major matrix of 64-bit reals. Vectors are 1xN rows.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
  Tensor(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {}

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor row(std::vector<double> d) {
    const int n = static_cast<int>(d.size());
    return Tensor(1, n, std::move(d));
  }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const;
};

namespace detail {
// C += A(r x k) * B(k x c)
void gemm_nn(const double* a, const double* b, double* c, int r, int k, int n);
// C += A(r x k) * B(c x k)^T
void gemm_nt(const double* a, const double* b, double* c, int r, int k, int n);
// C += A(r x k)^T * B(r x c)
void gemm_tn(const double* a, const double* b, double* c, int r, int k, int n);
}  // namespace detail

}  // namespace reveal::nn
