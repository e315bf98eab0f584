#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace tagseq {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

// Dense row-major array of 64-bit floats, rank 1 or 2. Rank-1 tensors act as
// row vectors where a matrix is expected; gradients keep the original shape.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(Shape s, double fill);

  static Tensor zeros(Shape s) { return Tensor(std::move(s), 0.0); }
  static Tensor full(Shape s, double v) { return Tensor(std::move(s), v); }
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> values);          // shape [n]
  static Tensor matrix(int rows, int cols, std::vector<double> values);

  int rank() const { return static_cast<int>(shape.size()); }
  long long numel() const;
  bool defined() const { return !shape.empty(); }

  // 2-D view: rank-1 [n] reads as [1 x n].
  int rows() const { return rank() <= 1 ? 1 : shape[0]; }
  int cols() const { return rank() == 0 ? 0 : shape.back(); }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  std::span<double> row_span(int r) { return {data.data() + static_cast<size_t>(r) * cols(), static_cast<size_t>(cols())}; }
  std::span<const double> row_span(int r) const { return {data.data() + static_cast<size_t>(r) * cols(), static_cast<size_t>(cols())}; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
};

namespace kernels {

// C = op(A) * op(B) with optional transposes. Result is always rank 2.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);

Tensor transpose(const Tensor& a);

// Numerically stable row-wise softmax. Entries at or below -1e29 are treated
// as masked and produce exactly zero weight; a row with every entry masked
// is a contract error upstream, here it yields uniform weights over nothing
// and is guarded by the caller.
void softmax_row(std::span<double> row);
void log_softmax_row(std::span<double> row);

// y = gain .* (x - mean) / sqrt(var + eps) + bias over one row.
void layer_norm_row(std::span<const double> x, std::span<const double> gain,
                    std::span<const double> bias, double eps, std::span<double> out);

inline double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace kernels

}  // namespace tagseq
