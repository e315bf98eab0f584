#include "tagseq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tagseq/errors.hpp"

namespace tagseq {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)) {
  long long n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("tensor dimension must be positive, got " + shape_str(shape));
    n *= d;
  }
  data.assign(static_cast<size_t>(n), fill);
}

Tensor Tensor::scalar(double v) {
  Tensor t({1}, v);
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  Tensor t;
  t.shape = {static_cast<int>(values.size())};
  t.data = std::move(values);
  return t;
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> values) {
  if (static_cast<long long>(values.size()) != static_cast<long long>(rows) * cols)
    throw ShapeError("matrix literal size mismatch for [" + std::to_string(rows) + "x" + std::to_string(cols) + "]");
  Tensor t;
  t.shape = {rows, cols};
  t.data = std::move(values);
  return t;
}

long long Tensor::numel() const {
  long long n = 1;
  for (int d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

namespace kernels {

namespace {

void check_inner(int ak, int bk, const Tensor& a, const Tensor& b) {
  if (ak != bk)
    throw ShapeError("matmul inner dimensions differ: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  const int ar = a.rows(), ac = a.cols();
  const int br = b.rows(), bc = b.cols();
  const int m = trans_a ? ac : ar;
  const int k = trans_a ? ar : ac;
  const int n = trans_b ? br : bc;
  check_inner(k, trans_b ? bc : br, a, b);

  Tensor c({m, n}, 0.0);
  const double* __restrict__ ap = a.data.data();
  const double* __restrict__ bp = b.data.data();
  double* __restrict__ cp = c.data.data();

  if (!trans_a && !trans_b) {
    for (int i = 0; i < m; ++i) {
      const double* arow = ap + static_cast<size_t>(i) * k;
      double* crow = cp + static_cast<size_t>(i) * n;
      for (int p = 0; p < k; ++p) {
        const double av = arow[p];
        const double* brow = bp + static_cast<size_t>(p) * n;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (!trans_a && trans_b) {
    for (int i = 0; i < m; ++i) {
      const double* arow = ap + static_cast<size_t>(i) * k;
      double* crow = cp + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        const double* brow = bp + static_cast<size_t>(j) * k;
        double acc = 0.0;
        for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
        crow[j] = acc;
      }
    }
  } else if (trans_a && !trans_b) {
    for (int p = 0; p < k; ++p) {
      const double* arow = ap + static_cast<size_t>(p) * m;
      const double* brow = bp + static_cast<size_t>(p) * n;
      for (int i = 0; i < m; ++i) {
        const double av = arow[i];
        double* crow = cp + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else {
    Tensor bt = transpose(b);
    return matmul(a, bt, true, false);
  }
  return c;
}

Tensor transpose(const Tensor& a) {
  const int r = a.rows(), c = a.cols();
  Tensor t({c, r}, 0.0);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

void softmax_row(std::span<double> row) {
  double mx = row[0];
  for (double v : row) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : row) v /= sum;
}

void log_softmax_row(std::span<double> row) {
  double mx = row[0];
  for (double v : row) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (double& v : row) v -= lse;
}

void layer_norm_row(std::span<const double> x, std::span<const double> gain,
                    std::span<const double> bias, double eps, std::span<double> out) {
  const size_t d = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d);
  const double inv = 1.0 / std::sqrt(var + eps);
  for (size_t i = 0; i < d; ++i) out[i] = gain[i] * (x[i] - mean) * inv + bias[i];
}

}  // namespace kernels

}  // namespace tagseq
