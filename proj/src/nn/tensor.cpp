#include "refnav/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace refnav::nn {

Tensor2::Tensor2(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) throw ShapeError("tensor data size " + std::to_string(data.size()) + " != " + shape_string());
}

Tensor2 Tensor2::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor2(n, 1, std::move(values));
}

std::string Tensor2::shape_string() const { return std::to_string(rows) + "x" + std::to_string(cols); }

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols != b.rows) throw ShapeError("matmul " + a.shape_string() + " * " + b.shape_string());
  Tensor2 out(a.rows, b.cols);
  if (b.cols == 1) {
    for (std::size_t i = 0; i < a.rows; ++i) {
      const double* arow = &a.data[i * a.cols];
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * b.data[k];
      out.data[i] = acc;
    }
    return out;
  }
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    double* orow = &out.data[i * b.cols];
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double av = arow[k];
      const double* brow = &b.data[k * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

void matmul_acc_nt(Tensor2& out, const Tensor2& g, const Tensor2& b) {
  if (g.cols != b.cols || out.rows != g.rows || out.cols != b.rows)
    throw ShapeError("matmul_acc_nt " + g.shape_string() + " * " + b.shape_string() + "^T");
  for (std::size_t i = 0; i < g.rows; ++i) {
    const double* grow = &g.data[i * g.cols];
    double* orow = &out.data[i * out.cols];
    for (std::size_t k = 0; k < b.rows; ++k) {
      const double* brow = &b.data[k * b.cols];
      double acc = 0.0;
      for (std::size_t j = 0; j < g.cols; ++j) acc += grow[j] * brow[j];
      orow[k] += acc;
    }
  }
}

void matmul_acc_tn(Tensor2& out, const Tensor2& a, const Tensor2& g) {
  if (a.rows != g.rows || out.rows != a.cols || out.cols != g.cols)
    throw ShapeError("matmul_acc_tn " + a.shape_string() + "^T * " + g.shape_string());
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    const double* grow = &g.data[i * g.cols];
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double av = arow[k];
      if (av == 0.0) continue;
      double* orow = &out.data[k * out.cols];
      for (std::size_t j = 0; j < g.cols; ++j) orow[j] += av * grow[j];
    }
  }
}

Tensor2 transpose(const Tensor2& a) {
  Tensor2 out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

Tensor2 softmax(const Tensor2& v) {
  Tensor2 out = v;
  out.data = softmax(v.data);
  return out;
}

std::vector<double> softmax(const std::vector<double>& v) {
  if (v.empty()) throw ShapeError("softmax of an empty vector");
  const double m = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) z += out[i] = std::exp(v[i] - m);
  for (double& x : out) x /= z;
  return out;
}

Tensor2 positional_encoding(std::size_t length, std::size_t dim) {
  Tensor2 p(length, dim);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double i2 = static_cast<double>(j - j % 2);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, i2 / static_cast<double>(dim));
      p(pos, j) = j % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return p;
}

bool all_finite(const Tensor2& t) {
  return std::all_of(t.data.begin(), t.data.end(), [](double x) { return std::isfinite(x); });
}

double squared_norm(const Tensor2& t) {
  double s = 0.0;
  for (double x : t.data) s += x * x;
  return s;
}

}  // namespace refnav::nn
