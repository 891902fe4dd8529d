#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace refnav::nn {

/// Dense row-major matrix of doubles. Column vectors are n x 1.
struct Tensor2 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Tensor2(std::size_t r, std::size_t c, std::vector<double> values);

  static Tensor2 column(std::vector<double> values);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_string() const;

  friend bool operator==(const Tensor2&, const Tensor2&) = default;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Tensor2 matmul(const Tensor2& a, const Tensor2& b);
Tensor2 transpose(const Tensor2& a);
// Accumulating products for backward passes: out += g * b^T and out += a^T * g.
void matmul_acc_nt(Tensor2& out, const Tensor2& g, const Tensor2& b);
void matmul_acc_tn(Tensor2& out, const Tensor2& a, const Tensor2& g);
/// Numerically stable softmax of a column vector.
Tensor2 softmax(const Tensor2& v);
std::vector<double> softmax(const std::vector<double>& v);
/// Sinusoidal table P (L x d): P[pos,2i] = sin(pos/10000^(2i/d)), P[pos,2i+1] = cos(same).
Tensor2 positional_encoding(std::size_t length, std::size_t dim);
bool all_finite(const Tensor2& t);
double squared_norm(const Tensor2& t);

}  // namespace refnav::nn
