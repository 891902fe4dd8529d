#include "refnav/nn/tape.hpp"

#include <algorithm>
#include <cmath>

namespace refnav::nn {

namespace {

Tape& tape_of(Var v) {
  if (!v.tape) throw std::invalid_argument("op on an unbound Var");
  return *v.tape;
}

void require_same(const Tensor2& a, const Tensor2& b, const char* op) {
  if (!a.same_shape(b)) throw ShapeError(std::string(op) + " " + a.shape_string() + " vs " + b.shape_string());
}

void add_into(Tensor2& dst, const Tensor2& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <class F>
Var unary(Var a, F f, std::function<double(double x, double y)> dydx) {
  Tape& t = tape_of(a);
  Tensor2 out = a.value();
  for (double& x : out.data) x = f(x);
  const int ia = a.id;
  return t.record(std::move(out), [ia, dydx](Tape& t, int self) {
    const Tensor2& x = t.value(ia);
    const Tensor2& y = t.value(self);
    const Tensor2& g = t.grad(self);
    Tensor2& ga = t.grad(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * dydx(x[i], y[i]);
  });
}

}  // namespace

const Tensor2& Var::value() const { return tape->value(id); }

double Var::item() const {
  const Tensor2& v = value();
  if (v.size() != 1) throw ShapeError("item() on a " + v.shape_string() + " node");
  return v[0];
}

Var Tape::constant(Tensor2 value) { return record(std::move(value), nullptr); }

Var Tape::param(Param& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  Var v = record(p.value, nullptr);
  nodes_[v.id].param = &p;
  param_nodes_[&p] = v.id;
  return v;
}

Var Tape::record(Tensor2 value, Backward backward) {
  nodes_.push_back({std::move(value), {}, std::move(backward), nullptr});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Tensor2& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor2(n.value.rows, n.value.cols);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward on a Var from another tape");
  if (value(loss.id).size() != 1) throw ShapeError("backward needs a scalar loss");
  grad(loss.id)[0] += 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) add_into(n.param->grad, n.grad);
  }
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  const int ia = a.id, ib = b.id;
  return t.record(matmul(a.value(), b.value()), [ia, ib](Tape& t, int self) {
    const Tensor2& g = t.grad(self);
    matmul_acc_nt(t.grad(ia), g, t.value(ib));
    matmul_acc_tn(t.grad(ib), t.value(ia), g);
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id;
  return t.record(transpose(a.value()), [ia](Tape& t, int self) { add_into(t.grad(ia), transpose(t.grad(self))); });
}

Var add(Var a, Var b) {
  require_same(a.value(), b.value(), "add");
  Tape& t = tape_of(a);
  Tensor2 out = a.value();
  add_into(out, b.value());
  const int ia = a.id, ib = b.id;
  return t.record(std::move(out), [ia, ib](Tape& t, int self) {
    const Tensor2& g = t.grad(self);
    add_into(t.grad(ia), g);
    add_into(t.grad(ib), g);
  });
}

Var sub(Var a, Var b) {
  require_same(a.value(), b.value(), "sub");
  Tape& t = tape_of(a);
  Tensor2 out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const int ia = a.id, ib = b.id;
  return t.record(std::move(out), [ia, ib](Tape& t, int self) {
    const Tensor2& g = t.grad(self);
    add_into(t.grad(ia), g);
    Tensor2& gb = t.grad(ib);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  require_same(a.value(), b.value(), "mul");
  Tape& t = tape_of(a);
  Tensor2 out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const int ia = a.id, ib = b.id;
  return t.record(std::move(out), [ia, ib](Tape& t, int self) {
    const Tensor2& g = t.grad(self);
    const Tensor2& av = t.value(ia);
    const Tensor2& bv = t.value(ib);
    Tensor2& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    Tensor2& gb = t.grad(ib);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
  });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var sigmoid(Var a) {
  return unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  // NaN passes through so a poisoned loss is still caught
  return unary(
      a, [](double x) { return x > 0.0 || std::isnan(x) ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var softmax(Var v) {
  Tape& t = tape_of(v);
  const int iv = v.id;
  return t.record(softmax(v.value()), [iv](Tape& t, int self) {
    const Tensor2& y = t.value(self);
    const Tensor2& g = t.grad(self);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += g[i] * y[i];
    Tensor2& gv = t.grad(iv);
    for (std::size_t i = 0; i < y.size(); ++i) gv[i] += y[i] * (g[i] - s);
  });
}

Var log_softmax(Var v) {
  Tape& t = tape_of(v);
  const Tensor2& x = v.value();
  if (x.empty()) throw ShapeError("log_softmax of an empty vector");
  const double m = *std::max_element(x.data.begin(), x.data.end());
  double z = 0.0;
  for (double xi : x.data) z += std::exp(xi - m);
  const double lse = m + std::log(z);
  Tensor2 out = x;
  for (double& xi : out.data) xi -= lse;
  const int iv = v.id;
  return t.record(std::move(out), [iv](Tape& t, int self) {
    const Tensor2& y = t.value(self);
    const Tensor2& g = t.grad(self);
    double s = 0.0;
    for (double gi : g.data) s += gi;
    Tensor2& gv = t.grad(iv);
    for (std::size_t i = 0; i < y.size(); ++i) gv[i] += g[i] - std::exp(y[i]) * s;
  });
}

Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat of nothing");
  Tape& t = tape_of(parts[0]);
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (Var p : parts) {
    if (p.cols() != cols) throw ShapeError("concat column mismatch");
    rows += p.rows();
  }
  Tensor2 out(rows, cols);
  std::vector<int> ids;
  std::size_t off = 0;
  for (Var p : parts) {
    std::copy(p.value().data.begin(), p.value().data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += p.value().size();
    ids.push_back(p.id);
  }
  return t.record(std::move(out), [ids](Tape& t, int self) {
    const Tensor2& g = t.grad(self);
    std::size_t off = 0;
    for (int id : ids) {
      Tensor2& gp = t.grad(id);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[off + i];
      off += gp.size();
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t n) {
  if (begin + n > a.rows()) throw ShapeError("slice_rows out of range");
  Tape& t = tape_of(a);
  const std::size_t cols = a.cols();
  Tensor2 out(n, cols);
  std::copy_n(a.value().data.begin() + static_cast<std::ptrdiff_t>(begin * cols), n * cols, out.data.begin());
  const int ia = a.id;
  return t.record(std::move(out), [ia, begin, cols](Tape& t, int self) {
    const Tensor2& g = t.grad(self);
    Tensor2& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[begin * cols + i] += g[i];
  });
}

Var row(Var a, std::size_t i) {
  if (i >= a.rows()) throw ShapeError("row index out of range");
  Tape& t = tape_of(a);
  const std::size_t cols = a.cols();
  Tensor2 out(cols, 1);
  std::copy_n(a.value().data.begin() + static_cast<std::ptrdiff_t>(i * cols), cols, out.data.begin());
  const int ia = a.id;
  return t.record(std::move(out), [ia, i, cols](Tape& t, int self) {
    const Tensor2& g = t.grad(self);
    Tensor2& ga = t.grad(ia);
    for (std::size_t j = 0; j < cols; ++j) ga[i * cols + j] += g[j];
  });
}

Var stack_rows(std::span<const Var> cols) {
  if (cols.empty()) throw ShapeError("stack_rows of nothing");
  Tape& t = tape_of(cols[0]);
  const std::size_t n = cols[0].rows();
  Tensor2 out(cols.size(), n);
  std::vector<int> ids;
  for (std::size_t r = 0; r < cols.size(); ++r) {
    if (cols[r].cols() != 1 || cols[r].rows() != n) throw ShapeError("stack_rows needs equal column vectors");
    std::copy(cols[r].value().data.begin(), cols[r].value().data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r * n));
    ids.push_back(cols[r].id);
  }
  return t.record(std::move(out), [ids, n](Tape& t, int self) {
    const Tensor2& g = t.grad(self);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      Tensor2& gc = t.grad(ids[r]);
      for (std::size_t j = 0; j < n; ++j) gc[j] += g[r * n + j];
    }
  });
}

Var pick(Var v, std::size_t i) {
  if (i >= v.value().size()) throw ShapeError("pick index out of range");
  Tape& t = tape_of(v);
  const int iv = v.id;
  return t.record(Tensor2(1, 1, v.value()[i]), [iv, i](Tape& t, int self) { t.grad(iv)[i] += t.grad(self)[0]; });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double x : a.value().data) s += x;
  const int ia = a.id;
  return t.record(Tensor2(1, 1, s), [ia](Tape& t, int self) {
    const double g = t.grad(self)[0];
    for (double& x : t.grad(ia).data) x += g;
  });
}

Var dot(Var a, Var b) {
  require_same(a.value(), b.value(), "dot");
  Tape& t = tape_of(a);
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) s += a.value()[i] * b.value()[i];
  const int ia = a.id, ib = b.id;
  return t.record(Tensor2(1, 1, s), [ia, ib](Tape& t, int self) {
    const double g = t.grad(self)[0];
    const Tensor2& av = t.value(ia);
    const Tensor2& bv = t.value(ib);
    Tensor2& ga = t.grad(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * bv[i];
    Tensor2& gb = t.grad(ib);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * av[i];
  });
}

Var mean(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("mean of nothing");
  Tape& t = tape_of(parts[0]);
  Tensor2 out(parts[0].rows(), parts[0].cols());
  std::vector<int> ids;
  for (Var p : parts) {
    require_same(out, p.value(), "mean");
    add_into(out, p.value());
    ids.push_back(p.id);
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  for (double& x : out.data) x *= inv;
  return t.record(std::move(out), [ids, inv](Tape& t, int self) {
    const Tensor2& g = t.grad(self);
    for (int id : ids) {
      Tensor2& gp = t.grad(id);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += inv * g[i];
    }
  });
}

Var max_of(std::span<const Var> scalars) {
  if (scalars.empty()) throw ShapeError("max_of nothing");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scalars.size(); ++i) {
    if (scalars[i].item() > scalars[best].item()) best = i;
  }
  Tape& t = tape_of(scalars[0]);
  const int ib = scalars[best].id;
  return t.record(Tensor2(1, 1, scalars[best].item()), [ib](Tape& t, int self) { t.grad(ib)[0] += t.grad(self)[0]; });
}

}  // namespace refnav::nn
