#include "refnav/nn/layers.hpp"

namespace refnav::nn {

Linear make_linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, bool bias) {
  Linear l;
  l.W = &store.add(name + ".W", out, in);
  if (bias) l.b = &store.add(name + ".b", out, 1);
  l.in = in;
  l.out = out;
  return l;
}

Var apply(const Linear& l, Var x) {
  Tape& t = *x.tape;
  Var y = matmul(t.param(*l.W), x);
  return l.b ? add(y, t.param(*l.b)) : y;
}

MlpParams make_mlp2(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden, std::size_t out) {
  return {make_linear(store, name + ".l1", in, hidden), make_linear(store, name + ".l2", hidden, out)};
}

Var mlp2(const MlpParams& p, Var x) { return apply(p.l2, relu(apply(p.l1, x))); }

LstmParams make_lstm(ParamStore& store, const std::string& name, std::size_t input, std::size_t hidden) {
  LstmParams p;
  p.W = &store.add(name + ".W", 4 * hidden, input + hidden);
  p.b = &store.add(name + ".b", 4 * hidden, 1);
  p.input = input;
  p.hidden = hidden;
  return p;
}

LstmState lstm_zero_state(Tape& t, std::size_t hidden) {
  return {t.constant(Tensor2(hidden, 1)), t.constant(Tensor2(hidden, 1))};
}

LstmState lstm_step(const LstmParams& p, Var x, LstmState s) {
  if (x.rows() != p.input || s.h.rows() != p.hidden) throw ShapeError("lstm_step input/state size mismatch");
  Tape& t = *x.tape;
  const std::size_t H = p.hidden;
  Var z = add(matmul(t.param(*p.W), concat({x, s.h})), t.param(*p.b));
  Var i = sigmoid(slice_rows(z, 0, H));
  Var f = sigmoid(slice_rows(z, H, H));
  Var g = tanh(slice_rows(z, 2 * H, H));
  Var o = sigmoid(slice_rows(z, 3 * H, H));
  Var c = add(mul(f, s.c), mul(i, g));
  Var h = mul(o, tanh(c));
  return {h, c};
}

BiLstmOutput bilstm_encode(const LstmParams& fwd, const LstmParams& bwd, const std::vector<Var>& seq) {
  if (seq.empty()) throw ShapeError("bilstm_encode of an empty sequence");
  Tape& t = *seq[0].tape;
  const std::size_t L = seq.size();
  std::vector<Var> f(L), b(L);
  LstmState s = lstm_zero_state(t, fwd.hidden);
  for (std::size_t j = 0; j < L; ++j) f[j] = (s = lstm_step(fwd, seq[j], s)).h;
  s = lstm_zero_state(t, bwd.hidden);
  for (std::size_t j = L; j-- > 0;) b[j] = (s = lstm_step(bwd, seq[j], s)).h;
  BiLstmOutput out;
  for (std::size_t j = 0; j < L; ++j) out.states.push_back(concat({f[j], b[j]}));
  out.h0 = b[0];
  out.hL = f[L - 1];
  return out;
}

Embedding make_embedding(ParamStore& store, const std::string& name, std::size_t count, std::size_t dim) {
  return {&store.add(name + ".E", count, dim), dim};
}

Var lookup(Tape& t, const Embedding& e, std::size_t index) { return row(t.param(*e.table), index); }

}  // namespace refnav::nn
