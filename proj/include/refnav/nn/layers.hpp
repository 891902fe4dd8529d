#pragma once

#include <string>
#include <utility>
#include <vector>

#include "refnav/nn/params.hpp"
#include "refnav/nn/tape.hpp"

namespace refnav::nn {

/// y = W x + b.
struct Linear {
  Param* W = nullptr;
  Param* b = nullptr;
  std::size_t in = 0;
  std::size_t out = 0;
};
Linear make_linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, bool bias = true);
Var apply(const Linear& l, Var x);

/// Two-layer perceptron: linear, ReLU, linear.
struct MlpParams {
  Linear l1;
  Linear l2;
};
MlpParams make_mlp2(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden, std::size_t out);
Var mlp2(const MlpParams& p, Var x);

/// Standard LSTM cell. W is 4H x (I + H) acting on [x; h], b is 4H x 1; the
/// gate blocks are ordered input, forget, candidate, output.
struct LstmParams {
  Param* W = nullptr;
  Param* b = nullptr;
  std::size_t input = 0;
  std::size_t hidden = 0;
};
LstmParams make_lstm(ParamStore& store, const std::string& name, std::size_t input, std::size_t hidden);

struct LstmState {
  Var h;
  Var c;
};
LstmState lstm_zero_state(Tape& t, std::size_t hidden);
LstmState lstm_step(const LstmParams& p, Var x, LstmState s);

struct BiLstmOutput {
  std::vector<Var> states;  // per token, [forward; backward], 2H x 1
  Var h0;                   // backward direction after reading the whole sequence (sits at token 0)
  Var hL;                   // forward direction after reading the whole sequence (sits at token L-1)
  Var ends() const { return concat({h0, hL}); }
};
BiLstmOutput bilstm_encode(const LstmParams& fwd, const LstmParams& bwd, const std::vector<Var>& seq);

/// Rows of an embedding table looked up as column vectors.
struct Embedding {
  Param* table = nullptr;
  std::size_t dim = 0;
};
Embedding make_embedding(ParamStore& store, const std::string& name, std::size_t count, std::size_t dim);
Var lookup(Tape& t, const Embedding& e, std::size_t index);

}  // namespace refnav::nn
