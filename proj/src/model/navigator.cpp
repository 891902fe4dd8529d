#include <fstream>

#include "refnav/model/navpoint.hpp"

namespace refnav::model {

NavPointModel::NavPointModel(ModelConfig cfg, Vocabulary vocab) : cfg_(cfg), vocab_(std::move(vocab)) {
  const std::size_t V = vocab_.size();
  const std::size_t e = 2 * cfg_.d_pstate;
  if (cfg_.d_label % 2 != 0) throw std::invalid_argument("d_label must be even (two LSTM directions)");
  if (cfg_.grid < 1) throw std::invalid_argument("grid must be at least 1");

  word_emb_ = nn::make_embedding(store_, "nav.word", V, cfg_.d_word);
  instr_lstm_ = nn::make_lstm(store_, "nav.instr", cfg_.d_word, cfg_.d_text);
  W_x_ = &store_.add("nav.W_x", cfg_.d_text, cfg_.d_hidden);
  W_v_ = &store_.add("nav.W_v", cfg_.d_g, cfg_.d_hidden);
  g_ = nn::make_linear(store_, "nav.g", cfg_.d_fused(), cfg_.d_g);
  ctx_lstm_ = nn::make_lstm(store_, "nav.ctx", cfg_.d_text + cfg_.d_fused() + cfg_.d_action, cfg_.d_hidden);
  W_a_ = &store_.add("nav.W_a", cfg_.d_g, cfg_.d_hidden + cfg_.d_text);
  pm_ = nn::make_linear(store_, "nav.pm", cfg_.d_hidden + cfg_.d_text, 1);
  action_emb_ = nn::make_embedding(store_, "nav.action", 1 + kHeadingCount, cfg_.d_action);

  pword_emb_ = nn::make_embedding(store_, "ptr.word", V, cfg_.d_pword);
  p_fwd_ = nn::make_lstm(store_, "ptr.fwd", cfg_.d_pword, cfg_.d_pstate);
  p_bwd_ = nn::make_lstm(store_, "ptr.bwd", cfg_.d_pword, cfg_.d_pstate);
  module_attn_ = nn::make_linear(store_, "ptr.attn", e, 3, false);
  module_weight_ = nn::make_linear(store_, "ptr.modw", e, 3);
  W_subj_attn_ = &store_.add("ptr.subj_attn", cfg_.d_obj, e);
  loc_fc_ = nn::make_linear(store_, "ptr.loc", kLocationDim, cfg_.d_loc);
  const std::array<std::size_t, 3> visual_in{cfg_.d_obj, cfg_.d_loc, cfg_.d_obj + kBoxDim};
  const std::array<const char*, 3> names{"subj", "loc", "rel"};
  for (std::size_t m = 0; m < 3; ++m) {
    f_visual_[m] = nn::make_mlp2(store_, std::string("ptr.F_") + names[m] + ".v", visual_in[m], cfg_.d_f_hidden,
                                 cfg_.d_f_out);
    f_query_[m] = nn::make_mlp2(store_, std::string("ptr.F_") + names[m] + ".q", e, cfg_.d_f_hidden, cfg_.d_f_out);
  }

  label_emb_ = nn::make_embedding(store_, "int.word", V, cfg_.d_label_word);
  label_fwd_ = nn::make_lstm(store_, "int.fwd", cfg_.d_label_word, cfg_.d_label / 2);
  label_bwd_ = nn::make_lstm(store_, "int.bwd", cfg_.d_label_word, cfg_.d_label / 2);

  store_.init_xavier(cfg_.seed);
}

Var NavPointModel::encode_instruction(Tape& t, const std::vector<std::string>& tokens) const {
  if (tokens.empty()) throw std::invalid_argument("instruction must have at least one token");
  nn::LstmState s = nn::lstm_zero_state(t, cfg_.d_text);
  std::vector<Var> rows;
  for (const auto& w : tokens) {
    s = nn::lstm_step(instr_lstm_, nn::lookup(t, word_emb_, vocab_.index(w)), s);
    rows.push_back(s.h);
  }
  return nn::stack_rows(rows);
}

CoGrounding NavPointModel::co_ground(Var X, Var V, Var h_prev) const {
  Tape& t = *X.tape;
  if (X.cols() != cfg_.d_text || V.cols() != cfg_.d_fused() || h_prev.rows() != cfg_.d_hidden)
    throw nn::ShapeError("co_ground: X " + X.value().shape_string() + ", V " + V.value().shape_string() + ", h " +
                         h_prev.value().shape_string());
  CoGrounding out;
  Var pe = nn::add(X, t.constant(nn::positional_encoding(X.rows(), X.cols())));
  out.alpha = nn::softmax(nn::matmul(pe, nn::matmul(t.param(*W_x_), h_prev)));
  out.x_hat = nn::matmul(nn::transpose(X), out.alpha);
  std::vector<Var> g_rows;
  for (std::size_t k = 0; k < V.rows(); ++k) g_rows.push_back(nn::tanh(nn::apply(g_, nn::row(V, k))));
  out.g = nn::stack_rows(g_rows);
  out.beta = nn::softmax(nn::matmul(out.g, nn::matmul(t.param(*W_v_), h_prev)));
  out.v_hat = nn::matmul(nn::transpose(V), out.beta);
  return out;
}

nn::LstmState NavPointModel::context_update(nn::LstmState ctx, Var x_hat, Var v_hat, Var a_prev) const {
  return nn::lstm_step(ctx_lstm_, nn::concat({x_hat, v_hat, a_prev}), ctx);
}

Var NavPointModel::action_logits_from_g(Var h, Var x_hat, Var g) const {
  Tape& t = *h.tape;
  return nn::matmul(g, nn::matmul(t.param(*W_a_), nn::concat({h, x_hat})));
}

Var NavPointModel::action_logits(Var h, Var x_hat, Var V) const {
  std::vector<Var> g_rows;
  for (std::size_t k = 0; k < V.rows(); ++k) g_rows.push_back(nn::tanh(nn::apply(g_, nn::row(V, k))));
  return action_logits_from_g(h, x_hat, nn::stack_rows(g_rows));
}

Var NavPointModel::progress_monitor(Var h, Var x_hat) const {
  return nn::sigmoid(nn::apply(pm_, nn::concat({h, x_hat})));
}

Var NavPointModel::action_embedding(Tape& t, std::size_t index) const {
  if (index > static_cast<std::size_t>(kHeadingCount)) throw std::out_of_range("action embedding index");
  return nn::lookup(t, action_emb_, index);
}

nlohmann::ordered_json NavPointModel::to_json() const {
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["config"] = config_to_json(cfg_);
  j["vocab"] = vocab_.words();
  j["params"] = store_.to_json();
  return j;
}

NavPointModel NavPointModel::from_json(const nlohmann::ordered_json& j) {
  if (!j.contains("format_version") || j.at("format_version").get<int>() != kFormatVersion)
    throw ParseError("checkpoint: unsupported or missing format_version");
  NavPointModel m(config_from_json(j.at("config")), Vocabulary(j.at("vocab").get<std::vector<std::string>>()));
  m.store_.load_json(j.at("params"));
  return m;
}

void NavPointModel::save(const std::filesystem::path& path) const { write_text_file(path, to_json().dump()); }

NavPointModel NavPointModel::load(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace refnav::model
