#include "refnav/model/navpoint.hpp"

namespace refnav::model {

Var NavPointModel::interaction_fuse(Tape& t, const Tensor2& v_base, std::span<const ObjectCandidate* const> top) const {
  if (v_base.rows != cfg_.d_visual_base || v_base.cols != 1)
    throw nn::ShapeError("interaction_fuse: base feature " + v_base.shape_string());
  if (top.size() > kTopObjects) throw std::invalid_argument("interaction_fuse takes at most three objects");
  std::vector<Var> tokens;
  Tensor2 visual(cfg_.d_obj, 1);
  for (std::size_t s = 0; s < kTopObjects; ++s) {
    if (s < top.size()) {
      for (const auto& w : top[s]->label_tokens) tokens.push_back(nn::lookup(t, label_emb_, vocab_.index(w)));
      for (std::size_t i = 0; i < visual.size(); ++i) visual[i] += top[s]->visual[i];
    } else {
      tokens.push_back(nn::lookup(t, label_emb_, Vocabulary::kNull));
    }
  }
  for (double& x : visual.data) x /= static_cast<double>(kTopObjects);
  if (cfg_.lan_only) std::fill(visual.data.begin(), visual.data.end(), 0.0);
  Var labels = cfg_.lan_only ? t.constant(Tensor2(cfg_.d_label, 1))
                             : nn::bilstm_encode(label_fwd_, label_bwd_, tokens).ends();
  return nn::concat({t.constant(v_base), labels, t.constant(visual)});
}

}  // namespace refnav::model
