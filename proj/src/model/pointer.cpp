#include <algorithm>
#include <cmath>
#include <numeric>

#include "refnav/model/navpoint.hpp"

namespace refnav::model {

namespace {

double clamp_offset(double v) { return std::clamp(v, -kOffsetClamp, kOffsetClamp); }

double center_distance(const BBox2D& a, const BBox2D& b) {
  const double dx = (a.x + a.w / 2) - (b.x + b.w / 2);
  const double dy = (a.y + a.h / 2) - (b.y + b.h / 2);
  return std::hypot(dx, dy);
}

Tensor2 cells_tensor(const std::vector<std::vector<double>>& cells) {
  Tensor2 t(cells.size(), cells.empty() ? 0 : cells[0].size());
  for (std::size_t r = 0; r < cells.size(); ++r) std::copy(cells[r].begin(), cells[r].end(), t.data.begin() + r * t.cols);
  return t;
}

Tensor2 column_mean(const Tensor2& m) {
  Tensor2 out(m.cols, 1);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += m(r, c);
  for (double& x : out.data) x /= static_cast<double>(std::max<std::size_t>(m.rows, 1));
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// Other objects of the view ordered by 2D center distance, then id.
std::vector<std::size_t> neighbours(const std::vector<ProjectedObject>& view, std::size_t i,
                                    const std::vector<std::string>& categories, bool same_category) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < view.size(); ++j) {
    if (j == i) continue;
    if (same_category && categories[j] != categories[i]) continue;
    out.push_back(j);
  }
  std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    const double da = center_distance(view[i].bbox, view[a].bbox);
    const double db = center_distance(view[i].bbox, view[b].bbox);
    return da != db ? da < db : view[a].object < view[b].object;
  });
  if (out.size() > kMaxNeighbors) out.resize(kMaxNeighbors);
  return out;
}

}  // namespace

std::array<double, kBoxDim> box_descriptor(const BBox2D& b, const CameraIntrinsics& intr) {
  const double W = intr.width, H = intr.height;
  return {b.x / W, b.y / H, b.right() / W, b.bottom() / H, b.area() / (W * H)};
}

std::array<double, kBoxDim> box_offset(const BBox2D& self, const BBox2D& other) {
  const double w = std::max(self.w, 1.0), h = std::max(self.h, 1.0);
  const double cx = self.x + self.w / 2, cy = self.y + self.h / 2;
  return {clamp_offset((other.x - cx) / w), clamp_offset((other.y - cy) / h), clamp_offset((other.right() - cx) / w),
          clamp_offset((other.bottom() - cy) / h), clamp_offset(other.area() / (w * h))};
}

std::vector<ObjectCandidate> build_object_candidates(const Environment& env, const std::vector<ProjectedObject>& view,
                                                     const ModelConfig& cfg, const CameraIntrinsics& intr) {
  std::vector<std::string> categories;
  std::vector<Tensor2> cells;
  for (const auto& p : view) {
    categories.push_back(env.object(p.object).category);
    cells.push_back(cells_tensor(object_feature(env, p.object, cfg.grid, cfg.d_obj)));
  }
  std::vector<ObjectCandidate> out;
  for (std::size_t i = 0; i < view.size(); ++i) {
    const auto& ann = env.object(view[i].object);
    ObjectCandidate c;
    c.object = ann.id;
    c.category = ann.category;
    c.label_tokens = split(ann.label);
    c.view = view[i].view.index();
    c.cells = cells[i];
    c.visual = column_mean(cells[i]);
    c.location = Tensor2(kLocationDim, 1);
    const auto own = box_descriptor(view[i].bbox, intr);
    std::copy(own.begin(), own.end(), c.location.data.begin());
    std::size_t slot = 1;
    for (std::size_t j : neighbours(view, i, categories, true)) {
      const auto off = box_offset(view[i].bbox, view[j].bbox);
      std::copy(off.begin(), off.end(), c.location.data.begin() + slot++ * kBoxDim);
    }
    for (std::size_t j : neighbours(view, i, categories, false)) {
      Tensor2 r(cfg.d_obj + kBoxDim, 1);
      const Tensor2 mean = column_mean(cells[j]);
      std::copy(mean.data.begin(), mean.data.end(), r.data.begin());
      const auto off = box_offset(view[i].bbox, view[j].bbox);
      std::copy(off.begin(), off.end(), r.data.begin() + cfg.d_obj);
      c.relations.push_back(std::move(r));
    }
    out.push_back(std::move(c));
  }
  return out;
}

SceneCache::SceneCache(const Environment& env, const ModelConfig& cfg, CameraIntrinsics intr)
    : env_(&env), cfg_(cfg), intr_(intr) {}

const Panorama& SceneCache::panorama(std::string_view vp) {
  auto it = pano_.find(vp);
  if (it == pano_.end()) it = pano_.emplace(std::string(vp), refnav::panorama(*env_, vp, intr_)).first;
  return it->second;
}

const Tensor2& SceneCache::view_feature(std::string_view vp, int k) {
  const auto key = std::make_pair(std::string(vp), k);
  auto it = views_.find(key);
  if (it != views_.end()) return it->second;
  Tensor2 f(cfg_.d_visual_base, 1);
  if (!cfg_.lan_only) {
    const auto& visible = panorama(vp)[static_cast<std::size_t>(k - 1)];
    f.data = refnav::view_feature(*env_, ViewState::from_index(std::string(vp), k), visible, cfg_.d_visual_base);
  }
  return views_.emplace(key, std::move(f)).first->second;
}

const std::vector<ObjectCandidate>& SceneCache::objects(std::string_view vp, int k) {
  const auto key = std::make_pair(std::string(vp), k);
  auto it = objects_.find(key);
  if (it != objects_.end()) return it->second;
  auto objs = build_object_candidates(*env_, panorama(vp)[static_cast<std::size_t>(k - 1)], cfg_, intr_);
  if (cfg_.lan_only) {
    for (auto& o : objs) {
      for (Tensor2* t : {&o.cells, &o.location, &o.visual}) std::fill(t->data.begin(), t->data.end(), 0.0);
      for (auto& r : o.relations) std::fill(r.data.begin(), r.data.end(), 0.0);
    }
  }
  return objects_.emplace(key, std::move(objs)).first->second;
}

PointerQuery NavPointModel::pointer_encode(Tape& t, const std::vector<std::string>& tokens) const {
  if (tokens.empty()) throw std::invalid_argument("pointer_encode needs at least one token");
  std::vector<Var> emb;
  for (const auto& w : tokens) emb.push_back(nn::lookup(t, pword_emb_, vocab_.index(w)));
  auto enc = nn::bilstm_encode(p_fwd_, p_bwd_, emb);
  PointerQuery q;
  q.words = enc.states;
  Var E = nn::stack_rows(q.words);                                    // L x 2H
  Var scores = nn::matmul(t.param(*module_attn_.W), nn::transpose(E));  // 3 x L
  for (std::size_t m = 0; m < 3; ++m) {
    q.attention[m] = nn::softmax(nn::row(scores, m));
    q.phrase[m] = nn::matmul(nn::transpose(E), q.attention[m]);
    q.phrase_code[m] = nn::mlp2(f_query_[m], q.phrase[m]);
  }
  q.weights = nn::softmax(nn::apply(module_weight_, enc.ends()));
  return q;
}

PointerScore NavPointModel::pointer_score(const PointerQuery& q, const ObjectCandidate& o) const {
  Tape& t = *q.weights.tape;
  PointerScore s;
  // Subject: attention over grid cells driven by the subject phrase.
  Var C = t.constant(o.cells);
  Var cell_logits = nn::matmul(C, nn::matmul(t.param(*W_subj_attn_), q.phrase[0]));
  Var v_subj = nn::matmul(nn::transpose(C), nn::softmax(cell_logits));
  s.module[0] = nn::dot(nn::mlp2(f_visual_[0], v_subj), q.phrase_code[0]);
  // Location: own box and same-category offsets through one FC layer.
  Var loc = nn::apply(loc_fc_, t.constant(o.location));
  s.module[1] = nn::dot(nn::mlp2(f_visual_[1], loc), q.phrase_code[1]);
  // Relationship: best-matching neighbour, or the zero vector when alone.
  std::vector<Var> rel;
  if (o.relations.empty()) {
    Var zero = t.constant(Tensor2(cfg_.d_obj + kBoxDim, 1));
    rel.push_back(nn::dot(nn::mlp2(f_visual_[2], zero), q.phrase_code[2]));
  }
  for (const auto& r : o.relations) rel.push_back(nn::dot(nn::mlp2(f_visual_[2], t.constant(r)), q.phrase_code[2]));
  s.module[2] = nn::max_of(rel);
  s.total = nn::dot(q.weights, nn::concat({s.module[0], s.module[1], s.module[2]}));
  return s;
}

PointerRanker::PointerRanker(const NavPointModel& model, const std::vector<std::string>& instruction)
    : model_(&model), query_(model.pointer_encode(tape_, instruction)) {}

double PointerRanker::score(std::string_view vp, const ObjectCandidate& o) {
  const auto key = std::make_tuple(std::string(vp), o.view, o.object);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const double s = model_->pointer_score(query_, o).total.item();
  cache_.emplace(key, s);
  return s;
}

std::vector<const ObjectCandidate*> PointerRanker::top_in_view(SceneCache& scene, std::string_view vp, int k) {
  std::vector<std::pair<double, const ObjectCandidate*>> ranked;
  for (const auto& o : scene.objects(vp, k)) ranked.emplace_back(score(vp, o), &o);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second->object < b.second->object;
  });
  std::vector<const ObjectCandidate*> out;
  for (std::size_t i = 0; i < ranked.size() && out.size() < kTopObjects; ++i) out.push_back(ranked[i].second);
  return out;
}

std::vector<const ObjectCandidate*> PointerRanker::top_in_panorama(SceneCache& scene, std::string_view vp) {
  std::vector<std::pair<double, const ObjectCandidate*>> ranked;
  for (int k = 1; k <= kViewCount; ++k) {
    for (const auto& o : scene.objects(vp, k)) ranked.emplace_back(score(vp, o), &o);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    if (a.second->object != b.second->object) return a.second->object < b.second->object;
    return a.second->view < b.second->view;
  });
  std::vector<const ObjectCandidate*> out;
  for (const auto& [s, o] : ranked) {
    if (out.size() == kTopObjects) break;
    if (std::none_of(out.begin(), out.end(), [&](const ObjectCandidate* x) { return x->object == o->object; }))
      out.push_back(o);
  }
  return out;
}

std::optional<std::pair<std::string, int>> PointerRanker::best(SceneCache& scene, std::string_view vp) {
  auto top = top_in_panorama(scene, vp);
  if (top.empty()) return std::nullopt;
  return std::make_pair(top[0]->object, top[0]->view);
}

}  // namespace refnav::model
