#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "refnav/env.hpp"
#include "refnav/model/config.hpp"
#include "refnav/nn/layers.hpp"
#include "refnav/nn/params.hpp"
#include "refnav/nn/tape.hpp"
#include "refnav/scene.hpp"

namespace refnav::model {

using nn::Tape;
using nn::Tensor2;
using nn::Var;

inline constexpr std::size_t kMaxNeighbors = 5;
inline constexpr std::size_t kBoxDim = 5;
inline constexpr std::size_t kLocationDim = kBoxDim * (1 + kMaxNeighbors);
inline constexpr std::size_t kTopObjects = 3;
inline constexpr double kOffsetClamp = 4.0;

/// Pointer inputs for one object as it appears in one view.
struct ObjectCandidate {
  std::string object;
  std::string category;
  std::vector<std::string> label_tokens;
  int view = 0;
  Tensor2 cells;                   // grid^2 x d_obj
  Tensor2 location;                // own box (5) then five same-category offsets (5 each), zero padded
  std::vector<Tensor2> relations;  // nearest other objects: [mean cell; offset], (d_obj + 5) x 1
  Tensor2 visual;                  // mean of cells, d_obj x 1
};

/// Normalized own-box descriptor [x/W, y/H, right/W, bottom/H, area/(W H)].
std::array<double, kBoxDim> box_descriptor(const BBox2D& b, const CameraIntrinsics& intr);
/// Offset of `other` relative to `self`'s center, scaled by self's size, plus the area ratio; clamped.
std::array<double, kBoxDim> box_offset(const BBox2D& self, const BBox2D& other);

std::vector<ObjectCandidate> build_object_candidates(const Environment& env, const std::vector<ProjectedObject>& view,
                                                     const ModelConfig& cfg, const CameraIntrinsics& intr = {});

/// Memoized per-environment scene features. In Lan-Only mode every visual
/// input (view features, object cells, boxes, relations) is zero.
class SceneCache {
 public:
  SceneCache(const Environment& env, const ModelConfig& cfg, CameraIntrinsics intr = {});

  const Environment& env() const { return *env_; }
  const Panorama& panorama(std::string_view vp);
  /// Base feature of view k (1..36) at vp, d_visual_base x 1.
  const Tensor2& view_feature(std::string_view vp, int k);
  const std::vector<ObjectCandidate>& objects(std::string_view vp, int k);

 private:
  const Environment* env_;
  ModelConfig cfg_;
  CameraIntrinsics intr_;
  std::map<std::string, Panorama, std::less<>> pano_;
  std::map<std::pair<std::string, int>, Tensor2> views_;
  std::map<std::pair<std::string, int>, std::vector<ObjectCandidate>> objects_;
};

struct PointerQuery {
  std::vector<Var> words;          // e_j from the bi-LSTM, 2 d_pstate x 1
  std::array<Var, 3> attention;    // a_{m,:} over words, L x 1; order subj, loc, rel
  std::array<Var, 3> phrase;       // q^m
  std::array<Var, 3> phrase_code;  // query branch of F_m applied to q^m
  Var weights;                     // w_m, 3 x 1
};

struct PointerScore {
  Var total;
  std::array<Var, 3> module;
};

struct CoGrounding {
  Var alpha;  // L x 1
  Var beta;   // K x 1
  Var x_hat;  // d_text x 1
  Var v_hat;  // d_fused x 1
  Var g;      // K x d_g, g(.) applied to every candidate
};

/// All learnable tensors of the navigator, pointer and interaction module,
/// registered in one ParamStore.
class NavPointModel {
 public:
  NavPointModel(ModelConfig cfg, Vocabulary vocab);

  const ModelConfig& config() const { return cfg_; }
  ModelConfig& mutable_config() { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  // Navigator.
  /// Per-token instruction LSTM states, L x d_text.
  Var encode_instruction(Tape& t, const std::vector<std::string>& tokens) const;
  CoGrounding co_ground(Var X, Var V, Var h_prev) const;
  nn::LstmState context_update(nn::LstmState ctx, Var x_hat, Var v_hat, Var a_prev) const;
  /// l_k = (W_a [h; x_hat]) . g(v'_k) for every row of V (K x d_fused).
  Var action_logits(Var h, Var x_hat, Var V) const;
  /// Same, reusing g(V) from co_ground.
  Var action_logits_from_g(Var h, Var x_hat, Var g) const;
  Var progress_monitor(Var h, Var x_hat) const;
  /// 0 is the episode start, 1 + b a move towards heading bin b.
  Var action_embedding(Tape& t, std::size_t index) const;
  nn::LstmState initial_context(Tape& t) const { return nn::lstm_zero_state(t, cfg_.d_hidden); }

  // Pointer.
  PointerQuery pointer_encode(Tape& t, const std::vector<std::string>& tokens) const;
  PointerScore pointer_score(const PointerQuery& q, const ObjectCandidate& o) const;

  // Interaction.
  /// [v_base; label bi-LSTM ends over the top objects' label tokens; mean of their visual features].
  /// Fewer than three objects are padded with the NULL label and zero visuals.
  Var interaction_fuse(Tape& t, const Tensor2& v_base, std::span<const ObjectCandidate* const> top) const;

  nlohmann::ordered_json to_json() const;
  static NavPointModel from_json(const nlohmann::ordered_json& j);
  void save(const std::filesystem::path& path) const;
  static NavPointModel load(const std::filesystem::path& path);

 private:
  Var words_matrix(Tape& t, const nn::Embedding& e, const std::vector<std::string>& tokens,
                   std::vector<Var>* rows) const;

  ModelConfig cfg_;
  Vocabulary vocab_;
  nn::ParamStore store_;
  // Navigator
  nn::Embedding word_emb_;
  nn::LstmParams instr_lstm_;
  nn::Param* W_x_ = nullptr;
  nn::Param* W_v_ = nullptr;
  nn::Linear g_;
  nn::LstmParams ctx_lstm_;
  nn::Param* W_a_ = nullptr;
  nn::Linear pm_;
  nn::Embedding action_emb_;
  // Pointer
  nn::Embedding pword_emb_;
  nn::LstmParams p_fwd_;
  nn::LstmParams p_bwd_;
  nn::Linear module_attn_;  // 3 x 2 d_pstate, one scoring vector per module
  nn::Linear module_weight_;
  nn::Param* W_subj_attn_ = nullptr;
  nn::Linear loc_fc_;
  std::array<nn::MlpParams, 3> f_visual_;
  std::array<nn::MlpParams, 3> f_query_;
  // Interaction
  nn::Embedding label_emb_;
  nn::LstmParams label_fwd_;
  nn::LstmParams label_bwd_;
};

/// Ranks objects with the pointer outside any training tape. Scores are
/// memoized per (viewpoint, view, object), so create one per task.
class PointerRanker {
 public:
  PointerRanker(const NavPointModel& model, const std::vector<std::string>& instruction);
  PointerRanker(const PointerRanker&) = delete;
  PointerRanker& operator=(const PointerRanker&) = delete;

  double score(std::string_view vp, const ObjectCandidate& o);
  /// Best three objects of one view, ties broken by object id.
  std::vector<const ObjectCandidate*> top_in_view(SceneCache& scene, std::string_view vp, int k);
  /// Best three distinct objects over all 36 views of a viewpoint.
  std::vector<const ObjectCandidate*> top_in_panorama(SceneCache& scene, std::string_view vp);
  /// Highest-scoring (object, view) pair at a viewpoint, if any object is visible.
  std::optional<std::pair<std::string, int>> best(SceneCache& scene, std::string_view vp);

 private:
  const NavPointModel* model_;
  Tape tape_;
  PointerQuery query_;
  std::map<std::tuple<std::string, int, std::string>, double> cache_;
};

}  // namespace refnav::model
