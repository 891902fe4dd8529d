#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "refnav/env.hpp"

namespace refnav::model {

struct ModelConfig {
  // Navigator
  std::size_t d_word = 32;         // instruction word embedding
  std::size_t d_text = 32;         // instruction LSTM hidden size, columns of X
  std::size_t d_visual_base = 32;  // per-view base feature v_{t,k}
  std::size_t d_label = 16;        // top-3 label encoding x^o
  std::size_t d_obj = 16;          // object cell feature, and v^o
  std::size_t d_g = 32;            // output of g(.)
  std::size_t d_hidden = 32;       // context LSTM
  std::size_t d_action = 16;       // previous-action embedding
  // Pointer
  std::size_t d_pword = 32;
  std::size_t d_pstate = 16;  // per direction, so e_j has 2 * d_pstate entries
  std::size_t d_f_hidden = 32;
  std::size_t d_f_out = 32;
  std::size_t d_loc = 16;
  std::size_t d_label_word = 16;
  int grid = 3;
  // Losses
  double lambda1 = 0.5;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  double lambda4 = 1.0;
  double margin = 0.1;
  // Training and search
  double lr = 0.05;
  double clip_norm = 5.0;
  int pointer_epochs = 8;
  int nav_epochs = 12;
  int nav_extra_starts = 0;  // extra teacher-forced walks per task and epoch, from random viewpoints
  std::uint64_t seed = 1;
  int max_steps = 40;
  bool lan_only = false;

  std::size_t d_fused() const { return d_visual_base + d_label + d_obj; }

  /// Tensor sizes of the full-scale model: 512-wide text, 4736-wide fused views.
  static ModelConfig paper_preset();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::ordered_json config_to_json(const ModelConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig config_from_json(const nlohmann::ordered_json& j);
/// Flat "key = value" lines; '#' starts a comment.
ModelConfig parse_config_text(std::string_view text, ModelConfig base = {});

/// Token table shared by the instruction encoder, pointer and label encoder.
/// Index 0 is UNK and index 1 is the NULL padding label.
class Vocabulary {
 public:
  static constexpr std::size_t kUnk = 0;
  static constexpr std::size_t kNull = 1;

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& words);

  /// Every instruction token and label token of the given worlds, sorted.
  static Vocabulary from_worlds(const std::vector<World>& worlds);

  std::size_t index(std::string_view word) const;
  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace refnav::model
