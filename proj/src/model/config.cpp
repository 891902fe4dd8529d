#include "refnav/model/config.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

namespace refnav::model {

ModelConfig ModelConfig::paper_preset() {
  ModelConfig c;
  c.d_word = 300;
  c.d_text = 512;
  c.d_visual_base = 2176;
  c.d_label = 512;
  c.d_obj = 2048;
  c.d_g = 512;
  c.d_hidden = 512;
  c.d_action = 64;
  c.d_pword = 300;
  c.d_pstate = 256;
  c.d_f_hidden = 512;
  c.d_f_out = 512;
  c.d_loc = 512;
  c.d_label_word = 300;
  c.grid = 14;
  return c;
}

namespace {

// One table drives JSON, text config and defaults alike.
template <class F>
void visit(ModelConfig& c, F&& f) {
  f("d_word", c.d_word);
  f("d_text", c.d_text);
  f("d_visual_base", c.d_visual_base);
  f("d_label", c.d_label);
  f("d_obj", c.d_obj);
  f("d_g", c.d_g);
  f("d_hidden", c.d_hidden);
  f("d_action", c.d_action);
  f("d_pword", c.d_pword);
  f("d_pstate", c.d_pstate);
  f("d_f_hidden", c.d_f_hidden);
  f("d_f_out", c.d_f_out);
  f("d_loc", c.d_loc);
  f("d_label_word", c.d_label_word);
  f("grid", c.grid);
  f("lambda1", c.lambda1);
  f("lambda2", c.lambda2);
  f("lambda3", c.lambda3);
  f("lambda4", c.lambda4);
  f("margin", c.margin);
  f("lr", c.lr);
  f("clip_norm", c.clip_norm);
  f("pointer_epochs", c.pointer_epochs);
  f("nav_epochs", c.nav_epochs);
  f("nav_extra_starts", c.nav_extra_starts);
  f("seed", c.seed);
  f("max_steps", c.max_steps);
  f("lan_only", c.lan_only);
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw std::invalid_argument("config key " + key + ": expected true/false, got '" + text + "'");
  } else {
    in >> v;
    std::string rest;
    if (in.fail() || (in >> rest)) throw std::invalid_argument("config key " + key + ": bad value '" + text + "'");
    return v;
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

nlohmann::ordered_json config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  ModelConfig copy = c;
  visit(copy, [&](const char* key, auto& v) { j[key] = v; });
  return j;
}

ModelConfig config_from_json(const nlohmann::ordered_json& j) {
  ModelConfig c;
  std::set<std::string> known;
  visit(c, [&](const char* key, auto& v) {
    known.insert(key);
    if (j.contains(key)) v = j.at(key).get<std::remove_reference_t<decltype(v)>>();
  });
  for (const auto& [k, _] : j.items()) {
    if (!known.contains(k)) throw std::invalid_argument("unknown model config key " + k);
  }
  return c;
}

ModelConfig parse_config_text(std::string_view text, ModelConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    visit(base, [&](const char* k, auto& v) {
      if (key != k) return;
      found = true;
      v = parse_value<std::remove_reference_t<decltype(v)>>(key, value);
    });
    if (!found) throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key " + key);
  }
  return base;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  words_ = {"<unk>", "<null>"};
  for (const auto& w : words) {
    if (w == "<unk>" || w == "<null>") continue;
    words_.push_back(w);
  }
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], i).second) throw std::invalid_argument("duplicate vocabulary word " + words_[i]);
  }
}

Vocabulary Vocabulary::from_worlds(const std::vector<World>& worlds) {
  std::set<std::string> words;
  for (const auto& w : worlds) {
    for (const auto& t : w.tasks) words.insert(t.instruction.begin(), t.instruction.end());
    for (const auto& o : w.env.objects()) {
      std::istringstream in(o.label);
      for (std::string tok; in >> tok;) words.insert(tok);
    }
  }
  return Vocabulary(std::vector<std::string>(words.begin(), words.end()));
}

std::size_t Vocabulary::index(std::string_view word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index(t));
  return out;
}

}  // namespace refnav::model
