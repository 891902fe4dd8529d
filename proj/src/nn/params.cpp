#include "refnav/nn/params.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace refnav::nn {

Param& ParamStore::add(const std::string& name, std::size_t rows, std::size_t cols) {
  if (index_.contains(name)) throw std::invalid_argument("parameter registered twice: " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value = Tensor2(rows, cols);
  p->grad = Tensor2(rows, cols);
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

Param& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
  return *params_[it->second];
}

const Param& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
  return *params_[it->second];
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const auto& p : params_) s += squared_norm(p->grad);
  return std::sqrt(s);
}

void ParamStore::sgd_step(double lr, double clip_norm) {
  const double norm = grad_norm();
  const double scale = clip_norm > 0.0 && norm > clip_norm ? clip_norm / norm : 1.0;
  for (auto& p : params_) {
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr * scale * p->grad[i];
  }
}

void ParamStore::init_xavier(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& p : params_) {
    const bool bias = p->name.size() >= 2 && p->name.ends_with(".b");
    if (bias) {
      std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
      continue;
    }
    const double a = std::sqrt(6.0 / static_cast<double>(p->value.rows + p->value.cols));
    for (double& x : p->value.data) x = (static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0) * a;
  }
}

nlohmann::ordered_json ParamStore::to_json() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& p : params_) {
    arr.push_back({{"name", p->name}, {"shape", {p->value.rows, p->value.cols}}, {"data", p->value.data}});
  }
  return arr;
}

void ParamStore::load_json(const nlohmann::ordered_json& j) {
  if (!j.is_array() || j.size() != params_.size())
    throw std::invalid_argument("checkpoint holds " + std::to_string(j.size()) + " tensors, model expects " +
                                std::to_string(params_.size()));
  for (const auto& e : j) {
    const std::string name = e.at("name").get<std::string>();
    Param& p = get(name);
    const auto rows = e.at("shape").at(0).get<std::size_t>();
    const auto cols = e.at("shape").at(1).get<std::size_t>();
    if (rows != p.value.rows || cols != p.value.cols)
      throw std::invalid_argument("checkpoint shape mismatch for " + name);
    auto data = e.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols) throw std::invalid_argument("checkpoint data size mismatch for " + name);
    p.value.data = std::move(data);
  }
}

}  // namespace refnav::nn
