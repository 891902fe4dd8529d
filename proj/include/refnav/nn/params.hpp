#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "refnav/nn/tensor.hpp"

namespace refnav::nn {

struct Param {
  std::string name;
  Tensor2 value;
  Tensor2 grad;
};

/// Owns every learnable tensor by name. Addresses stay stable for the
/// lifetime of the store, so layers may keep raw pointers.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  /// Registers a zero tensor. Throws std::invalid_argument on a duplicate name.
  Param& add(const std::string& name, std::size_t rows, std::size_t cols);
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }

  const std::vector<std::unique_ptr<Param>>& params() const { return params_; }
  std::size_t scalar_count() const;

  void zero_grad();
  double grad_norm() const;
  /// Plain SGD; the whole gradient is rescaled first if its norm exceeds clip_norm.
  void sgd_step(double lr, double clip_norm);

  /// Uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)), for every parameter whose
  /// name does not end in ".b"; biases are zeroed.
  void init_xavier(std::uint64_t seed);

  nlohmann::ordered_json to_json() const;
  /// Overwrites values from a checkpoint; names and shapes must match exactly.
  void load_json(const nlohmann::ordered_json& j);

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace refnav::nn
