#pragma once

#include <functional>
#include <string>
#include <vector>

#include "refnav/nn/params.hpp"
#include "refnav/nn/tape.hpp"

namespace refnav::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Builds a scalar loss on the given tape from parameters in the store.
using LossFn = std::function<Var(Tape&)>;

/// Compares the tape gradient of `loss` against central differences
/// (f(p+eps) - f(p-eps)) / 2eps for every scalar of every parameter (or of
/// the named subset). Relative error is |a - n| / max(|a|, |n|, floor), so
/// entries with tiny true gradients are judged on absolute error.
/// Gradients already stored in `store` are overwritten.
GradCheckResult grad_check(ParamStore& store, const LossFn& loss, double eps = 1e-5,
                           const std::vector<std::string>& only = {}, double floor = 1e-4);

/// Analytic pass only: zeroes store gradients and runs one backward sweep.
double compute_gradients(ParamStore& store, const LossFn& loss);

}  // namespace refnav::nn
