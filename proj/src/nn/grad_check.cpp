#include "refnav/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace refnav::nn {

double compute_gradients(ParamStore& store, const LossFn& loss) {
  store.zero_grad();
  Tape t;
  Var l = loss(t);
  t.backward(l);
  return l.item();
}

GradCheckResult grad_check(ParamStore& store, const LossFn& loss, double eps, const std::vector<std::string>& only,
                           double floor) {
  compute_gradients(store, loss);
  auto eval = [&] {
    Tape t;
    return loss(t).item();
  };
  GradCheckResult r;
  for (const auto& p : store.params()) {
    if (!only.empty() && std::find(only.begin(), only.end(), p->name) == only.end()) continue;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double up = eval();
      p->value[i] = saved - eps;
      const double down = eval();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad[i];
      const double abs_err = std::abs(analytic - numeric);
      const double rel = abs_err / std::max({std::abs(analytic), std::abs(numeric), floor});
      ++r.checked;
      r.max_abs_error = std::max(r.max_abs_error, abs_err);
      if (rel > r.max_rel_error || r.worst_param.empty()) {
        r.max_rel_error = rel;
        r.worst_param = p->name;
        r.worst_index = i;
      }
    }
  }
  return r;
}

}  // namespace refnav::nn
