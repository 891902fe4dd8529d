#include "refnav/model/losses.hpp"

#include <algorithm>
#include <stdexcept>

namespace refnav::model {

double progress_target(double d0, double dt) {
  if (d0 <= 0.0) return 1.0;
  return std::clamp((d0 - dt) / d0, 0.0, 1.0);
}

Var loss_nav(std::span<const NavStep> steps, double lambda1) {
  if (steps.empty()) throw std::invalid_argument("loss_nav over zero steps");
  nn::Tape& t = *steps[0].logits.tape;
  Var ce = t.constant(nn::Tensor2(1, 1));
  Var mse = t.constant(nn::Tensor2(1, 1));
  for (const auto& s : steps) {
    if (s.teacher >= s.logits.rows()) throw std::out_of_range("teacher action outside the candidate set");
    ce = ce + nn::pick(nn::log_softmax(s.logits), s.teacher);
    mse = mse + nn::square(nn::add_scalar(s.progress, -s.progress_target));
  }
  return nn::scale(ce, -lambda1) + nn::scale(mse, 1.0 - lambda1);
}

Var loss_exp(nn::Tape& t, std::span<const PointerTriplet> triplets, double lambda2, double lambda3, double margin) {
  Var total = t.constant(nn::Tensor2(1, 1));
  for (const auto& tr : triplets) {
    if (tr.other_expression)
      total = total + nn::scale(nn::relu(nn::add_scalar(*tr.other_expression - tr.positive, margin)), lambda2);
    if (tr.other_object)
      total = total + nn::scale(nn::relu(nn::add_scalar(*tr.other_object - tr.positive, margin)), lambda3);
  }
  return total;
}

Var loss_total(Var nav, Var exp, double lambda4) { return nav + nn::scale(exp, lambda4); }

}  // namespace refnav::model
