#pragma once

#include <optional>
#include <span>

#include "refnav/nn/tape.hpp"

namespace refnav::model {

using nn::Var;

/// One supervised navigator step.
struct NavStep {
  Var logits;        // K x 1 candidate logits
  std::size_t teacher = 0;
  Var progress;      // 1x1 predicted progress in [0, 1]
  double progress_target = 0.0;
};

/// clamp((d0 - dt) / d0, 0, 1); 1 when d0 is 0.
double progress_target(double d0, double dt);

/// -lambda1 * sum_t log softmax(l_t)[teacher] + (1 - lambda1) * sum_t (y_pm - p_pm)^2.
Var loss_nav(std::span<const NavStep> steps, double lambda1);

/// Pointer scores for one positive pair and its sampled negatives.
struct PointerTriplet {
  Var positive;                         // S(o_i | r_i)
  std::optional<Var> other_expression;  // S(o_i | r_j)
  std::optional<Var> other_object;      // S(o_k | r_i)
};

/// sum_i lambda2 max(0, margin + S(o_i|r_j) - S(o_i|r_i)) + lambda3 max(0, margin + S(o_k|r_i) - S(o_i|r_i)).
/// Missing negatives contribute nothing.
Var loss_exp(nn::Tape& t, std::span<const PointerTriplet> triplets, double lambda2, double lambda3, double margin);

/// loss_nav + lambda4 * loss_exp.
Var loss_total(Var nav, Var exp, double lambda4);

}  // namespace refnav::model
