#pragma once

#include <functional>

#include "tagseq/graph.hpp"

namespace tagseq {

// Builds the loss for the current parameter values; called repeatedly with
// perturbed parameters, so it must be deterministic.
using LossBuilder = std::function<Var(Graph&)>;

// Central-difference gradient check over every element of every parameter in
// the store. Returns max over elements of
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
double grad_check(ParameterStore& params, const LossBuilder& build, double eps = 1e-5);

}  // namespace tagseq
