#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mtmm/graph.hpp"

namespace mtmm {

/// Builds a 1x1 loss node from the leaf ids of the given tensors. The
/// builder is re-invoked on a fresh graph for every finite-difference
/// evaluation, so it must be a pure function of the leaf values.
using LossBuilder = std::function<Graph::Id(Graph&, const std::vector<Graph::Id>&)>;

/// Compares reverse-mode gradients against central finite differences.
///
/// Returns max over all entries of
///   |analytic - (f(x+eps) - f(x-eps)) / (2 eps)| / max(1, |analytic|).
/// Throws NumericError if the loss is non-finite at the given point.
double grad_check(const LossBuilder& f, std::span<Tensor* const> leaves, double eps);

/// Single-input convenience form.
double grad_check(const std::function<Graph::Id(Graph&, Graph::Id)>& f, Tensor& x, double eps);

}  // namespace mtmm
