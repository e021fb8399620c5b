#pragma once

#include <functional>
#include <vector>

#include "eden/matrix.hpp"

namespace eden::num {

/// Central finite-difference verification of analytic gradients.
///
/// `f` must be a deterministic scalar function of the tensors in `params`
/// (re-evaluated after each in-place coordinate bump, then restored).
/// `analytic[k]` holds d f / d params[k], shaped like *params[k].
/// Returns max over all coordinates of
///   |analytic - (f(x+eps) - f(x-eps)) / (2 eps)| / (|analytic| + 1e-8).
double grad_check(const std::function<double()>& f, const std::vector<Matrix*>& params,
                  const std::vector<Matrix>& analytic, double eps);

}  // namespace eden::num
