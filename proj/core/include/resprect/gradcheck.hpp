#pragma once

#include <functional>
#include <string>

#include "resprect/mlp.hpp"

namespace resprect {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

/// Central-difference check of `analytic_grads` against `loss_fn`.
///
/// loss_fn must be a deterministic function of the parameters and should
/// accumulate in double precision: at the step sizes we use, a float32 loss
/// has rounding noise of the same order as the quantity being measured.
/// Each parameter is nudged to float(p+h) / float(p-h) and the difference
/// quotient uses the exact realised step (the double gap between the two
/// stored floats), not 2h, so no error is introduced by float quantisation
/// of the perturbation itself.
///
/// Relative error per element: |analytic - numeric| / (|numeric| + 1e-8).
/// Parameters are restored bit-exactly before returning.
GradCheckReport finite_diff_check(
    ParamSet& params, const ParamSet& analytic_grads,
    const std::function<double(const ParamSet&)>& loss_fn, double h = 1e-3);

}  // namespace resprect
