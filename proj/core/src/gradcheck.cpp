#include "resprect/gradcheck.hpp"

#include <cmath>

#include "resprect/errors.hpp"

namespace resprect {

GradCheckReport finite_diff_check(
    ParamSet& params, const ParamSet& analytic_grads,
    const std::function<double(const ParamSet&)>& loss_fn, double h) {
  if (!params.same_layout(analytic_grads)) {
    throw DimensionError("finite_diff_check: grad layout mismatch");
  }
  if (!(h > 0.0)) {
    throw NumericError("finite_diff_check: step size must be positive");
  }

  GradCheckReport report;
  for (std::size_t e = 0; e < params.entries.size(); ++e) {
    Tensor& t = params.entries[e].value;
    const Tensor& g = analytic_grads.entries[e].value;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const float original = t.data[i];
      const float plus = static_cast<float>(static_cast<double>(original) + h);
      const float minus = static_cast<float>(static_cast<double>(original) - h);
      const double h_eff =
          static_cast<double>(plus) - static_cast<double>(minus);
      if (!(h_eff > 0.0)) {
        throw NumericError("finite_diff_check: step underflowed for '" +
                           params.entries[e].name + "'");
      }

      t.data[i] = plus;
      const double loss_plus = loss_fn(params);
      t.data[i] = minus;
      const double loss_minus = loss_fn(params);
      t.data[i] = original;

      const double numeric = (loss_plus - loss_minus) / h_eff;
      const double analytic = static_cast<double>(g.data[i]);
      const double rel =
          std::abs(analytic - numeric) / (std::abs(numeric) + 1e-8);
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = params.entries[e].name;
        report.worst_index = i;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
      ++report.checked;
    }
  }
  return report;
}

}  // namespace resprect
