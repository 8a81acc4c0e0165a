#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dawn/tensor.hpp"

namespace dawn {

struct GradCheckReport {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  int64_t coords_checked = 0;
  bool ok(double tolerance) const { return max_rel_err < tolerance; }
};

/// Compares the analytic gradient of a deterministic scalar function against
/// central finite differences (f(t+eps) - f(t-eps)) / 2eps on sampled
/// coordinates. `f` must recompute the loss from the current parameter
/// values. Relative error uses max(|analytic|, |numeric|, denom_floor) as
/// denominator. Throws on non-finite values during probing.
template <class T>
GradCheckReport grad_check(const std::function<Tensor<T>()>& f, std::vector<Parameter<T>>& params,
                           T epsilon, int64_t samples, Rng& rng,
                           double denom_floor = 1e-3);

}  // namespace dawn
