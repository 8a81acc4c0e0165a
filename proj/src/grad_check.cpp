#include "dawn/grad_check.hpp"

#include <cmath>

namespace dawn {

template <class T>
GradCheckReport grad_check(const std::function<Tensor<T>()>& f, std::vector<Parameter<T>>& params,
                           T epsilon, int64_t samples, Rng& rng, double denom_floor) {
  if (params.empty()) throw std::invalid_argument("grad_check: no parameters");
  if (!(epsilon > T(0))) throw std::invalid_argument("grad_check: epsilon must be positive");

  for (auto& p : params) p.tensor.zero_grad();
  Tensor<T> loss = f();
  loss.check_finite("grad_check loss");
  loss.backward();

  std::vector<std::vector<T>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) {
    auto g = p.tensor.grad();
    analytic.emplace_back(g.begin(), g.end());
  }

  int64_t total = 0;
  for (auto& p : params) total += p.tensor.numel();

  GradCheckReport report;
  auto probe = [&](size_t pi, int64_t i) {
    auto values = params[pi].tensor.data();
    const T original = values[static_cast<size_t>(i)];
    values[static_cast<size_t>(i)] = original + epsilon;
    const double f_plus = static_cast<double>(f().item());
    values[static_cast<size_t>(i)] = original - epsilon;
    const double f_minus = static_cast<double>(f().item());
    values[static_cast<size_t>(i)] = original;
    if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
      throw std::runtime_error("grad_check: non-finite loss while probing " + params[pi].name);

    const double numeric = (f_plus - f_minus) / (2.0 * static_cast<double>(epsilon));
    const double a = static_cast<double>(analytic[pi][static_cast<size_t>(i)]);
    const double abs_err = std::abs(a - numeric);
    const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), denom_floor});
    ++report.coords_checked;
    report.max_abs_err = std::max(report.max_abs_err, abs_err);
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_param = params[pi].name;
      report.worst_index = i;
    }
  };

  if (samples >= total) {
    for (size_t pi = 0; pi < params.size(); ++pi)
      for (int64_t i = 0; i < params[pi].tensor.numel(); ++i) probe(pi, i);
  } else {
    for (int64_t s = 0; s < samples; ++s) {
      int64_t flat = static_cast<int64_t>(rng.next_u64() % static_cast<uint64_t>(total));
      size_t pi = 0;
      while (flat >= params[pi].tensor.numel()) {
        flat -= params[pi].tensor.numel();
        ++pi;
      }
      probe(pi, flat);
    }
  }
  return report;
}

template GradCheckReport grad_check(const std::function<Tensor<float>()>&,
                                    std::vector<Parameter<float>>&, float, int64_t, Rng&, double);
template GradCheckReport grad_check(const std::function<Tensor<double>()>&,
                                    std::vector<Parameter<double>>&, double, int64_t, Rng&,
                                    double);

}  // namespace dawn
