#pragma once
// Central finite-difference gradient checker.
//
// Compares analytic gradients against (f(x+h) - f(x-h)) / 2h elementwise and
// reports the maximum relative error |a-n| / max(|a|, |n|, 1e-8). Numeric
// evaluations run with gradient tracking disabled, so the checked function
// must be pure and deterministic (no dropout draws inside).

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "textclf/tensor.hpp"

namespace textclf {

struct GradCheckReport {
  bool pass = false;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::string worst;  // "input 2, element 17" style locator
};

/// f maps the (mutable, in-place perturbed) inputs to a scalar tensor.
inline GradCheckReport grad_check(
    const std::function<Tensor<double>(const std::vector<Tensor<double>>&)>& f,
    std::vector<Tensor<double>> inputs, double step = 1e-5, double tolerance = 1e-4) {
  for (auto& in : inputs) {
    in.set_requires_grad(true);
    if (in.has_grad()) in.zero_grad();
  }
  Tensor<double> loss = f(inputs);
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (auto& in : inputs) {
    if (in.has_grad()) {
      analytic.emplace_back(in.grad().begin(), in.grad().end());
    } else {
      analytic.emplace_back(static_cast<std::size_t>(in.size()), 0.0);
    }
  }

  GradCheckReport rep;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto vals = inputs[k].values_mut();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double keep = vals[i];
      vals[i] = keep + step;
      const double up = f(inputs).item();
      vals[i] = keep - step;
      const double down = f(inputs).item();
      vals[i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[k][i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.max_abs_err = abs_err;
        rep.worst = "input " + std::to_string(k) + ", element " + std::to_string(i);
      }
    }
  }
  rep.pass = rep.max_rel_err < tolerance;
  return rep;
}

}  // namespace textclf
