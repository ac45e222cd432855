#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "seqsleep/numerics/graph.hpp"

namespace seqsleep {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<tensor>[<index>]"
  std::size_t coordinates = 0;
  // Per tensor, largest absolute analytic gradient seen; zero means the
  // tensor received no gradient at all.
  std::vector<double> max_abs_grad;
};

// Builds the loss from parameter handles; called once for the analytic
// gradient and twice per coordinate for central differences.
using LossBuilder = std::function<Var(Graph<double>&, std::span<const Var>)>;

// Compares reverse-mode gradients with central finite differences. The
// relative error of a coordinate is |a - n| / max(|a|, |n|, floor).
inline GradCheckResult gradcheck(const LossBuilder& build, std::vector<Tensor<double>> params,
                                 const std::vector<std::string>& names = {}, double h = 1e-3,
                                 double floor = 1e-6) {
  auto evaluate = [&](bool with_grad, std::vector<Tensor<double>>* grads) {
    Graph<double> g;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const auto& p : params) vars.push_back(g.parameter(p));
    const Var loss = build(g, vars);
    const double value = g.value(loss)[0];
    if (with_grad) {
      g.backward(loss);
      grads->clear();
      for (auto v : vars) grads->push_back(g.grad(v));
    }
    return value;
  };

  std::vector<Tensor<double>> analytic;
  evaluate(true, &analytic);

  GradCheckResult result;
  result.max_abs_grad.assign(params.size(), 0.0);
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double orig = params[t][i];
      params[t][i] = orig + h;
      const double up = evaluate(false, nullptr);
      params[t][i] = orig - h;
      const double down = evaluate(false, nullptr);
      params[t][i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[t][i];
      result.max_abs_grad[t] = std::max(result.max_abs_grad[t], std::abs(a));
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++result.coordinates;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = (t < names.size() ? names[t] : "param" + std::to_string(t)) + "[" +
                       std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace seqsleep
