#pragma once

#include <functional>

#include "aol/tensor.hpp"

namespace aol {

/// Central-difference estimate of the gradient of a scalar function.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double eps = 1e-5);

// max_i |a_i - b_i| / max(|b_i|, floor)
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-6);

// True when every |a_i - b_i| <= max(rel * |b_i|, abs_floor).
bool grads_agree(std::span<const double> a, std::span<const double> b, double rel = 1e-4,
                 double abs_floor = 1e-6);

}  // namespace aol
