#include "aol/optim.hpp"

#include <cmath>

namespace aol {

namespace {

void check_pairs(const std::vector<Tensor>& params, const std::vector<Tensor>& grads,
                 const char* op) {
  if (params.size() != grads.size()) {
    throw ShapeError(std::string(op) + ": " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape()) {
      throw ShapeError(std::string(op) + ": parameter " + std::to_string(i) + " has shape " +
                       to_string(params[i].shape()) + ", gradient " + to_string(grads[i].shape()));
    }
    for (double g : grads[i].data()) {
      if (!std::isfinite(g)) {
        throw NumericError(std::string(op) + ": non-finite gradient for parameter " +
                           std::to_string(i));
      }
    }
  }
}

}  // namespace

std::vector<Tensor> sgd_step(const std::vector<Tensor>& params, const std::vector<Tensor>& grads,
                             double lr) {
  check_pairs(params, grads, "sgd_step");
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    std::vector<double> next(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) next[j] = p[j] - lr * g[j];
    out.emplace_back(params[i].shape(), std::move(next), params[i].requires_grad());
  }
  return out;
}

std::vector<Tensor> adam_step(AdamState& state, const std::vector<Tensor>& params,
                              const std::vector<Tensor>& grads) {
  check_pairs(params, grads, "adam_step");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state tracks " + std::to_string(state.m.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].numel()) {
      throw ShapeError("adam_step: moment buffer " + std::to_string(i) + " does not match " +
                       to_string(params[i].shape()));
    }
  }

  state.t += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    std::vector<double> next(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      next[j] = p[j] - state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
    out.emplace_back(params[i].shape(), std::move(next), params[i].requires_grad());
  }
  return out;
}

}  // namespace aol
