#include "nrtx/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace nrtx {

bool adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  for (auto g : grads)
    if (!std::isfinite(g)) return false;

  state.step++;
  auto bc1 = 1.0 - std::pow(beta1, double(state.step));
  auto bc2 = 1.0 - std::pow(beta2, double(state.step));
  for (size_t i = 0; i < params.size(); i++) {
    auto g = grads[i];
    state.m[i] = beta1 * state.m[i] + (1 - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (1 - beta2) * g * g;
    auto m_hat = state.m[i] / bc1;
    auto v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
  return true;
}

}  // namespace nrtx
