#pragma once

#include <span>
#include <vector>

namespace nrtx {

struct AdamState {
  std::vector<double> m, v;
  int64_t step = 0;

  void init(size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    step = 0;
  }
};

// Standard Adam with bias correction. Returns false (and leaves params and
// state untouched) when any gradient entry is non-finite.
bool adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

}  // namespace nrtx
