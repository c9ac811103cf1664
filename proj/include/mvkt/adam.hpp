#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvkt/tensor.hpp"

namespace mvkt {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  AdamState() = default;
  AdamState(double learning_rate, std::span<Tensor* const> params);
};

// One bias-corrected Adam update of `params` in place.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state);

}  // namespace mvkt
