#pragma once

#include <string_view>
#include <vector>

#include "scot/types.hpp"

namespace scot {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Matrix m;
  Matrix v;
  long step = 0;
};

/// One bias-corrected Adam update of `param` in place. Throws TrainingError
/// naming `block` if the gradient is not finite.
void adam_step(Matrix& param, const Matrix& grad, AdamState& state, const AdamConfig& config,
               std::string_view block);

/// Global l2 norm over several gradient blocks.
double global_norm(const std::vector<const Matrix*>& grads);

}  // namespace scot
