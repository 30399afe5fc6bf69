#include "scot/optim.hpp"

#include <cmath>
#include <string>

#include "scot/error.hpp"

namespace scot {

void adam_step(Matrix& param, const Matrix& grad, AdamState& state, const AdamConfig& config,
               std::string_view block) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols()) {
    throw InputError("adam_step: gradient shape mismatch for block '" + std::string(block) + "'");
  }
  if (!grad.allFinite()) {
    throw TrainingError("non-finite gradient in parameter block '" + std::string(block) + "'");
  }
  if (state.step == 0 || state.m.rows() != param.rows() || state.m.cols() != param.cols()) {
    state.m = Matrix::Zero(param.rows(), param.cols());
    state.v = Matrix::Zero(param.rows(), param.cols());
    state.step = 0;
  }
  ++state.step;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grad;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  param.array() -= config.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + config.eps);
  if (!param.allFinite()) {
    throw TrainingError("parameter block '" + std::string(block) + "' became non-finite");
  }
}

double global_norm(const std::vector<const Matrix*>& grads) {
  double sq = 0.0;
  for (const auto* g : grads) sq += g->squaredNorm();
  return std::sqrt(sq);
}

}  // namespace scot
