#include "scot/align.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scot/error.hpp"

namespace scot {

namespace {

constexpr double kLogFloor = 1e-30;
constexpr double kCostKink = 1e-12;

}  // namespace

void AlignConfig::validate() const {
  if (!(tau > 0.0)) throw InputError("align: tau must be positive");
  if (!(eta >= 0.0)) throw InputError("align: eta must be nonnegative");
  if (!(ot_weight >= 0.0)) throw InputError("align: ot_weight must be nonnegative");
  sinkhorn.validate();
}

RowNormalized normalize_rows(const Matrix& z, const char* what) {
  RowNormalized out;
  out.norms = z.rowwise().norm();
  for (Index i = 0; i < z.rows(); ++i) {
    if (!(out.norms(i) > 0.0) || !std::isfinite(out.norms(i))) {
      throw NumericalError(std::string("cannot normalize ") + what + " row " +
                           std::to_string(i) + ": zero or non-finite norm");
    }
  }
  out.unit = out.norms.cwiseInverse().asDiagonal() * z;
  return out;
}

Matrix normalize_rows_backward(const RowNormalized& normalized, const Matrix& grad_unit) {
  // d(x/|x|) = (I - x̂ x̂ᵀ) dx / |x|
  const Vector radial = (grad_unit.array() * normalized.unit.array()).rowwise().sum();
  Matrix tangent = grad_unit - radial.asDiagonal() * normalized.unit;
  return normalized.norms.cwiseInverse().asDiagonal() * tangent;
}

CostMatrix cost_matrix(const Matrix& zs, const Matrix& zt) {
  if (zs.cols() != zt.cols()) {
    throw InputError("cost_matrix: embedding dimensions differ (" + std::to_string(zs.cols()) +
                     " vs " + std::to_string(zt.cols()) + ")");
  }
  CostMatrix out;
  out.source = normalize_rows(zs, "source embedding");
  out.target = normalize_rows(zt, "target embedding");
  const Matrix cos = out.source.unit * out.target.unit.transpose();
  out.cost = (2.0 - 2.0 * cos.array()).max(0.0).sqrt().matrix();
  return out;
}

void cost_backward(const Matrix& cost, const Matrix& unit_s, const Matrix& unit_t,
                   const Matrix& grad_cost, Matrix& grad_unit_s, Matrix& grad_unit_t) {
  // dC_ij/dx_i = (x_i - y_j) / C_ij; zero subgradient at coincident points.
  Matrix w = grad_cost;
  for (Index i = 0; i < cost.rows(); ++i)
    for (Index j = 0; j < cost.cols(); ++j)
      w(i, j) = cost(i, j) > kCostKink ? grad_cost(i, j) / cost(i, j) : 0.0;
  const Vector row_w = w.rowwise().sum();
  const Vector col_w = w.colwise().sum().transpose();
  grad_unit_s = row_w.asDiagonal() * unit_s - w * unit_t;
  grad_unit_t = col_w.asDiagonal() * unit_t - w.transpose() * unit_s;
}

double ot_loss(const Matrix& plan, const Matrix& cost) {
  if (plan.rows() != cost.rows() || plan.cols() != cost.cols()) {
    throw InputError("ot_loss: coupling and cost shapes differ");
  }
  const auto denom = static_cast<double>(std::min(cost.rows(), cost.cols()));
  return (plan.array() * cost.array()).sum() / denom;
}

ContrastiveResult contrastive_loss(const Matrix& plan, const Matrix& unit_s, const Matrix& unit_t,
                                   double tau) {
  if (!(tau > 0.0)) throw InputError("contrastive_loss: tau must be positive");
  const Index ns = unit_s.rows();
  const Index nt = unit_t.rows();
  if (plan.rows() != ns || plan.cols() != nt || unit_s.cols() != unit_t.cols()) {
    throw InputError("contrastive_loss: shape mismatch");
  }
  const Matrix sim = unit_s * unit_t.transpose() / tau;
  Matrix grad_sim = Matrix::Zero(ns, nt);
  ContrastiveResult out;
  for (Index i = 0; i < ns; ++i) {
    if (!(plan.row(i).sum() > 0.0)) {
      ++out.skipped_rows;
      continue;
    }
    const double m = sim.row(i).maxCoeff();
    const Eigen::ArrayXd e = (sim.row(i).array() - m).exp().transpose();
    const double denom = e.sum();
    const Eigen::ArrayXd weighted = plan.row(i).array().transpose() * e;
    const double numer = weighted.sum();
    out.loss -= std::log(numer + kLogFloor) - std::log(denom);
    // dℓ_i/dS_ij = softmax_ij - P_ij e^{S_ij} / Σ_k P_ik e^{S_ik}
    grad_sim.row(i) = (e / denom - weighted / (numer + kLogFloor)).matrix().transpose();
  }
  if (out.skipped_rows == ns) {
    throw NumericalError("contrastive_loss: degenerate coupling, every row has zero mass");
  }
  const double scale = 1.0 / static_cast<double>(ns);
  out.loss *= scale;
  grad_sim *= scale / tau;
  out.grad_s = grad_sim * unit_t;
  out.grad_t = grad_sim.transpose() * unit_s;
  return out;
}

AlignResult align_with_plan(const Matrix& zs, const Matrix& zt, const Matrix& plan,
                            const AlignConfig& config) {
  config.validate();
  const CostMatrix cm = cost_matrix(zs, zt);
  AlignResult out;
  out.l_ot = ot_loss(plan, cm.cost);

  Matrix grad_us;
  Matrix grad_ut;
  const double denom = static_cast<double>(std::min(zs.rows(), zt.rows()));
  cost_backward(cm.cost, cm.source.unit, cm.target.unit, (config.ot_weight / denom) * plan,
                grad_us, grad_ut);

  if (config.eta != 0.0) {
    const auto con = contrastive_loss(plan, cm.source.unit, cm.target.unit, config.tau);
    out.l_con = con.loss;
    out.skipped_rows = con.skipped_rows;
    grad_us += config.eta * con.grad_s;
    grad_ut += config.eta * con.grad_t;
  } else {
    // Still reported for logging; does not enter the gradient.
    out.l_con = contrastive_loss(plan, cm.source.unit, cm.target.unit, config.tau).loss;
  }
  out.l_align = config.ot_weight * out.l_ot + config.eta * out.l_con;
  out.grad_zs = normalize_rows_backward(cm.source, grad_us);
  out.grad_zt = normalize_rows_backward(cm.target, grad_ut);
  return out;
}

AlignResult align_step(const Matrix& zs, const Matrix& zt, const AlignConfig& config) {
  config.validate();
  const CostMatrix cm = cost_matrix(zs, zt);
  Coupling coupling = sinkhorn_solve(cm.cost, config.sinkhorn);
  AlignResult out = align_with_plan(zs, zt, coupling.plan, config);
  out.coupling = std::move(coupling);
  return out;
}

}  // namespace scot
