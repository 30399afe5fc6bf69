#include "scot/eval.hpp"

#include <algorithm>
#include <cmath>

#include "scot/error.hpp"
#include "scot/sinkhorn.hpp"

namespace scot {

Vector RidgeModel::predict(const Matrix& z) const {
  if (z.cols() != weights.size()) throw InputError("ridge predict: dimension mismatch");
  return (z * weights).array() + bias;
}

RidgeModel ridge_fit(const Matrix& z, const Vector& y, double alpha, bool centered) {
  if (z.rows() != y.size() || z.rows() == 0) throw InputError("ridge_fit: rows(Z) != len(y)");
  if (!(alpha > 0.0)) throw InputError("ridge_fit: alpha must be positive");
  if (!z.allFinite() || !y.allFinite()) throw InputError("ridge_fit: non-finite inputs");

  RidgeModel model;
  model.alpha = alpha;
  model.centered = centered;
  Vector z_mean = Vector::Zero(z.cols());
  double y_mean = 0.0;
  if (centered) {
    z_mean = z.colwise().mean().transpose();
    y_mean = y.mean();
  }
  const Matrix zc = z.rowwise() - z_mean.transpose();
  const Vector yc = y.array() - y_mean;
  Matrix gram = zc.transpose() * zc;
  gram.diagonal().array() += alpha;
  const Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericalError("ridge_fit: factorization failed");
  model.weights = llt.solve(zc.transpose() * yc);
  model.bias = centered ? y_mean - z_mean.dot(model.weights) : 0.0;
  return model;
}

TransferMetrics transfer_metrics(const Vector& predicted, const Vector& y) {
  if (predicted.size() != y.size() || y.size() == 0) {
    throw InputError("transfer_metrics: shape mismatch");
  }
  TransferMetrics m;
  const Vector err = (predicted - y).cwiseAbs();
  m.mae = err.mean();
  double pct = 0.0;
  Index used = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) == 0.0) {
      ++m.excluded;
      continue;
    }
    pct += err(i) / std::abs(y(i));
    ++used;
  }
  if (used == 0) throw InputError("transfer_metrics: MAPE undefined, every target is zero");
  m.mape = 100.0 * pct / static_cast<double>(used);
  return m;
}

TransferMetrics transfer_metrics(const RidgeModel& model, const Matrix& z_target,
                                 const Vector& y_target) {
  if (z_target.rows() != y_target.size()) throw InputError("transfer_metrics: shape mismatch");
  return transfer_metrics(model.predict(z_target), y_target);
}

MatchingMetrics matching_metrics(const Matrix& plan, const std::vector<Index>& true_match) {
  if (plan.rows() != static_cast<Index>(true_match.size())) {
    throw InputError("matching_metrics: coupling rows do not match the truth length");
  }
  MatchingMetrics m;
  const auto nt = static_cast<double>(plan.cols());
  double hits = 0.0;
  double lift = 0.0;
  for (Index i = 0; i < plan.rows(); ++i) {
    const Index j = true_match[static_cast<std::size_t>(i)];
    if (j < 0) continue;
    if (j >= plan.cols()) throw InputError("matching_metrics: truth index out of range");
    ++m.matched;
    Index best = 0;
    const double top = plan.row(i).maxCoeff(&best);  // first maximum = lowest index
    if ((plan.row(i).array() == top).count() > 1) ++m.ties;
    if (best == j) hits += 1.0;
    const double row_mass = plan.row(i).sum();
    if (row_mass > 0.0) lift += plan(i, j) / (row_mass / nt);
  }
  if (m.matched > 0) {
    m.top1_acc = hits / static_cast<double>(m.matched);
    m.mean_true_mass_ratio = lift / static_cast<double>(m.matched);
  }
  return m;
}

double LinearFunctional::operator()(const Eigen::Ref<const Vector>& x) const {
  return std::clamp(weights.dot(x), lower, upper);
}

BoundReport verify_bound(const BoundInstance& inst) {
  const Index ns = inst.u.rows();
  const Index nt = inst.v.rows();
  const Index d = inst.u.cols();
  if (inst.v.cols() != d || inst.a.size() != ns || inst.b.size() != nt || inst.plan.rows() != ns ||
      inst.plan.cols() != nt || inst.g.weights.size() != d || inst.h.weights.size() != d) {
    throw InputError("verify_bound: shape mismatch");
  }
  if (!(inst.tau > 0.0)) throw InputError("verify_bound: tau must be positive");
  for (Index i = 0; i < ns; ++i)
    if (std::abs(inst.u.row(i).norm() - 1.0) > 1e-9) throw InputError("verify_bound: u not unit");
  for (Index j = 0; j < nt; ++j)
    if (std::abs(inst.v.row(j).norm() - 1.0) > 1e-9) throw InputError("verify_bound: v not unit");
  if ((inst.plan.array() < 0.0).any()) throw InputError("verify_bound: negative coupling");
  const double row_err = (inst.plan.rowwise().sum() - inst.a).cwiseAbs().maxCoeff();
  const double col_err = (inst.plan.colwise().sum().transpose() - inst.b).cwiseAbs().maxCoeff();
  if (row_err > 1e-6 || col_err > 1e-6) {
    throw InputError("verify_bound: coupling marginals deviate from (a, b) by " +
                     std::to_string(std::max(row_err, col_err)));
  }
  if (std::abs(inst.a.sum() - 1.0) > 1e-6 || std::abs(inst.b.sum() - 1.0) > 1e-6) {
    throw InputError("verify_bound: a and b must be probability vectors");
  }

  BoundReport r;
  const double tau = inst.tau;
  const Matrix cos = inst.u * inst.v.transpose();
  r.expected_cosine = (inst.plan.array() * cos.array()).sum();
  r.entropy_a = normalized_entropy(inst.a);

  for (Index i = 0; i < ns; ++i) {
    const double ai = inst.a(i);
    if (!(ai > 0.0)) continue;
    const Eigen::ArrayXd s = (cos.row(i).array() / tau).transpose();
    const double m = s.maxCoeff();
    const double log_partition = m + std::log((s - m).exp().sum());
    const double log_weighted =
        m + std::log((inst.plan.row(i).array().transpose() * (s - m).exp()).sum());
    const double term = -(log_weighted - log_partition);
    r.l_con += ai * term;
    r.l_con_normalized += ai * (term + std::log(ai));
  }

  r.m_lower = std::max(-1.0, tau * std::log(static_cast<double>(nt)) + tau * r.entropy_a -
                                 tau * r.l_con - 1.0 - 1.0 / (2.0 * tau));

  for (Index i = 0; i < ns; ++i) {
    r.source_risk += inst.a(i) * std::abs(inst.h(inst.u.row(i).transpose()) -
                                          inst.g(inst.u.row(i).transpose()));
  }
  for (Index j = 0; j < nt; ++j) {
    r.lhs += inst.b(j) * std::abs(inst.h(inst.v.row(j).transpose()) -
                                  inst.g(inst.v.row(j).transpose()));
  }
  const double lipschitz = inst.h.lipschitz() + inst.g.lipschitz();
  r.rhs = r.source_risk + lipschitz * std::sqrt(std::max(0.0, 2.0 - 2.0 * r.m_lower));
  r.holds = r.lhs <= r.rhs + 1e-9;
  r.intermediate_holds = r.m_lower <= r.expected_cosine + 1e-9;
  return r;
}

double m_lower_with_normalized_con(const BoundReport& report, double tau, Index n_t) {
  return std::max(-1.0, tau * std::log(static_cast<double>(n_t)) + tau * report.entropy_a -
                            tau * report.l_con_normalized - 1.0 - 1.0 / (2.0 * tau));
}

}  // namespace scot
