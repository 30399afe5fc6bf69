#include "scot/hub.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scot/align.hpp"
#include "scot/error.hpp"

namespace scot {

std::string to_string(PriorMode mode) {
  switch (mode) {
    case PriorMode::kUniform:
      return "uniform";
    case PriorMode::kFrozen:
      return "frozen";
    case PriorMode::kAdaptive:
      return "adaptive";
  }
  return "adaptive";
}

PriorMode parse_prior_mode(const std::string& text) {
  if (text == "uniform") return PriorMode::kUniform;
  if (text == "frozen") return PriorMode::kFrozen;
  if (text == "adaptive") return PriorMode::kAdaptive;
  throw InputError("unknown prior mode '" + text + "' (expected uniform|frozen|adaptive)");
}

void HubConfig::validate() const {
  if (prototypes < 2) throw InputError("hub: need at least 2 prototypes");
  if (!(tau_b > 0.0)) throw InputError("hub: tau_b must be positive");
  if (!(eps_b > 0.0)) throw InputError("hub: eps_b must be positive");
  if (!(tau > 0.0)) throw InputError("hub: tau must be positive");
  if (!(lambda_c >= 0.0) || !(lambda_hub >= 0.0)) {
    throw InputError("hub: lambda_c and lambda_hub must be nonnegative");
  }
  if (frozen_epoch < 1) throw InputError("hub: frozen_epoch must be >= 1");
  sinkhorn.validate();
}

Vector target_prior(const Matrix& zt_unit, const Matrix& prototypes_unit, double tau_b,
                    double eps_b) {
  if (!(tau_b > 0.0) || !(eps_b > 0.0)) {
    throw InputError("target_prior: tau_b and eps_b must be positive");
  }
  if (zt_unit.cols() != prototypes_unit.cols() || zt_unit.rows() == 0) {
    throw InputError("target_prior: shape mismatch");
  }
  const Vector mean_sim = prototypes_unit * zt_unit.colwise().mean().transpose();
  // exp(s/tau_b) can overflow for tiny tau_b; take the max in log space and
  // shift by the largest term before normalizing.
  const double log_floor = std::log(eps_b);
  Vector logits(mean_sim.size());
  for (Index k = 0; k < logits.size(); ++k) logits(k) = std::max(mean_sim(k) / tau_b, log_floor);
  const double m = logits.maxCoeff();
  Vector b = (logits.array() - m).exp().matrix();
  return b / b.sum();
}

HubState init_hub(const std::vector<Matrix>& embeddings, const HubConfig& config,
                  std::mt19937_64& rng) {
  config.validate();
  if (embeddings.empty()) throw InputError("init_hub: no embeddings");
  const Index d = embeddings.front().cols();
  Index total = 0;
  for (const auto& z : embeddings) {
    if (z.cols() != d) throw InputError("init_hub: embedding dimensions differ");
    total += z.rows();
  }
  Matrix pool(total, d);
  Index row = 0;
  for (const auto& z : embeddings) {
    pool.middleRows(row, z.rows()) = normalize_rows(z).unit;
    row += z.rows();
  }

  const Index k_total = config.prototypes;
  HubState hub;
  hub.prior_mode = config.prior_mode;
  hub.tau_b = config.tau_b;
  hub.eps_b = config.eps_b;
  hub.prototypes.resize(k_total, d);

  std::uniform_int_distribution<Index> first(0, total - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector nearest = Vector::Constant(total, std::numeric_limits<double>::infinity());
  Index chosen = 0;
  for (; chosen < k_total; ++chosen) {
    Index pick = 0;
    if (chosen == 0) {
      pick = first(rng);
    } else {
      const double mass = nearest.sum();
      if (!(mass > 1e-12)) break;
      double r = unit(rng) * mass;
      pick = total - 1;
      for (Index i = 0; i < total; ++i) {
        r -= nearest(i);
        if (r <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    hub.prototypes.row(chosen) = pool.row(pick);
    for (Index i = 0; i < total; ++i) {
      nearest(i) = std::min(nearest(i), (pool.row(i) - pool.row(pick)).squaredNorm());
    }
  }
  for (; chosen < k_total; ++chosen) {
    for (Index c = 0; c < d; ++c) hub.prototypes(chosen, c) = normal(rng);
    hub.prototypes.row(chosen).normalize();
  }
  hub.b = Vector::Constant(k_total, 1.0 / static_cast<double>(k_total));
  return hub;
}

void refresh_prior(HubState& hub, const Matrix& zt, int epoch, int frozen_epoch) {
  const Index k_total = hub.size();
  switch (hub.prior_mode) {
    case PriorMode::kUniform:
      hub.b = Vector::Constant(k_total, 1.0 / static_cast<double>(k_total));
      return;
    case PriorMode::kAdaptive:
      hub.b = target_prior(normalize_rows(zt).unit, normalize_rows(hub.prototypes).unit,
                           hub.tau_b, hub.eps_b);
      return;
    case PriorMode::kFrozen:
      if (!hub.frozen_b) {
        hub.b = target_prior(normalize_rows(zt).unit, normalize_rows(hub.prototypes).unit,
                             hub.tau_b, hub.eps_b);
        if (epoch >= frozen_epoch) hub.frozen_b = hub.b;
      } else {
        hub.b = *hub.frozen_b;
      }
      return;
  }
}

double kl_to_uniform(const Eigen::Ref<const Vector>& mass) {
  const double total = mass.sum();
  if (!(total > 0.0)) throw InputError("kl_to_uniform: zero mass");
  const double k_total = static_cast<double>(mass.size());
  double kl = 0.0;
  for (Index k = 0; k < mass.size(); ++k) {
    const double p = mass(k) / total;
    if (p > 0.0) kl += p * std::log(p * k_total);
  }
  return kl;
}

HubCityResult hub_objective_with_plan(const Matrix& z, const Matrix& prototypes,
                                      const Matrix& plan, const HubConfig& config,
                                      const CycleParams& cycle) {
  const Index n = z.rows();
  const Index k_total = prototypes.rows();
  if (plan.rows() != n || plan.cols() != k_total) {
    throw InputError("hub: coupling shape does not match city x prototypes");
  }
  HubCityResult out;
  const CostMatrix cm = cost_matrix(z, prototypes);
  out.cost = cm.cost;

  out.assignment = plan;
  for (Index i = 0; i < n; ++i) {
    const double mass = plan.row(i).sum();
    if (mass > 0.0) out.assignment.row(i) /= mass;
  }

  out.l_ot = ot_loss(plan, cm.cost);
  Matrix grad_uz;
  Matrix grad_ua;
  cost_backward(cm.cost, cm.source.unit, cm.target.unit,
                plan / static_cast<double>(std::min(n, k_total)), grad_uz, grad_ua);

  const auto con = contrastive_loss(out.assignment, cm.source.unit, cm.target.unit, config.tau);
  out.l_con = con.loss;
  grad_uz += config.lambda_c * con.grad_s;
  grad_ua += config.lambda_c * con.grad_t;
  out.l_align = out.l_ot + config.lambda_c * out.l_con;
  out.grad_z_align = normalize_rows_backward(cm.source, grad_uz);
  out.grad_proto_align = normalize_rows_backward(cm.target, grad_ua);

  out.l_hub = kl_to_uniform(plan.colwise().sum().transpose());

  CycleParams hub_cycle = cycle;
  hub_cycle.normalize_by_n2 = true;
  const CycleResult rec = cycle_loss(z, prototypes, hub_cycle);
  out.l_cyc = rec.l_cyc;
  out.r_ent = rec.r_ent;
  out.l_rec = rec.l_rec;
  out.grad_z_rec = rec.grad_zs;
  out.grad_proto_rec = rec.grad_zt;
  out.grad_wq = rec.grad_wq;
  out.grad_wk = rec.grad_wk;
  return out;
}

HubCityResult hub_align_city(const Matrix& z, const HubState& hub, const HubConfig& config,
                             const CycleParams& cycle) {
  config.validate();
  if (hub.b.size() != hub.size() || std::abs(hub.b.sum() - 1.0) > 1e-9) {
    throw InputError("hub: prototype marginal must be a length-K simplex vector");
  }
  const CostMatrix cm = cost_matrix(z, hub.prototypes);
  const Vector a = Vector::Constant(z.rows(), 1.0 / static_cast<double>(z.rows()));
  Coupling coupling = sinkhorn_solve(cm.cost, config.sinkhorn, a, hub.b);
  HubCityResult out = hub_objective_with_plan(z, hub.prototypes, coupling.plan, config, cycle);
  out.coupling = std::move(coupling);
  return out;
}

HubUsage hub_usage_diagnostics(const Matrix& plan) {
  if ((plan.array() < 0.0).any()) throw InputError("hub_usage: negative coupling entries");
  const double total = plan.sum();
  if (!(total > 0.0)) throw InputError("hub_usage: coupling has zero mass");
  HubUsage u;
  u.mass = plan.colwise().sum().transpose() / total;
  u.entropy = normalized_entropy(u.mass);
  const auto k_total = static_cast<double>(plan.cols());
  u.entropy_normalized = k_total > 1 ? u.entropy / std::log(k_total) : 0.0;
  u.effective_count = std::exp(u.entropy);
  return u;
}

}  // namespace scot
