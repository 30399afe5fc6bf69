#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scot/cycle.hpp"
#include "scot/sinkhorn.hpp"
#include "scot/types.hpp"

namespace scot {

enum class PriorMode { kUniform, kFrozen, kAdaptive };

std::string to_string(PriorMode mode);
PriorMode parse_prior_mode(const std::string& text);

struct HubConfig {
  Index prototypes = 32;  // K
  double tau_b = 0.5;
  double eps_b = 1e-3;
  double lambda_c = 0.5;
  double lambda_hub = 0.1;
  double tau = 0.1;
  PriorMode prior_mode = PriorMode::kAdaptive;
  int frozen_epoch = 1;  // frozen prior is taken from this epoch's target embeddings
  // Marginals are always explicit (a = 1/n_m, b); balanced unless rho is set.
  SinkhornConfig sinkhorn;

  void validate() const;
};

struct HubState {
  Matrix prototypes;  // K x d, learnable
  Vector b;           // prototype marginal on the simplex
  PriorMode prior_mode = PriorMode::kAdaptive;
  double tau_b = 0.5;
  double eps_b = 1e-3;
  std::optional<Vector> frozen_b;

  Index size() const noexcept { return prototypes.rows(); }
};

/// s̄_k = mean_j ẑt_j·â_k;  b_k ∝ max(exp(s̄_k / tau_b), eps_b).
Vector target_prior(const Matrix& zt_unit, const Matrix& prototypes_unit, double tau_b,
                    double eps_b);

/// K-means++ seeding over the pooled unit-normalized embeddings of all cities.
/// Falls back to Gaussian directions when fewer distinct points than K exist.
HubState init_hub(const std::vector<Matrix>& embeddings, const HubConfig& config,
                  std::mt19937_64& rng);

/// Sets hub.b for `epoch` (1-based) according to the prior mode. The prior is
/// data: no gradient flows through it.
void refresh_prior(HubState& hub, const Matrix& zt, int epoch, int frozen_epoch);

struct HubCityResult {
  Coupling coupling;   // Π^m
  Matrix assignment;   // Q^m, row-normalized Π^m
  Matrix cost;
  double l_ot = 0.0;
  double l_con = 0.0;
  double l_align = 0.0;  // l_ot + lambda_c l_con
  double l_hub = 0.0;    // KL(p || 1/K), p = normalized column mass of Π^m
  double l_cyc = 0.0;
  double r_ent = 0.0;
  double l_rec = 0.0;
  // Gradients of l_align w.r.t. the city's embeddings and the prototypes.
  Matrix grad_z_align;
  Matrix grad_proto_align;
  // Gradients of l_rec.
  Matrix grad_z_rec;
  Matrix grad_proto_rec;
  Matrix grad_wq;
  Matrix grad_wk;
};

/// Aligns one city to the hub with Π held fixed (no Sinkhorn solve).
HubCityResult hub_objective_with_plan(const Matrix& z, const Matrix& prototypes,
                                      const Matrix& plan, const HubConfig& config,
                                      const CycleParams& cycle);

/// Balanced entropic OT of the city to the hub (a = 1/n_m, b = hub.b), then
/// hub_objective_with_plan. `cycle.normalize_by_n2` is forced on.
HubCityResult hub_align_city(const Matrix& z, const HubState& hub, const HubConfig& config,
                             const CycleParams& cycle);

struct HubUsage {
  Vector mass;  // p_k
  double entropy = 0.0;
  double entropy_normalized = 0.0;
  double effective_count = 0.0;
};

HubUsage hub_usage_diagnostics(const Matrix& plan);

/// KL(p || uniform) for p normalized to the simplex.
double kl_to_uniform(const Eigen::Ref<const Vector>& mass);

}  // namespace scot
