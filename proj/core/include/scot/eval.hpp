#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "scot/types.hpp"

namespace scot {

struct RidgeModel {
  Vector weights;
  double bias = 0.0;
  double alpha = 1.0;
  bool centered = true;

  Vector predict(const Matrix& z) const;
};

/// Closed-form ridge readout. Centered (default): w = (ZcᵀZc + αI)⁻¹ Zcᵀ yc,
/// bias = ȳ - z̄·w. Uncentered: no intercept, bias = 0.
RidgeModel ridge_fit(const Matrix& z, const Vector& y, double alpha = 1.0, bool centered = true);

struct TransferMetrics {
  double mae = 0.0;
  double mape = 0.0;   // percent, over nonzero targets
  Index excluded = 0;  // zero targets left out of MAPE
};

TransferMetrics transfer_metrics(const RidgeModel& model, const Matrix& z_target,
                                 const Vector& y_target);
TransferMetrics transfer_metrics(const Vector& predicted, const Vector& y_target);

struct MatchingMetrics {
  double top1_acc = 0.0;
  double mean_true_mass_ratio = 0.0;  // lift over the uniform row
  Index matched = 0;
  Index ties = 0;  // rows whose argmax was not unique (lowest index taken)
};

/// Compares a coupling's rows with a known correspondence (-1 = unmatched).
MatchingMetrics matching_metrics(const Matrix& plan, const std::vector<Index>& true_match);

/// Linear functional x -> w·x, optionally clipped to [lower, upper]. Clipping
/// does not increase the Lipschitz constant ||w||.
struct LinearFunctional {
  Vector weights;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  double operator()(const Eigen::Ref<const Vector>& x) const;
  double lipschitz() const { return weights.norm(); }
};

struct BoundInstance {
  Matrix u;  // n_s x d unit rows
  Matrix v;  // n_t x d unit rows
  Vector a;
  Vector b;
  Matrix plan;  // marginals (a, b)
  double tau = 0.5;
  LinearFunctional g;
  LinearFunctional h;
};

struct BoundReport {
  double lhs = 0.0;  // target risk R_t^b
  double source_risk = 0.0;
  double rhs = 0.0;  // R_s^a + (L_h + L_g) sqrt(2 - 2 m_lower)
  double l_con = 0.0;  // Σ a_i [-log Σ_j P_ij e^{S_ij} / Σ_k e^{S_ik}]
  double l_con_normalized = 0.0;  // same with a_i inside the log denominator
  double entropy_a = 0.0;
  double m_lower = 0.0;
  double expected_cosine = 0.0;  // E_{(I,J)~P} <u_I, v_J>
  bool holds = false;              // lhs <= rhs + 1e-9
  bool intermediate_holds = false;  // m_lower <= expected_cosine + 1e-9
};

/// Evaluates the OT-weighted contrastive transfer bound on one instance.
/// m_lower = max(-1, τ log n_t + τ H(a) - τ l_con - 1 - 1/(2τ)).
BoundReport verify_bound(const BoundInstance& inst);

/// Same quantity with the a_i-normalized contrastive term (l_con_normalized)
/// paired with +τ H(a). Kept to document that this pairing is not a valid bound.
double m_lower_with_normalized_con(const BoundReport& report, double tau, Index n_t);

}  // namespace scot
