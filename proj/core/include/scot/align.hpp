#pragma once

#include "scot/sinkhorn.hpp"
#include "scot/types.hpp"

namespace scot {

struct AlignConfig {
  double eta = 0.5;  // contrastive weight
  double tau = 0.1;  // similarity temperature
  double ot_weight = 1.0;  // 0 drops L_OT from L_Align
  SinkhornConfig sinkhorn;

  void validate() const;
};

/// Row-normalized embeddings and their original norms.
struct RowNormalized {
  Matrix unit;
  Vector norms;
};

/// Throws NumericalError naming the first zero-norm row.
RowNormalized normalize_rows(const Matrix& z, const char* what = "embedding");

/// Pulls a gradient w.r.t. unit rows back to the raw rows.
Matrix normalize_rows_backward(const RowNormalized& normalized, const Matrix& grad_unit);

struct CostMatrix {
  Matrix cost;  // C_ij = ||ẑs_i - ẑt_j||, in [0, 2]
  RowNormalized source;
  RowNormalized target;
};

CostMatrix cost_matrix(const Matrix& zs, const Matrix& zt);

/// Given dL/dC, gradients w.r.t. the unit rows on each side.
void cost_backward(const Matrix& cost, const Matrix& unit_s, const Matrix& unit_t,
                   const Matrix& grad_cost, Matrix& grad_unit_s, Matrix& grad_unit_t);

/// <P, C> / min(n_s, n_t).
double ot_loss(const Matrix& plan, const Matrix& cost);

struct ContrastiveResult {
  double loss = 0.0;
  Matrix grad_s;  // w.r.t. unit source rows
  Matrix grad_t;  // w.r.t. unit target rows
  Index skipped_rows = 0;
};

/// -(1/n_s) Σ_i log( Σ_j P_ij e^{S_ij} / Σ_j e^{S_ij} ),  S = ẑs ẑtᵀ / tau.
/// P is treated as a constant. Rows of P with zero mass contribute 0 and are
/// counted in skipped_rows; if every row is empty the coupling is rejected.
ContrastiveResult contrastive_loss(const Matrix& plan, const Matrix& unit_s, const Matrix& unit_t,
                                   double tau);

struct AlignResult {
  double l_ot = 0.0;
  double l_con = 0.0;
  double l_align = 0.0;  // ot_weight * l_ot + eta * l_con
  Coupling coupling;
  Matrix grad_zs;
  Matrix grad_zt;
  Index skipped_rows = 0;
};

/// L_Align = ot_weight L_OT + eta L_Con and its gradients with `plan` held fixed.
AlignResult align_with_plan(const Matrix& zs, const Matrix& zt, const Matrix& plan,
                            const AlignConfig& config);

/// cost_matrix -> sinkhorn_solve -> align_with_plan.
AlignResult align_step(const Matrix& zs, const Matrix& zt, const AlignConfig& config);

}  // namespace scot
