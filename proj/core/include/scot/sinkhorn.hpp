#pragma once

#include <optional>
#include <string>

#include "scot/types.hpp"

namespace scot {

enum class MarginalMode {
  kOnes,     // a = 1_{n_s}, b = 1_{n_t}
  kUniform,  // a = 1/n_s, b = 1/n_t
};

std::string to_string(MarginalMode mode);
MarginalMode parse_marginal_mode(const std::string& text);

struct SinkhornConfig {
  double epsilon = 0.15;
  int max_iters = 100;
  double tol = 1e-6;  // 0 disables early stopping
  MarginalMode marginal_mode = MarginalMode::kOnes;
  std::optional<double> unbalanced_rho;  // KL marginal penalty
  bool log_domain = false;
  // Switch to log-domain when epsilon < 0.05 or the scaling kernel underflows.
  // When false, underflow raises StabilityError instead.
  bool auto_log_domain = true;

  void validate() const;
};

struct Coupling {
  Matrix plan;    // n_s x n_t, nonnegative
  Vector u, v;    // scaling vectors (may overflow to inf in log-domain runs)
  Vector log_u, log_v;
  int iters_used = 0;
  double row_residual = 0.0;  // max |P 1 - a|
  double col_residual = 0.0;  // max |Pᵀ 1 - b|
  double total_mass = 0.0;
  bool used_log_domain = false;
};

/// K_ij = exp(-C_ij / epsilon).
Matrix gibbs_kernel(const Matrix& cost, double epsilon);

/// Sinkhorn–Knopp scaling starting from u = v = 1 and alternating
/// u <- a / (K v), v <- b / (Kᵀ u). Marginals default per config.marginal_mode.
/// With unbalanced_rho the updates are raised to rho / (rho + epsilon).
Coupling sinkhorn_solve(const Matrix& cost, const SinkhornConfig& config,
                        const std::optional<Vector>& a = std::nullopt,
                        const std::optional<Vector>& b = std::nullopt);

struct CouplingDiagnostics {
  Vector row_entropies;  // entropy of each row-normalized row
  Vector col_entropies;  // entropy of each column-normalized column
  Vector row_marginals;
  Vector col_marginals;
  Vector row_max;  // max of each row-normalized row
  double q_max = 0.0;
  double q_ent = 0.0;
  double q_ent_normalized = 0.0;
  double total_mass = 0.0;
  Index zero_rows = 0;  // rows with no mass; their entropy is reported as 0
};

CouplingDiagnostics coupling_diagnostics(const Matrix& plan);

/// Shannon entropy of a nonnegative vector normalized to sum 1 (0 log 0 = 0).
double normalized_entropy(const Eigen::Ref<const Vector>& weights);

}  // namespace scot
