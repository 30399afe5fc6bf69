#pragma once

#include <random>
#include <string>

#include "scot/types.hpp"

namespace scot {

enum class CycleMode { kOneSided, kTwoSided };

std::string to_string(CycleMode mode);
CycleMode parse_cycle_mode(const std::string& text);

struct CycleParams {
  Matrix wq;  // d x d
  Matrix wk;  // d x d
  double beta = 0.05;
  double delta = 1e-8;
  CycleMode mode = CycleMode::kOneSided;
  bool normalize_by_n2 = false;
};

/// Wq = Wk = I + N(0, 0.01^2).
CycleParams init_cycle(Index d, std::mt19937_64& rng);

/// softmax_rows( (Zq Wqᵀ)(Zk Wkᵀ)ᵀ / sqrt(d) ).
Matrix cross_attention(const Matrix& zq, const Matrix& zk, const CycleParams& params);

struct CycleResult {
  double l_cyc = 0.0;
  double r_ent = 0.0;
  double l_rec = 0.0;
  Matrix grad_zs;
  Matrix grad_zt;
  Matrix grad_wq;
  Matrix grad_wk;
};

/// l_cyc = ||A_{s->t} A_{t->s} - I||_F^2 (optionally / n_s^2), plus the reverse
/// cycle in two-sided mode; r_ent is the mean row entropy of A_{s->t}.
CycleResult cycle_loss(const Matrix& zs, const Matrix& zt, const CycleParams& params);

}  // namespace scot
