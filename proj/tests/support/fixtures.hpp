#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "scot/align.hpp"
#include "scot/citydata.hpp"
#include "scot/eval.hpp"
#include "scot/sinkhorn.hpp"

namespace scot::testing {

inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng, double std = 1.0) {
  std::normal_distribution<double> nd(0.0, std);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

inline Matrix unit_rows(Matrix m) {
  for (Index i = 0; i < m.rows(); ++i) m.row(i).normalize();
  return m;
}

inline Vector random_simplex(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(0.05, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = ud(rng);
  return v / v.sum();
}

/// Cosine-distance cost between random Gaussian point clouds, entries in [0, 2].
inline Matrix random_cost(Index rows, Index cols, std::mt19937_64& rng, Index dim = 4) {
  const Matrix xs = gaussian_matrix(rows, dim, rng);
  const Matrix xt = gaussian_matrix(cols, dim, rng);
  return cost_matrix(xs, xt).cost;
}

/// Brute-force optimum of (1/n) Σ_i C[i, σ(i)] over all permutations σ.
inline double brute_force_assignment(const Matrix& cost) {
  const Index n = cost.rows();
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, total / static_cast<double>(n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Unit-weight linear functional clipped to a random symmetric band, so its
/// Lipschitz constant is exactly 1.
inline LinearFunctional random_functional(Index d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> band(0.3, 1.0);
  LinearFunctional f;
  f.weights = gaussian_matrix(d, 1, rng).col(0).normalized();
  f.upper = band(rng);
  f.lower = -f.upper;
  return f;
}

/// Random instance for the OT-weighted contrastive transfer bound: unit
/// embeddings, random marginals and an entropic coupling between them.
inline BoundInstance random_bound_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> size(2, 12);
  std::uniform_int_distribution<Index> dims(2, 6);
  std::uniform_real_distribution<double> eps(0.05, 1.0);
  const double taus[] = {0.1, 0.5, 1.0};
  std::uniform_int_distribution<int> pick(0, 2);

  BoundInstance inst;
  const Index ns = size(rng);
  const Index nt = size(rng);
  const Index d = dims(rng);
  inst.u = unit_rows(gaussian_matrix(ns, d, rng));
  inst.v = unit_rows(gaussian_matrix(nt, d, rng));
  inst.a = random_simplex(ns, rng);
  inst.b = random_simplex(nt, rng);
  SinkhornConfig cfg;
  cfg.epsilon = eps(rng);
  cfg.max_iters = 20000;
  cfg.tol = 1e-12;
  const Matrix cost = cost_matrix(inst.u, inst.v).cost;
  inst.plan = sinkhorn_solve(cost, cfg, inst.a, inst.b).plan;
  inst.tau = taus[pick(rng)];
  inst.g = random_functional(d, rng);
  inst.h = random_functional(d, rng);
  return inst;
}

/// Central finite differences of a scalar function of one matrix argument.
template <typename F>
Matrix numeric_gradient(F&& f, Matrix x, double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      const double orig = x(i, j);
      x(i, j) = orig + h;
      const double up = f(x);
      x(i, j) = orig - h;
      const double down = f(x);
      x(i, j) = orig;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

/// Max entrywise |a - b| / max(|a|, |b|, floor).
inline double max_rel_diff(const Matrix& a, const Matrix& b, double floor = 1e-6) {
  double worst = 0.0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) {
      const double scale = std::max({std::abs(a(i, j)), std::abs(b(i, j)), floor});
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / scale);
    }
  return worst;
}

/// Random row-stochastic matrix with strictly positive entries.
inline Matrix random_stochastic(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(0.05, 1.0);
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) m(i, j) = ud(rng);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

/// Random permutation of 0..n-1.
inline std::vector<Index> random_permutation(Index n, std::mt19937_64& rng) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

struct TwinFamily {
  std::vector<CityGraph> sources;
  CityGraph target;
};

/// Two sources sharing one target's latents: the twin source and a relabeled
/// copy of it.
inline TwinFamily twin_family(std::uint64_t seed, double noise_sigma = 0.0,
                              Index latent_dim = 8) {
  TwinCityParams p;
  p.seed = seed;
  p.latent_dim = latent_dim;
  p.noise_sigma = noise_sigma;
  TwinCityTruth twins = gen_twin_cities(p);
  std::mt19937_64 rng(seed * 7919 + 17);
  TwinFamily fam;
  fam.sources.push_back(twins.source);
  fam.sources.push_back(
      permute_city(twins.source, random_permutation(twins.source.size(), rng), "source1"));
  fam.target = twins.target;
  return fam;
}

}  // namespace scot::testing
