#include "scot/sinkhorn.hpp"

#include <cmath>
#include <limits>

#include "scot/error.hpp"

namespace scot {

std::string to_string(MarginalMode mode) {
  return mode == MarginalMode::kOnes ? "ones" : "uniform";
}

MarginalMode parse_marginal_mode(const std::string& text) {
  if (text == "ones") return MarginalMode::kOnes;
  if (text == "uniform") return MarginalMode::kUniform;
  throw InputError("unknown marginal mode '" + text + "' (expected ones|uniform)");
}

void SinkhornConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InputError("sinkhorn: epsilon must be positive");
  }
  if (max_iters < 1) throw InputError("sinkhorn: max_iters must be >= 1");
  if (!(tol >= 0.0)) throw InputError("sinkhorn: tol must be >= 0");
  if (unbalanced_rho && !(*unbalanced_rho > 0.0)) {
    throw InputError("sinkhorn: unbalanced rho must be positive");
  }
}

Matrix gibbs_kernel(const Matrix& cost, double epsilon) {
  if (!(epsilon > 0.0)) throw InputError("gibbs_kernel: epsilon must be positive");
  return (-cost.array() / epsilon).exp().matrix();
}

namespace {

double log_sum_exp(const Eigen::Ref<const Vector>& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

struct Marginals {
  Vector a;
  Vector b;
};

Marginals resolve_marginals(Index ns, Index nt, const SinkhornConfig& config,
                            const std::optional<Vector>& a, const std::optional<Vector>& b) {
  Marginals m;
  const bool uniform = config.marginal_mode == MarginalMode::kUniform;
  m.a = a ? *a : Vector::Constant(ns, uniform ? 1.0 / static_cast<double>(ns) : 1.0);
  m.b = b ? *b : Vector::Constant(nt, uniform ? 1.0 / static_cast<double>(nt) : 1.0);
  if (m.a.size() != ns || m.b.size() != nt) {
    throw InputError("sinkhorn: marginal sizes do not match the cost matrix");
  }
  if (m.a.minCoeff() < 0.0 || m.b.minCoeff() < 0.0 || !m.a.allFinite() || !m.b.allFinite()) {
    throw InputError("sinkhorn: marginals must be finite and nonnegative");
  }
  // Explicit marginals must be feasible in balanced mode. The default
  // all-ones pair on a rectangular problem is the literal fixed-T iteration
  // and is allowed to run without converging.
  if ((a || b) && !config.unbalanced_rho) {
    const double sa = m.a.sum();
    const double sb = m.b.sum();
    if (std::abs(sa - sb) > 1e-9 * std::max(1.0, std::max(sa, sb))) {
      throw InputError("sinkhorn: infeasible marginals, sum(a)=" + std::to_string(sa) +
                       " != sum(b)=" + std::to_string(sb));
    }
  }
  return m;
}

void finalize_residuals(Coupling& c, const Marginals& m) {
  c.total_mass = c.plan.sum();
  c.row_residual = (c.plan.rowwise().sum() - m.a).cwiseAbs().maxCoeff();
  c.col_residual = (c.plan.colwise().sum().transpose() - m.b).cwiseAbs().maxCoeff();
}

Coupling solve_scaling(const Matrix& cost, const SinkhornConfig& config, const Marginals& m,
                       bool& underflow) {
  const Matrix kernel = gibbs_kernel(cost, config.epsilon);
  const Index ns = cost.rows();
  const Index nt = cost.cols();
  const double power =
      config.unbalanced_rho ? *config.unbalanced_rho / (*config.unbalanced_rho + config.epsilon)
                            : 1.0;
  underflow = false;
  if ((kernel.rowwise().maxCoeff().array() <= std::numeric_limits<double>::min()).any() ||
      (kernel.colwise().maxCoeff().array() <= std::numeric_limits<double>::min()).any()) {
    underflow = true;
    return {};
  }

  Vector u = Vector::Ones(ns);
  Vector v = Vector::Ones(nt);
  Coupling c;
  Vector kv = kernel * v;
  for (int it = 0; it < config.max_iters; ++it) {
    u = (m.a.array() / kv.array()).pow(power).matrix();
    const Vector ktu = kernel.transpose() * u;
    v = (m.b.array() / ktu.array()).pow(power).matrix();
    kv = kernel * v;
    c.iters_used = it + 1;
    if (!u.allFinite() || !v.allFinite() || (kv.array() <= 0.0).any()) {
      underflow = true;
      return {};
    }
    if (config.tol > 0.0) {
      const double row_res = (u.array() * kv.array() - m.a.array()).abs().maxCoeff();
      const double col_res = (v.array() * ktu.array() - m.b.array()).abs().maxCoeff();
      if (std::max(row_res, col_res) < config.tol) break;
    }
  }
  c.plan = u.asDiagonal() * kernel * v.asDiagonal();
  c.u = u;
  c.v = v;
  c.log_u = u.array().log().matrix();
  c.log_v = v.array().log().matrix();
  return c;
}

// Same iteration on dual potentials f = eps log u, g = eps log v.
Coupling solve_log(const Matrix& cost, const SinkhornConfig& config, const Marginals& m) {
  const Index ns = cost.rows();
  const Index nt = cost.cols();
  const double eps = config.epsilon;
  const double power =
      config.unbalanced_rho ? *config.unbalanced_rho / (*config.unbalanced_rho + eps) : 1.0;
  const Vector log_a = m.a.array().log().matrix();
  const Vector log_b = m.b.array().log().matrix();
  const Matrix scaled = -cost / eps;

  Vector f = Vector::Zero(ns);
  Vector g = Vector::Zero(nt);
  Vector buf_t(nt);
  Vector buf_s(ns);
  Coupling c;
  c.used_log_domain = true;

  auto row_lse = [&](Index i) {
    buf_t = scaled.row(i).transpose() + g / eps;
    return log_sum_exp(buf_t);
  };
  auto col_lse = [&](Index j) {
    buf_s = scaled.col(j) + f / eps;
    return log_sum_exp(buf_s);
  };

  for (int it = 0; it < config.max_iters; ++it) {
    for (Index i = 0; i < ns; ++i) f(i) = power * eps * (log_a(i) - row_lse(i));
    Vector col_log_mass(nt);
    for (Index j = 0; j < nt; ++j) {
      const double lse = col_lse(j);
      col_log_mass(j) = lse;
      g(j) = power * eps * (log_b(j) - lse);
    }
    c.iters_used = it + 1;
    if (config.tol > 0.0) {
      double row_res = 0.0;
      for (Index i = 0; i < ns; ++i) {
        row_res = std::max(row_res, std::abs(std::exp(f(i) / eps + row_lse(i)) - m.a(i)));
      }
      double col_res = 0.0;
      for (Index j = 0; j < nt; ++j) {
        col_res = std::max(col_res,
                           std::abs(std::exp(g(j) / eps + col_log_mass(j)) - m.b(j)));
      }
      if (std::max(row_res, col_res) < config.tol) break;
    }
  }
  c.plan.resize(ns, nt);
  for (Index i = 0; i < ns; ++i)
    for (Index j = 0; j < nt; ++j) c.plan(i, j) = std::exp((f(i) + g(j)) / eps + scaled(i, j));
  c.log_u = f / eps;
  c.log_v = g / eps;
  c.u = c.log_u.array().exp().matrix();
  c.v = c.log_v.array().exp().matrix();
  return c;
}

}  // namespace

Coupling sinkhorn_solve(const Matrix& cost, const SinkhornConfig& config,
                        const std::optional<Vector>& a, const std::optional<Vector>& b) {
  config.validate();
  if (cost.size() == 0) throw InputError("sinkhorn: empty cost matrix");
  if (!cost.allFinite()) throw InputError("sinkhorn: cost matrix has non-finite entries");
  const Marginals m = resolve_marginals(cost.rows(), cost.cols(), config, a, b);

  bool use_log = config.log_domain || (config.auto_log_domain && config.epsilon < 0.05);
  Coupling c;
  if (!use_log) {
    bool underflow = false;
    c = solve_scaling(cost, config, m, underflow);
    if (underflow) {
      if (!config.auto_log_domain) {
        throw StabilityError(
            "sinkhorn: Gibbs kernel underflow (cost range too wide for epsilon=" +
            std::to_string(config.epsilon) + "); enable log_domain");
      }
      use_log = true;
    }
  }
  if (use_log) c = solve_log(cost, config, m);
  finalize_residuals(c, m);
  return c;
}

double normalized_entropy(const Eigen::Ref<const Vector>& weights) {
  const double total = weights.sum();
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (Index k = 0; k < weights.size(); ++k) {
    const double p = weights(k) / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

CouplingDiagnostics coupling_diagnostics(const Matrix& plan) {
  if (plan.size() == 0) throw InputError("coupling_diagnostics: empty coupling");
  if ((plan.array() < 0.0).any() || !plan.allFinite()) {
    throw InputError("coupling_diagnostics: coupling must be finite and nonnegative");
  }
  CouplingDiagnostics d;
  d.total_mass = plan.sum();
  if (!(d.total_mass > 0.0)) throw InputError("coupling_diagnostics: coupling has zero mass");

  const Index rows = plan.rows();
  const Index cols = plan.cols();
  d.row_marginals = plan.rowwise().sum();
  d.col_marginals = plan.colwise().sum().transpose();
  d.row_entropies.resize(rows);
  d.row_max.resize(rows);
  d.col_entropies.resize(cols);
  for (Index i = 0; i < rows; ++i) {
    const double mass = d.row_marginals(i);
    if (mass > 0.0) {
      d.row_entropies(i) = normalized_entropy(plan.row(i).transpose());
      d.row_max(i) = plan.row(i).maxCoeff() / mass;
    } else {
      d.row_entropies(i) = 0.0;
      d.row_max(i) = 0.0;
      ++d.zero_rows;
    }
  }
  for (Index j = 0; j < cols; ++j) d.col_entropies(j) = normalized_entropy(plan.col(j));

  d.q_max = d.row_max.mean();
  d.q_ent = d.row_entropies.mean();
  d.q_ent_normalized = cols > 1 ? d.q_ent / std::log(static_cast<double>(cols)) : 0.0;
  return d;
}

}  // namespace scot
