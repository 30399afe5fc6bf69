#include "scot/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <random>

#include "scot/align.hpp"
#include "scot/cycle.hpp"
#include "scot/encoder.hpp"
#include "scot/error.hpp"
#include "scot/hub.hpp"
#include "scot/sinkhorn.hpp"

namespace scot {

GradComponent parse_grad_component(const std::string& text) {
  if (text == "intra") return GradComponent::kIntra;
  if (text == "encoder") return GradComponent::kEncoder;
  if (text == "align") return GradComponent::kAlign;
  if (text == "contrastive") return GradComponent::kContrastive;
  if (text == "cycle") return GradComponent::kCycle;
  if (text == "hub") return GradComponent::kHub;
  if (text == "total") return GradComponent::kTotal;
  if (text == "all") return GradComponent::kAll;
  throw InputError("unknown gradcheck component '" + text +
                   "' (expected intra|encoder|align|contrastive|cycle|hub|total|all)");
}

std::string to_string(GradComponent component) {
  switch (component) {
    case GradComponent::kIntra: return "intra";
    case GradComponent::kEncoder: return "encoder";
    case GradComponent::kAlign: return "align";
    case GradComponent::kContrastive: return "contrastive";
    case GradComponent::kCycle: return "cycle";
    case GradComponent::kHub: return "hub";
    case GradComponent::kTotal: return "total";
    case GradComponent::kAll: return "all";
  }
  return "all";
}

bool GradcheckReport::ok() const {
  for (const auto& b : blocks)
    if (!b.finite || !(b.max_rel_error < threshold)) return false;
  return true;
}

double GradcheckReport::max_error() const {
  double m = 0.0;
  for (const auto& b : blocks) m = std::max(m, b.max_rel_error);
  return m;
}

std::vector<std::string> GradcheckReport::failing_blocks() const {
  std::vector<std::string> out;
  for (const auto& b : blocks)
    if (!b.finite || !(b.max_rel_error < threshold)) out.push_back(b.block);
  return out;
}

double relative_error(const Matrix& analytic, const Matrix& numeric) {
  const double scale = std::max(analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff());
  const double floor = 1e-4 * scale + 1e-10;
  double worst = 0.0;
  for (Index i = 0; i < analytic.rows(); ++i) {
    for (Index j = 0; j < analytic.cols(); ++j) {
      const double a = analytic(i, j);
      const double f = numeric(i, j);
      const double denom = std::max({std::abs(a), std::abs(f), floor});
      worst = std::max(worst, std::abs(a - f) / denom);
    }
  }
  return worst;
}

namespace {

using Objective = std::function<double()>;

Matrix numeric_gradient(const Objective& f, Matrix& x, double h) {
  Matrix g(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      const double saved = x(i, j);
      x(i, j) = saved + h;
      const double up = f();
      x(i, j) = saved - h;
      const double down = f();
      x(i, j) = saved;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

class Checker {
 public:
  Checker(std::uint64_t seed, const GradcheckOptions& options)
      : rng_(seed * 0x9E3779B97F4A7C15ull + 17), opt_(options) {}

  Matrix gaussian(Index rows, Index cols, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng_);
    return m;
  }

  Matrix embedding(Index rows, Index cols) {
    return opt_.zero_embeddings ? Matrix::Zero(rows, cols) : gaussian(rows, cols);
  }

  Matrix stochastic(Index n) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) m(i, j) = unit(rng_) < 0.3 ? 0.0 : unit(rng_);
      if (m.row(i).sum() == 0.0) m(i, (i + 1) % n) = 1.0;
      m.row(i) /= m.row(i).sum();
    }
    return m;
  }

  Matrix adjacency(Index n) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix a = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (unit(rng_) < 0.5) a(i, j) = a(j, i) = 1.0;
    return a;
  }

  Vector simplex(Index n) {
    std::uniform_real_distribution<double> unit(0.5, 1.5);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = unit(rng_);
    return v / v.sum();
  }

  void record(const std::string& name, const Matrix& analytic, const Objective& f, Matrix& x) {
    const Matrix numeric = numeric_gradient(f, x, opt_.step);
    GradBlockError e;
    e.block = name;
    e.finite = analytic.allFinite() && numeric.allFinite();
    e.max_rel_error = e.finite ? relative_error(analytic, numeric)
                               : std::numeric_limits<double>::infinity();
    report.blocks.push_back(e);
  }

  void intra() {
    const Index n = opt_.regions + 3;
    Matrix z = embedding(n, opt_.dim + 1);
    const Matrix m = stochastic(n);
    const auto analytic = intra_loss(z, m).grad;
    record("intra.z", analytic, [&] { return intra_loss(z, m).loss; }, z);
  }

  void encoder() {
    const Index n = opt_.regions + 1;
    EncoderParams p;
    p.h0 = embedding(n, opt_.dim);
    p.mix = Matrix::Identity(opt_.dim, opt_.dim) + gaussian(opt_.dim, opt_.dim, 0.3);
    p.leak = 0.25;
    const Matrix adj = normalized_adjacency(adjacency(n));
    const Matrix upstream = gaussian(n, opt_.dim);
    const auto g = encode_backward(p, adj, upstream);
    auto f = [&] { return (encode(p, adj).array() * upstream.array()).sum(); };
    record("encoder.h0", g.h0, f, p.h0);
    record("encoder.mix", g.mix, f, p.mix);
  }

  Matrix frozen_plan(const Matrix& zs, const Matrix& zt) {
    SinkhornConfig sc;
    sc.marginal_mode = MarginalMode::kUniform;
    sc.max_iters = 500;
    return sinkhorn_solve(cost_matrix(zs, zt).cost, sc).plan;
  }

  void align() {
    if (opt_.zero_embeddings) return;  // undefined at zero norm
    Matrix zs = gaussian(opt_.regions, opt_.dim);
    Matrix zt = gaussian(opt_.regions + 2, opt_.dim);
    const Matrix plan = frozen_plan(zs, zt);
    AlignConfig cfg;
    const auto res = align_with_plan(zs, zt, plan, cfg);
    auto f = [&] { return align_with_plan(zs, zt, plan, cfg).l_align; };
    record("align.zs", res.grad_zs, f, zs);
    record("align.zt", res.grad_zt, f, zt);
  }

  void contrastive() {
    if (opt_.zero_embeddings) return;
    const Index ns = opt_.regions + 2;
    const Index nt = opt_.regions;
    Matrix us = normalize_rows(gaussian(ns, opt_.dim)).unit;
    Matrix ut = normalize_rows(gaussian(nt, opt_.dim)).unit;
    const Matrix plan = frozen_plan(us, ut);
    const double tau = 0.1;
    const auto res = contrastive_loss(plan, us, ut, tau);
    auto f = [&] { return contrastive_loss(plan, us, ut, tau).loss; };
    record("contrastive.s", res.grad_s, f, us);
    record("contrastive.t", res.grad_t, f, ut);
  }

  void cycle(CycleMode mode, bool normalize) {
    const std::string tag = std::string("cycle.") +
                            (mode == CycleMode::kOneSided ? "one_sided" : "two_sided") +
                            (normalize ? "_n2" : "");
    Matrix zs = embedding(opt_.regions, opt_.dim);
    Matrix zt = embedding(opt_.regions - 1, opt_.dim);
    CycleParams p;
    p.wq = Matrix::Identity(opt_.dim, opt_.dim) + gaussian(opt_.dim, opt_.dim, 0.3);
    p.wk = Matrix::Identity(opt_.dim, opt_.dim) + gaussian(opt_.dim, opt_.dim, 0.3);
    p.beta = 0.05;
    p.mode = mode;
    p.normalize_by_n2 = normalize;
    const auto res = cycle_loss(zs, zt, p);
    auto f = [&] { return cycle_loss(zs, zt, p).l_rec; };
    record(tag + ".zs", res.grad_zs, f, zs);
    record(tag + ".zt", res.grad_zt, f, zt);
    record(tag + ".wq", res.grad_wq, f, p.wq);
    record(tag + ".wk", res.grad_wk, f, p.wk);
  }

  void hub() {
    if (opt_.zero_embeddings) return;
    const Index k_total = 4;
    Matrix z = gaussian(opt_.regions + 1, opt_.dim);
    Matrix protos = gaussian(k_total, opt_.dim);
    SinkhornConfig sc;
    sc.max_iters = 500;
    const Vector a = Vector::Constant(z.rows(), 1.0 / static_cast<double>(z.rows()));
    const Matrix plan = sinkhorn_solve(cost_matrix(z, protos).cost, sc, a, simplex(k_total)).plan;
    HubConfig cfg;
    cfg.prototypes = k_total;
    CycleParams cyc;
    cyc.wq = Matrix::Identity(opt_.dim, opt_.dim) + gaussian(opt_.dim, opt_.dim, 0.3);
    cyc.wk = Matrix::Identity(opt_.dim, opt_.dim) + gaussian(opt_.dim, opt_.dim, 0.3);
    const auto res = hub_objective_with_plan(z, protos, plan, cfg, cyc);
    auto f = [&] {
      const auto r = hub_objective_with_plan(z, protos, plan, cfg, cyc);
      return r.l_align + r.l_rec;
    };
    record("hub.z", res.grad_z_align + res.grad_z_rec, f, z);
    record("hub.prototypes", res.grad_proto_align + res.grad_proto_rec, f, protos);
    record("hub.wq", res.grad_wq, f, cyc.wq);
    record("hub.wk", res.grad_wk, f, cyc.wk);
  }

  // Whole single-source objective with the coupling frozen, through both encoders.
  void total() {
    if (opt_.zero_embeddings) return;
    const Index ns = opt_.regions;
    const Index nt = opt_.regions + 1;
    const Index d = opt_.dim;
    EncoderParams ps{gaussian(ns, d), Matrix::Identity(d, d) + gaussian(d, d, 0.3), 0.25};
    EncoderParams pt{gaussian(nt, d), Matrix::Identity(d, d) + gaussian(d, d, 0.3), 0.25};
    const Matrix adj_s = normalized_adjacency(adjacency(ns));
    const Matrix adj_t = normalized_adjacency(adjacency(nt));
    const Matrix ms = stochastic(ns);
    const Matrix mt = stochastic(nt);
    CycleParams cyc;
    cyc.wq = Matrix::Identity(d, d) + gaussian(d, d, 0.3);
    cyc.wk = Matrix::Identity(d, d) + gaussian(d, d, 0.3);
    AlignConfig cfg;
    const double lambda_align = 1.0;
    const double lambda_rec = 0.5;
    const Matrix plan = sinkhorn_solve(cost_matrix(encode(ps, adj_s), encode(pt, adj_t)).cost,
                                       cfg.sinkhorn)
                            .plan;

    auto f = [&] {
      const Matrix zs = encode(ps, adj_s);
      const Matrix zt = encode(pt, adj_t);
      return intra_loss(zs, ms).loss + intra_loss(zt, mt).loss +
             lambda_align * align_with_plan(zs, zt, plan, cfg).l_align +
             lambda_rec * cycle_loss(zs, zt, cyc).l_rec;
    };
    const Matrix zs = encode(ps, adj_s);
    const Matrix zt = encode(pt, adj_t);
    const auto al = align_with_plan(zs, zt, plan, cfg);
    const auto rec = cycle_loss(zs, zt, cyc);
    const Matrix dzs = intra_loss(zs, ms).grad + lambda_align * al.grad_zs + lambda_rec * rec.grad_zs;
    const Matrix dzt = intra_loss(zt, mt).grad + lambda_align * al.grad_zt + lambda_rec * rec.grad_zt;
    const auto gs = encode_backward(ps, adj_s, dzs);
    const auto gt = encode_backward(pt, adj_t, dzt);
    record("total.h0_source", gs.h0, f, ps.h0);
    record("total.mix_source", gs.mix, f, ps.mix);
    record("total.h0_target", gt.h0, f, pt.h0);
    record("total.mix_target", gt.mix, f, pt.mix);
    record("total.wq", lambda_rec * rec.grad_wq, f, cyc.wq);
    record("total.wk", lambda_rec * rec.grad_wk, f, cyc.wk);
  }

  GradcheckReport report;

 private:
  std::mt19937_64 rng_;
  GradcheckOptions opt_;
};

}  // namespace

GradcheckReport gradcheck(GradComponent component, std::uint64_t seed,
                          const GradcheckOptions& options) {
  if (options.regions < 2 || options.dim < 2) {
    throw InputError("gradcheck: need at least 2 regions and dimension 2");
  }
  Checker c(seed, options);
  c.report.threshold = options.threshold;
  const bool all = component == GradComponent::kAll;
  if (all || component == GradComponent::kIntra) c.intra();
  if (all || component == GradComponent::kEncoder) c.encoder();
  if (all || component == GradComponent::kAlign) c.align();
  if (all || component == GradComponent::kContrastive) c.contrastive();
  if (all || component == GradComponent::kCycle) {
    c.cycle(CycleMode::kOneSided, false);
    c.cycle(CycleMode::kTwoSided, false);
    c.cycle(CycleMode::kOneSided, true);
  }
  if (all || component == GradComponent::kHub) c.hub();
  if (all || component == GradComponent::kTotal) c.total();
  return c.report;
}

}  // namespace scot
