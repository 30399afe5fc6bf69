// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "scot/citydata.hpp"
#include "scot/eval.hpp"
#include "scot/gradcheck.hpp"
#include "scot/sinkhorn.hpp"
#include "scot/trainer.hpp"

namespace fs = std::filesystem;
using namespace scot;
using scot::testing::brute_force_assignment;
using scot::testing::random_bound_instance;
using scot::testing::random_cost;
using scot::testing::twin_family;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

constexpr int kSeeds = 5;

TrainConfig shipped_defaults(std::uint64_t seed) {
  TrainConfig c;  // λ_align=1, λ_rec=0.5, η=0.5, τ=0.1, ε=0.15, 300 epochs
  c.seed = seed;
  return c;
}

TwinCityTruth twins(std::uint64_t seed, double noise) {
  TwinCityParams p;
  p.seed = seed;
  p.noise_sigma = noise;
  return gen_twin_cities(p);
}

Outcome sinkhorn_correctness() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<Index> rows(2, 200);
  std::uniform_int_distribution<Index> cols(2, 150);
  SinkhornConfig cfg;
  cfg.epsilon = 0.15;
  cfg.marginal_mode = MarginalMode::kUniform;
  cfg.max_iters = 10000;
  cfg.tol = 1e-9;
  double worst_residual = 0.0;
  double worst_time = 0.0;
  for (int k = 0; k < 50; ++k) {
    // The last instance is always the largest allowed shape.
    const Index ns = k == 49 ? 200 : rows(rng);
    const Index nt = k == 49 ? 150 : cols(rng);
    const Matrix cost = random_cost(ns, nt, rng);
    const auto start = Clock::now();
    const Coupling c = sinkhorn_solve(cost, cfg);
    worst_time = std::max(worst_time, seconds_since(start));
    worst_residual = std::max({worst_residual, c.row_residual, c.col_residual});
  }
  return {worst_residual < 1e-6 && worst_time < 1.0,
          fmt("max residual %.3e (< 1e-6), slowest instance %.4f s (< 1 s)", worst_residual,
              worst_time)};
}

Outcome exact_ot_oracle() {
  std::mt19937_64 rng(202);
  SinkhornConfig cfg;
  cfg.epsilon = 0.01;
  cfg.marginal_mode = MarginalMode::kUniform;
  cfg.log_domain = true;
  cfg.max_iters = 20000;
  cfg.tol = 1e-10;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Matrix cost = random_cost(5, 5, rng);
    const Coupling c = sinkhorn_solve(cost, cfg);
    const double entropic = (c.plan.array() * cost.array()).sum();
    const double exact = brute_force_assignment(cost);
    worst = std::max(worst, std::abs(entropic - exact) / exact);
  }
  return {worst <= 0.02, fmt("max relative gap to brute-force optimum %.4f (<= 0.02)", worst)};
}

Outcome closed_form_oracle() {
  Matrix cost(2, 2);
  cost << 0.0, 1.0, 1.0, 0.0;
  SinkhornConfig cfg;
  cfg.epsilon = 1.0;
  cfg.marginal_mode = MarginalMode::kUniform;
  cfg.max_iters = 1000;
  cfg.tol = 1e-12;
  const double p11 = sinkhorn_solve(cost, cfg).plan(0, 0);
  return {std::abs(p11 - 0.36553) <= 1e-4, fmt("P11 = %.6f (0.36553 +- 1e-4)", p11)};
}

Outcome gradient_suite() {
  const auto start = Clock::now();
  double worst = 0.0;
  std::string worst_block = "-";
  const GradComponent components[] = {GradComponent::kIntra, GradComponent::kAlign,
                                      GradComponent::kContrastive, GradComponent::kCycle,
                                      GradComponent::kHub};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (GradComponent comp : components) {
      const GradcheckReport rep = gradcheck(comp, seed);
      for (const auto& b : rep.blocks) {
        const double e = b.finite ? b.max_rel_error : INFINITY;
        if (e > worst) {
          worst = e;
          worst_block = b.block + "@seed" + std::to_string(seed);
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-3 && elapsed < 30.0,
          fmt("max relative error %.3e at %s (< 1e-3), %.2f s (< 30 s)", worst,
              worst_block.c_str(), elapsed)};
}

Outcome transfer_bound() {
  const auto start = Clock::now();
  std::mt19937_64 rng(505);
  int outer = 0;
  int inner = 0;
  for (int k = 0; k < 1000; ++k) {
    const BoundReport r = verify_bound(random_bound_instance(rng));
    outer += r.holds ? 0 : 1;
    inner += r.intermediate_holds ? 0 : 1;
  }
  const double elapsed = seconds_since(start);
  return {outer == 0 && inner == 0 && elapsed < 10.0,
          fmt("risk-bound violations %d, intermediate violations %d (both 0), %.2f s (< 10 s)",
              outer, inner, elapsed)};
}

struct RecoveryStats {
  double top1 = 0.0;
  double lift = 0.0;
};

RecoveryStats recovery(double noise, const std::function<void(TrainConfig&)>& tweak = {}) {
  RecoveryStats s;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const TwinCityTruth tw = twins(seed, noise);
    TrainConfig cfg = shipped_defaults(seed);
    if (tweak) tweak(cfg);
    const SingleRun run = train_single(tw.source, tw.target, cfg);
    const MatchingMetrics m = matching_metrics(run.coupling.plan, tw.true_match);
    s.top1 += m.top1_acc / kSeeds;
    s.lift += m.mean_true_mass_ratio / kSeeds;
  }
  return s;
}

Outcome correspondence_recovery() {
  const auto start = Clock::now();
  const RecoveryStats clean = recovery(0.0);
  const RecoveryStats noisy = recovery(0.3);
  const double elapsed = seconds_since(start);
  return {clean.lift >= 5.0 && clean.top1 >= 0.6 && noisy.lift >= 2.0 && elapsed <= 120.0,
          fmt("zero noise: lift %.3f (>= 5), top-1 %.3f (>= 0.6); sigma 0.3: lift %.3f (>= 2); "
              "%.1f s (<= 120 s)",
              clean.lift, clean.top1, noisy.lift, elapsed)};
}

Outcome ablation_direction() {
  const double full = recovery(0.3).top1;
  const double no_con = recovery(0.3, [](TrainConfig& c) { c.eta = 0.0; }).top1;
  const double no_ot = recovery(0.3, [](TrainConfig& c) { c.ot_weight = 0.0; }).top1;
  const double no_rec = recovery(0.3, [](TrainConfig& c) { c.lambda_rec = 0.0; }).top1;
  return {full >= no_con && full >= no_ot && full >= no_rec,
          fmt("seed-mean top-1: full %.3f vs eta=0 %.3f, no L_OT %.3f, lambda_rec=0 %.3f", full,
              no_con, no_ot, no_rec)};
}

TrainConfig hub_config(std::uint64_t seed) {
  TrainConfig c = shipped_defaults(seed);
  c.hub.prototypes = 32;
  c.diag_every = 1;
  return c;
}

Outcome hub_specialization() {
  const auto fam = twin_family(1, 0.0);
  const MultiRun run = train_multi(fam.sources, fam.target, hub_config(1));
  double final_ent = 1.0;
  double min_ent = 1.0;
  double mass_dev = 0.0;
  for (const auto& row : run.record.rows) {
    if (row.q_ent_norm) {
      min_ent = std::min(min_ent, *row.q_ent_norm);
      final_ent = *row.q_ent_norm;
    }
    mass_dev = std::max(mass_dev, std::abs(row.total_mass - 1.0));
  }
  return {final_ent <= 0.8 && min_ent > 0.02 && mass_dev <= 1e-6,
          fmt("q_ent/log K at epoch 300 %.3f (<= 0.8), minimum %.3f (> 0.02), max |mass-1| "
              "%.2e (<= 1e-6)",
              final_ent, min_ent, mass_dev)};
}

Outcome unbalanced_direction() {
  const auto fam = twin_family(1, 0.0);
  TrainConfig unbalanced = hub_config(1);
  unbalanced.epochs = 50;
  unbalanced.hub.sinkhorn.unbalanced_rho = 0.3;
  const MultiRun ub = train_multi(fam.sources, fam.target, unbalanced);
  double ub_dev = 0.0;
  double ub_min_dev = INFINITY;
  for (const auto& row : ub.record.rows) {
    ub_dev = std::max(ub_dev, std::abs(row.total_mass - 1.0));
    ub_min_dev = std::min(ub_min_dev, std::abs(row.total_mass - 1.0));
  }
  const MultiRun bal = train_multi(fam.sources, fam.target, hub_config(1));
  double bal_dev = 0.0;
  for (const auto& row : bal.record.rows) bal_dev = std::max(bal_dev, std::abs(row.total_mass - 1.0));
  return {ub_dev > 0.05 && bal_dev <= 1e-6,
          fmt("rho=0.3 max |mass-1| over epochs 1-50 %.3f (> 0.05; min %.3f); balanced max "
              "|mass-1| over 300 epochs %.2e (<= 1e-6)",
              ub_dev, ub_min_dev, bal_dev)};
}

Outcome adaptive_prior() {
  const auto fam = twin_family(1, 0.0);
  TrainConfig adaptive = hub_config(1);
  adaptive.hub.prior_mode = PriorMode::kAdaptive;
  TrainConfig uniform = hub_config(1);
  uniform.hub.prior_mode = PriorMode::kUniform;
  const double h_adaptive =
      *train_multi(fam.sources, fam.target, adaptive).record.rows.back().b_entropy;
  const double h_uniform =
      *train_multi(fam.sources, fam.target, uniform).record.rows.back().b_entropy;
  const double log_k = std::log(32.0);
  return {h_adaptive < log_k - 0.05 && std::abs(h_uniform - log_k) <= 1e-12,
          fmt("H(b) adaptive %.4f (< %.4f), uniform %.12f (== log K %.12f)", h_adaptive,
              log_k - 0.05, h_uniform, log_k)};
}

Outcome readout_sanity() {
  double full_mae = 0.0;
  double plain_mae = 0.0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const TwinCityTruth tw = twins(seed, 0.3);
    const Vector& ys = tw.source.labels.at("gdp");
    const Vector& yt = tw.target.labels.at("gdp");
    const auto mae = [&](const TrainConfig& cfg) {
      const SingleRun run = train_single(tw.source, tw.target, cfg);
      const RidgeModel model = ridge_fit(run.source_embedding, ys, 1.0);
      return transfer_metrics(model, run.target_embedding, yt).mae;
    };
    TrainConfig plain = shipped_defaults(seed);
    plain.lambda_align = 0.0;
    plain.lambda_rec = 0.0;
    full_mae += mae(shipped_defaults(seed)) / kSeeds;
    plain_mae += mae(plain) / kSeeds;
  }
  return {full_mae <= plain_mae,
          fmt("seed-mean gdp transfer MAE: full %.4f vs no alignment %.4f", full_mae, plain_mae)};
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "scot_acceptance_determinism";
  fs::create_directories(dir);
  const TwinCityTruth tw = twins(1, 0.0);
  for (const char* name : {"a.csv", "b.csv"}) {
    train_single(tw.source, tw.target, shipped_defaults(1)).record.write_csv(dir / name);
  }
  const std::string a = slurp(dir / "a.csv");
  const std::string b = slurp(dir / "b.csv");
  fs::remove_all(dir);
  return {!a.empty() && a == b, fmt("two runs wrote %zu and %zu bytes, %s", a.size(), b.size(),
                                    a == b ? "identical" : "different")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"sinkhorn correctness", sinkhorn_correctness},
      {"exact OT oracle", exact_ot_oracle},
      {"closed-form 2x2 oracle", closed_form_oracle},
      {"gradient suite", gradient_suite},
      {"transfer bound verifier", transfer_bound},
      {"correspondence recovery", correspondence_recovery},
      {"ablation direction", ablation_direction},
      {"hub specialization", hub_specialization},
      {"unbalanced vs balanced mass", unbalanced_direction},
      {"adaptive prior entropy", adaptive_prior},
      {"ridge readout sanity", readout_sanity},
      {"determinism", determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
