#include "scot/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include "csv.hpp"
#include "scot/align.hpp"
#include "scot/error.hpp"
#include "scot/optim.hpp"
#include "scot/parallel.hpp"

namespace scot {

namespace {

constexpr std::uint64_t kCycleStream = 1000;
constexpr std::uint64_t kHubStream = 1001;

std::string opt(const std::optional<double>& v) {
  return v ? detail::format_double(*v) : std::string();
}

struct Block {
  std::string name;
  Matrix* value;
  Matrix grad;
  AdamState* state;
};

// Clips by global norm (when enabled) and applies Adam to every block.
double optimizer_step(std::vector<Block>& blocks, const TrainConfig& config) {
  std::vector<const Matrix*> grads;
  for (const auto& b : blocks) {
    if (!b.grad.allFinite()) {
      throw TrainingError("non-finite gradient in parameter block '" + b.name + "'");
    }
    grads.push_back(&b.grad);
  }
  const double norm = global_norm(grads);
  const double scale = (config.clip_norm > 0.0 && norm > config.clip_norm)
                           ? config.clip_norm / norm
                           : 1.0;
  for (auto& b : blocks) {
    if (scale != 1.0) b.grad *= scale;
    adam_step(*b.value, b.grad, *b.state, config.adam, b.name);
  }
  return norm;
}

bool is_diag_epoch(int epoch, const TrainConfig& config) {
  return epoch % config.diag_every == 0 || epoch == config.epochs || epoch == 1;
}

void check_graph(const CityGraph& g) {
  try {
    g.validate();
  } catch (const InputError& e) {
    throw InputError(std::string("invalid city: ") + e.what());
  }
}

AlignConfig make_align_config(const TrainConfig& config) {
  AlignConfig a;
  a.eta = config.eta;
  a.tau = config.tau;
  a.ot_weight = config.ot_weight;
  a.sinkhorn = config.sinkhorn;
  return a;
}

HubConfig make_hub_config(const TrainConfig& config) {
  HubConfig h = config.hub;
  h.tau = config.tau;
  return h;
}

EncoderParams make_encoder(const CityGraph& city, std::uint64_t stream,
                           const TrainConfig& config) {
  auto rng = block_rng(config.seed, stream);
  if (config.init == EncoderInit::kSpectral) {
    return init_encoder_spectral(city, config.dim, rng, config.init_std, config.leak);
  }
  return init_encoder(city.size(), config.dim, rng, config.init_std, config.leak);
}

CycleParams make_cycle(const TrainConfig& config, bool hub) {
  auto rng = block_rng(config.seed, kCycleStream);
  CycleParams c = init_cycle(config.dim, rng);
  c.beta = config.beta;
  c.mode = config.cycle_mode;
  c.normalize_by_n2 = hub ? true : config.cycle_normalize_by_n2;
  return c;
}

[[noreturn]] void rethrow_with_epoch(int epoch) {
  try {
    throw;
  } catch (const TrainingError& e) {
    throw TrainingError("epoch " + std::to_string(epoch) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError("epoch " + std::to_string(epoch) + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError("epoch " + std::to_string(epoch) + ": " + e.what());
  }
}

}  // namespace

std::mt19937_64 block_rng(std::uint64_t seed, std::uint64_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block), 0x5c07u};
  return std::mt19937_64(seq);
}

std::vector<std::string> TrainRecord::header() const {
  std::vector<std::string> h = {"epoch"};
  for (const auto& c : cities) h.push_back("l_intra_" + c);
  for (const char* name : {"l_ot", "l_con", "l_align", "l_cyc", "r_ent", "l_rec", "l_hub",
                           "total", "grad_norm", "q_max", "q_ent_norm", "total_mass",
                           "b_entropy"}) {
    h.emplace_back(name);
  }
  return h;
}

void TrainRecord::write_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw InputError("cannot write " + file.string());
  const auto h = header();
  for (std::size_t i = 0; i < h.size(); ++i) out << (i ? "," : "") << h[i];
  out << '\n';
  using detail::format_double;
  for (const auto& r : rows) {
    out << r.epoch;
    for (double v : r.l_intra) out << ',' << format_double(v);
    for (double v : {r.l_ot, r.l_con, r.l_align, r.l_cyc, r.r_ent, r.l_rec, r.l_hub, r.total,
                     r.grad_norm}) {
      out << ',' << format_double(v);
    }
    out << ',' << opt(r.q_max) << ',' << opt(r.q_ent_norm) << ','
        << format_double(r.total_mass) << ',' << opt(r.b_entropy) << '\n';
  }
}

void TrainRecord::write_timing_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  out << "epoch,wall_ms\n";
  for (const auto& r : rows) out << r.epoch << ',' << detail::format_double(r.wall_ms) << '\n';
}

void TrainRecord::write_hub_usage_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  out << "epoch,city,entropy_normalized,effective_count";
  const Index k_total = hub_usage.empty() ? 0 : hub_usage.front().usage.mass.size();
  for (Index k = 0; k < k_total; ++k) out << ",p_" << k;
  out << '\n';
  for (const auto& row : hub_usage) {
    out << row.epoch << ',' << row.city << ','
        << detail::format_double(row.usage.entropy_normalized) << ','
        << detail::format_double(row.usage.effective_count);
    for (Index k = 0; k < row.usage.mass.size(); ++k) {
      out << ',' << detail::format_double(row.usage.mass(k));
    }
    out << '\n';
  }
}

double recompose_total(const EpochRecord& row, const TrainConfig& config, bool multi) {
  double total = 0.0;
  for (double v : row.l_intra) total += v;
  if (multi) {
    total += config.lambda_align * (row.l_align + config.hub.lambda_hub * row.l_hub);
  } else {
    total += config.lambda_align * row.l_align;
  }
  total += config.lambda_rec * row.l_rec;
  return total;
}

SingleRun train_single(const CityGraph& source, const CityGraph& target,
                       const TrainConfig& config) {
  config.validate();
  check_graph(source);
  check_graph(target);

  SingleRun run;
  run.source = make_encoder(source, 0, config);
  run.target = make_encoder(target, 1, config);
  run.cycle = make_cycle(config, false);
  run.record.multi = false;
  run.record.cities = {"source", "target"};

  const Matrix adj_s = normalized_adjacency(source.adjacency);
  const Matrix adj_t = normalized_adjacency(target.adjacency);
  const AlignConfig align_cfg = make_align_config(config);

  AdamState st_h0s, st_mixs, st_h0t, st_mixt, st_wq, st_wk;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord row;
    row.epoch = epoch;
    try {
      const Matrix zs = encode(run.source, adj_s);
      const Matrix zt = encode(run.target, adj_t);
      const IntraLoss intra_s = intra_loss(zs, source.mobility);
      const IntraLoss intra_t = intra_loss(zt, target.mobility);

      const CostMatrix cm = cost_matrix(zs, zt);
      const Coupling coupling = sinkhorn_solve(cm.cost, align_cfg.sinkhorn);
      const AlignResult align = align_with_plan(zs, zt, coupling.plan, align_cfg);

      const CycleResult rec = cycle_loss(zs, zt, run.cycle);

      row.l_intra = {intra_s.loss, intra_t.loss};
      row.l_ot = align.l_ot;
      row.l_con = align.l_con;
      row.l_align = align.l_align;
      row.l_cyc = rec.l_cyc;
      row.r_ent = rec.r_ent;
      row.l_rec = rec.l_rec;
      row.total = intra_s.loss + intra_t.loss + config.lambda_align * align.l_align +
                  config.lambda_rec * rec.l_rec;
      row.total_mass = coupling.total_mass;
      if (is_diag_epoch(epoch, config)) {
        const auto diag = coupling_diagnostics(coupling.plan);
        row.q_max = diag.q_max;
        row.q_ent_norm = diag.q_ent_normalized;
      }

      const Matrix dzs = intra_s.grad + config.lambda_align * align.grad_zs +
                         config.lambda_rec * rec.grad_zs;
      const Matrix dzt = intra_t.grad + config.lambda_align * align.grad_zt +
                         config.lambda_rec * rec.grad_zt;
      const EncoderGrads gs = encode_backward(run.source, adj_s, dzs);
      const EncoderGrads gt = encode_backward(run.target, adj_t, dzt);

      std::vector<Block> blocks = {
          {"h0_source", &run.source.h0, gs.h0, &st_h0s},
          {"mix_source", &run.source.mix, gs.mix, &st_mixs},
          {"h0_target", &run.target.h0, gt.h0, &st_h0t},
          {"mix_target", &run.target.mix, gt.mix, &st_mixt},
          {"wq", &run.cycle.wq, config.lambda_rec * rec.grad_wq, &st_wq},
          {"wk", &run.cycle.wk, config.lambda_rec * rec.grad_wk, &st_wk},
      };
      row.grad_norm = optimizer_step(blocks, config);
    } catch (const Error&) {
      rethrow_with_epoch(epoch);
    }
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    run.record.rows.push_back(std::move(row));
  }

  run.source_embedding = encode(run.source, adj_s);
  run.target_embedding = encode(run.target, adj_t);
  run.coupling =
      sinkhorn_solve(cost_matrix(run.source_embedding, run.target_embedding).cost, config.sinkhorn);
  return run;
}

MultiRun train_multi(const std::vector<CityGraph>& sources, const CityGraph& target,
                     const TrainConfig& config) {
  config.validate();
  if (sources.empty()) throw InputError("train_multi: need at least one source city");
  std::vector<const CityGraph*> cities;
  for (const auto& s : sources) cities.push_back(&s);
  cities.push_back(&target);
  for (const auto* c : cities) check_graph(*c);
  const std::size_t n_cities = cities.size();
  const std::size_t target_idx = n_cities - 1;

  MultiRun run;
  run.record.multi = true;
  std::vector<Matrix> adj(n_cities);
  for (std::size_t m = 0; m < n_cities; ++m) {
    run.encoders.push_back(make_encoder(*cities[m], m, config));
    adj[m] = normalized_adjacency(cities[m]->adjacency);
    run.record.cities.push_back(m == target_idx ? std::string("target")
                                                : "source" + std::to_string(m));
  }
  run.cycle = make_cycle(config, true);
  const HubConfig hub_cfg = make_hub_config(config);
  const double inv_cities = 1.0 / static_cast<double>(n_cities);

  std::vector<AdamState> st_h0(n_cities), st_mix(n_cities);
  AdamState st_proto, st_wq, st_wk;
  bool hub_ready = false;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord row;
    row.epoch = epoch;
    try {
      std::vector<Matrix> z(n_cities);
      std::vector<IntraLoss> intra(n_cities);
      parallel_for(n_cities, [&](std::size_t m) {
        z[m] = encode(run.encoders[m], adj[m]);
        intra[m] = intra_loss(z[m], cities[m]->mobility);
      });

      if (!hub_ready) {
        auto rng = block_rng(config.seed, kHubStream);
        run.hub = init_hub(z, hub_cfg, rng);
        hub_ready = true;
      }
      refresh_prior(run.hub, z[target_idx], epoch, hub_cfg.frozen_epoch);

      std::vector<HubCityResult> res(n_cities);
      parallel_for(n_cities, [&](std::size_t m) {
        res[m] = hub_align_city(z[m], run.hub, hub_cfg, run.cycle);
      });

      double total_intra = 0.0;
      for (std::size_t m = 0; m < n_cities; ++m) {
        row.l_intra.push_back(intra[m].loss);
        total_intra += intra[m].loss;
        row.l_ot += inv_cities * res[m].l_ot;
        row.l_con += inv_cities * res[m].l_con;
        row.l_align += inv_cities * res[m].l_align;
        row.l_hub += inv_cities * res[m].l_hub;
        row.l_cyc += inv_cities * res[m].l_cyc;
        row.r_ent += inv_cities * res[m].r_ent;
        row.l_rec += inv_cities * res[m].l_rec;
        row.total_mass += inv_cities * res[m].coupling.total_mass;
      }
      row.total = total_intra +
                  config.lambda_align * (row.l_align + hub_cfg.lambda_hub * row.l_hub) +
                  config.lambda_rec * row.l_rec;
      row.b_entropy = normalized_entropy(run.hub.b);
      if (is_diag_epoch(epoch, config)) {
        const auto diag = coupling_diagnostics(res[target_idx].coupling.plan);
        row.q_max = diag.q_max;
        row.q_ent_norm = diag.q_ent_normalized;
        for (std::size_t m = 0; m < n_cities; ++m) {
          run.record.hub_usage.push_back(
              {epoch, run.record.cities[m], hub_usage_diagnostics(res[m].coupling.plan)});
        }
      }

      // The hub KL term is a function of the detached coupling only, so it
      // carries no gradient.
      const double w_align = config.lambda_align * inv_cities;
      const double w_rec = config.lambda_rec * inv_cities;
      std::vector<EncoderGrads> enc_grads(n_cities);
      parallel_for(n_cities, [&](std::size_t m) {
        const Matrix dz =
            intra[m].grad + w_align * res[m].grad_z_align + w_rec * res[m].grad_z_rec;
        enc_grads[m] = encode_backward(run.encoders[m], adj[m], dz);
      });
      Matrix grad_proto = Matrix::Zero(run.hub.prototypes.rows(), run.hub.prototypes.cols());
      Matrix grad_wq = Matrix::Zero(config.dim, config.dim);
      Matrix grad_wk = Matrix::Zero(config.dim, config.dim);
      for (std::size_t m = 0; m < n_cities; ++m) {  // fixed reduction order
        grad_proto += w_align * res[m].grad_proto_align + w_rec * res[m].grad_proto_rec;
        grad_wq += w_rec * res[m].grad_wq;
        grad_wk += w_rec * res[m].grad_wk;
      }

      std::vector<Block> blocks;
      for (std::size_t m = 0; m < n_cities; ++m) {
        blocks.push_back({"h0_" + run.record.cities[m], &run.encoders[m].h0, enc_grads[m].h0,
                          &st_h0[m]});
        blocks.push_back({"mix_" + run.record.cities[m], &run.encoders[m].mix, enc_grads[m].mix,
                          &st_mix[m]});
      }
      blocks.push_back({"prototypes", &run.hub.prototypes, grad_proto, &st_proto});
      blocks.push_back({"wq", &run.cycle.wq, grad_wq, &st_wq});
      blocks.push_back({"wk", &run.cycle.wk, grad_wk, &st_wk});
      row.grad_norm = optimizer_step(blocks, config);
    } catch (const Error&) {
      rethrow_with_epoch(epoch);
    }
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    run.record.rows.push_back(std::move(row));
  }

  run.embeddings.resize(n_cities);
  for (std::size_t m = 0; m < n_cities; ++m) run.embeddings[m] = encode(run.encoders[m], adj[m]);
  refresh_prior(run.hub, run.embeddings[target_idx], config.epochs + 1, hub_cfg.frozen_epoch);
  for (std::size_t m = 0; m < n_cities; ++m) {
    auto res = hub_align_city(run.embeddings[m], run.hub, hub_cfg, run.cycle);
    run.couplings.push_back(std::move(res.coupling));
    run.assignments.push_back(std::move(res.assignment));
  }
  return run;
}

}  // namespace scot
