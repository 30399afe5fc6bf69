#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scot/citydata.hpp"
#include "scot/config.hpp"
#include "scot/cycle.hpp"
#include "scot/encoder.hpp"
#include "scot/hub.hpp"
#include "scot/sinkhorn.hpp"

namespace scot {

struct EpochRecord {
  int epoch = 0;
  std::vector<double> l_intra;  // one per city, in TrainRecord::cities order
  double l_ot = 0.0;
  double l_con = 0.0;
  double l_align = 0.0;
  double l_cyc = 0.0;
  double r_ent = 0.0;
  double l_rec = 0.0;
  double l_hub = 0.0;
  double total = 0.0;
  double grad_norm = 0.0;
  std::optional<double> q_max;       // logged every diag_every epochs
  std::optional<double> q_ent_norm;  // and on the last epoch
  double total_mass = 0.0;
  std::optional<double> b_entropy;  // multi-source only
  double wall_ms = 0.0;
};

struct HubUsageRow {
  int epoch = 0;
  std::string city;
  HubUsage usage;
};

struct TrainRecord {
  bool multi = false;
  std::vector<std::string> cities;
  std::vector<EpochRecord> rows;
  std::vector<HubUsageRow> hub_usage;

  std::vector<std::string> header() const;

  /// Deterministic per-epoch losses and diagnostics (no timing columns).
  void write_csv(const std::filesystem::path& file) const;
  /// epoch,wall_ms
  void write_timing_csv(const std::filesystem::path& file) const;
  /// epoch,city,entropy_normalized,effective_count,p_0..p_{K-1}
  void write_hub_usage_csv(const std::filesystem::path& file) const;
};

/// Recomputes `total` from the logged components and the configured weights.
double recompose_total(const EpochRecord& row, const TrainConfig& config, bool multi);

struct SingleRun {
  EncoderParams source;
  EncoderParams target;
  CycleParams cycle;
  TrainRecord record;
  // State after the final optimizer step.
  Matrix source_embedding;
  Matrix target_embedding;
  Coupling coupling;
};

/// Single-source training: intra losses, Sinkhorn alignment and cycle
/// reconstruction, one Adam step per epoch over all parameter blocks.
SingleRun train_single(const CityGraph& source, const CityGraph& target,
                       const TrainConfig& config);

struct MultiRun {
  std::vector<EncoderParams> encoders;  // sources..., target
  HubState hub;
  CycleParams cycle;
  TrainRecord record;
  std::vector<Matrix> embeddings;
  std::vector<Coupling> couplings;  // Π^m after the final step
  std::vector<Matrix> assignments;  // Q^m
};

/// Multi-source hub training. All cities (sources and target) are aligned to
/// K shared prototypes under a target-induced prototype marginal.
MultiRun train_multi(const std::vector<CityGraph>& sources, const CityGraph& target,
                     const TrainConfig& config);

/// Per-block seeds derived from the run seed so each parameter block has an
/// independent, reproducible stream.
std::mt19937_64 block_rng(std::uint64_t seed, std::uint64_t block);

}  // namespace scot
