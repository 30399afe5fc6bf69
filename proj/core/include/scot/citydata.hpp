#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scot/types.hpp"

namespace scot {

/// A city's regions: spatial adjacency, row-stochastic mobility and optional
/// per-region labels keyed by task name.
struct CityGraph {
  std::string city_id;
  Matrix adjacency;  // symmetric 0/1, zero diagonal
  Matrix mobility;   // row-stochastic
  std::map<std::string, Vector> labels;

  Index size() const noexcept { return adjacency.rows(); }

  /// Throws InputError describing the first violated invariant.
  void validate() const;
};

struct TripRecord {
  Index origin = 0;
  Index dest = 0;
  std::int64_t count = 0;
};

using TripTable = std::vector<TripRecord>;

/// Normalizes trip counts per origin. Origins without any trips get the
/// uniform row 1/n.
Matrix build_mobility(const TripTable& trips, Index n);

/// Symmetric hollow 0/1 adjacency from an undirected edge list.
Matrix build_adjacency(const std::vector<std::pair<Index, Index>>& edges, Index n);

/// Reads edges.csv, trips.csv and (optionally) labels.csv from `dir`.
/// The region count is the largest index seen across the files plus one,
/// or the row count of labels.csv when present.
CityGraph load_city(const std::filesystem::path& dir);

/// Writes a city directory in the layout read by load_city.
void write_city(const std::filesystem::path& dir, const CityGraph& city,
                const TripTable& trips);

inline constexpr Index kUnmatched = -1;

struct TwinCityTruth {
  CityGraph source;
  CityGraph target;
  TripTable source_trips;
  TripTable target_trips;
  std::vector<Index> true_match;  // per source region; kUnmatched when absent
  Matrix source_latent;
  Matrix target_latent;

  Index matched_count() const;
};

struct TwinCityParams {
  std::uint64_t seed = 1;
  Index n_source = 20;
  Index n_target = 20;
  Index latent_dim = 8;
  double noise_sigma = 0.0;
  double drop_frac = 0.0;
};

/// Synthetic source/target pair with shared latent region semantics and a
/// known correspondence. Pure function of its arguments.
TwinCityTruth gen_twin_cities(const TwinCityParams& params);

/// Relabels regions: region i of the result is region perm[i] of `city`.
/// Mobility, adjacency and labels move together, so the result is an exact
/// twin of the input with correspondence i -> perm[i].
CityGraph permute_city(const CityGraph& city, const std::vector<Index>& perm,
                       const std::string& city_id);

/// Writes source/, target/ and truth.csv under `dir`.
void write_twin_cities(const std::filesystem::path& dir, const TwinCityTruth& twins);

/// Reads a truth.csv (`source_id,target_id`, -1 for unmatched).
std::vector<Index> load_truth(const std::filesystem::path& file);

}  // namespace scot
