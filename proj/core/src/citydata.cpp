#include "scot/citydata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "csv.hpp"
#include "scot/error.hpp"

namespace scot {

namespace fs = std::filesystem;

void CityGraph::validate() const {
  const Index n = adjacency.rows();
  if (n < 1) throw InputError("city '" + city_id + "': no regions");
  if (adjacency.cols() != n || mobility.rows() != n || mobility.cols() != n) {
    throw InputError("city '" + city_id + "': adjacency/mobility must be n x n");
  }
  for (Index i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) {
      throw InputError("city '" + city_id + "': self-loop at region " + std::to_string(i));
    }
    for (Index j = 0; j < n; ++j) {
      const double a = adjacency(i, j);
      if ((a != 0.0 && a != 1.0) || a != adjacency(j, i)) {
        throw InputError("city '" + city_id + "': adjacency not symmetric 0/1 at (" +
                         std::to_string(i) + "," + std::to_string(j) + ")");
      }
      const double m = mobility(i, j);
      if (!(m >= 0.0 && m <= 1.0)) {
        throw InputError("city '" + city_id + "': mobility entry outside [0,1] at (" +
                         std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
    if (std::abs(mobility.row(i).sum() - 1.0) > 1e-9) {
      throw InputError("city '" + city_id + "': mobility row " + std::to_string(i) +
                       " does not sum to 1");
    }
  }
  for (const auto& [task, y] : labels) {
    if (y.size() != n) {
      throw InputError("city '" + city_id + "': label '" + task + "' has wrong length");
    }
  }
}

Matrix build_mobility(const TripTable& trips, Index n) {
  if (n < 1) throw InputError("build_mobility: n must be positive");
  Matrix counts = Matrix::Zero(n, n);
  for (const auto& t : trips) {
    if (t.origin < 0 || t.origin >= n || t.dest < 0 || t.dest >= n) {
      throw InputError("build_mobility: trip (" + std::to_string(t.origin) + "->" +
                       std::to_string(t.dest) + ") out of range for n=" + std::to_string(n));
    }
    if (t.count < 0) throw InputError("build_mobility: negative trip count");
    counts(t.origin, t.dest) += static_cast<double>(t.count);
  }
  for (Index i = 0; i < n; ++i) {
    const double total = counts.row(i).sum();
    if (total > 0.0) {
      counts.row(i) /= total;
    } else {
      counts.row(i).setConstant(1.0 / static_cast<double>(n));
    }
  }
  return counts;
}

Matrix build_adjacency(const std::vector<std::pair<Index, Index>>& edges, Index n) {
  Matrix adj = Matrix::Zero(n, n);
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) throw InputError("edge index out of range");
    if (i == j) throw InputError("self-loop edge at region " + std::to_string(i));
    adj(i, j) = 1.0;
    adj(j, i) = 1.0;
  }
  return adj;
}

CityGraph load_city(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw NotFoundError("city directory not found: " + dir.string());
  const fs::path edges_file = dir / "edges.csv";
  const fs::path trips_file = dir / "trips.csv";
  const fs::path labels_file = dir / "labels.csv";
  for (const auto& f : {edges_file, trips_file}) {
    if (!fs::exists(f)) {
      throw NotFoundError("missing " + f.string() +
                          " (expected edges.csv, trips.csv and optional labels.csv)");
    }
  }

  std::vector<std::string> fields;
  Index max_index = -1;

  std::vector<std::pair<Index, Index>> edges;
  {
    detail::CsvReader reader(edges_file);
    detail::require_header(reader, {"i", "j"});
    while (reader.next(fields)) {
      const auto i = reader.parse_int(fields[0]);
      const auto j = reader.parse_int(fields[1]);
      if (i < 0 || j < 0) reader.fail("negative region index");
      if (i == j) reader.fail("self-loop edge");
      edges.emplace_back(i, j);
      max_index = std::max<Index>(max_index, std::max(i, j));
    }
  }

  TripTable trips;
  {
    detail::CsvReader reader(trips_file);
    detail::require_header(reader, {"origin", "dest", "count"});
    while (reader.next(fields)) {
      TripRecord t;
      t.origin = reader.parse_int(fields[0]);
      t.dest = reader.parse_int(fields[1]);
      t.count = reader.parse_int(fields[2]);
      if (t.origin < 0 || t.dest < 0) reader.fail("negative region index");
      if (t.count < 0) reader.fail("negative trip count");
      trips.push_back(t);
      max_index = std::max(max_index, std::max(t.origin, t.dest));
    }
  }

  CityGraph city;
  city.city_id = dir.filename().empty() ? dir.parent_path().filename().string()
                                        : dir.filename().string();

  Index n = max_index + 1;
  if (fs::exists(labels_file)) {
    detail::CsvReader reader(labels_file);
    const auto header = reader.header();
    if (header.empty() || header[0] != "region_id") {
      throw ParseError(labels_file.string(), 1, "bad header, expected 'region_id,<task>...'");
    }
    std::vector<std::vector<double>> columns(header.size() - 1);
    Index expected = 0;
    while (reader.next(fields)) {
      if (reader.parse_int(fields[0]) != expected) {
        reader.fail("region_id must be consecutive from 0");
      }
      ++expected;
      for (std::size_t c = 1; c < fields.size(); ++c) {
        columns[c - 1].push_back(reader.parse_double(fields[c]));
      }
    }
    if (expected < n) {
      throw ParseError(labels_file.string(), reader.line(),
                       "labels cover " + std::to_string(expected) + " regions but edges/trips reference " +
                           std::to_string(n));
    }
    n = expected;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      city.labels[header[c + 1]] = Eigen::Map<const Vector>(columns[c].data(), n);
    }
  }
  if (n < 1) throw InputError("city directory " + dir.string() + " defines no regions");

  city.adjacency = build_adjacency(edges, n);
  city.mobility = build_mobility(trips, n);
  city.validate();
  return city;
}

void write_city(const fs::path& dir, const CityGraph& city, const TripTable& trips) {
  fs::create_directories(dir);
  const Index n = city.size();
  {
    std::ofstream out(dir / "edges.csv");
    out << "i,j\n";
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (city.adjacency(i, j) != 0.0) out << i << ',' << j << '\n';
  }
  {
    std::ofstream out(dir / "trips.csv");
    out << "origin,dest,count\n";
    for (const auto& t : trips) out << t.origin << ',' << t.dest << ',' << t.count << '\n';
  }
  if (!city.labels.empty()) {
    std::ofstream out(dir / "labels.csv");
    out << "region_id";
    for (const auto& [task, _] : city.labels) out << ',' << task;
    out << '\n';
    for (Index i = 0; i < n; ++i) {
      out << i;
      for (const auto& [_, y] : city.labels) out << ',' << detail::format_double(y(i));
      out << '\n';
    }
  }
}

Index TwinCityTruth::matched_count() const {
  return static_cast<Index>(
      std::count_if(true_match.begin(), true_match.end(), [](Index j) { return j != kUnmatched; }));
}

namespace {

constexpr int kClusters = 4;
constexpr double kClusterSpread = 2.0;
constexpr double kTripScale = 1000.0;
constexpr double kLabelNoise = 0.1;

struct LabelFunctional {
  std::string task;
  double offset;
  double scale;
  Vector weights;  // unit norm
};

Vector sample_mixture(std::mt19937_64& rng, const Matrix& centers) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(centers.rows()) - 1);
  const int c = pick(rng);
  Vector x(centers.cols());
  for (Index k = 0; k < x.size(); ++k) x(k) = centers(c, k) + normal(rng);
  return x;
}

// k-nearest-latent-neighbor mobility and adjacency for one city.
void build_synthetic_city(const Matrix& latent, CityGraph& city, TripTable& trips) {
  const Index n = latent.rows();
  const Index k = std::min<Index>(n - 1, std::max<Index>(3, n / 10));

  Matrix dist2(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) dist2(i, j) = (latent.row(i) - latent.row(j)).squaredNorm();

  std::vector<std::vector<Index>> neighbors(n);
  double mean_knn = 0.0;
  for (Index i = 0; i < n; ++i) {
    std::vector<Index> order;
    for (Index j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return dist2(i, a) < dist2(i, b); });
    order.resize(static_cast<std::size_t>(k));
    for (Index j : order) mean_knn += dist2(i, j);
    neighbors[static_cast<std::size_t>(i)] = std::move(order);
  }
  mean_knn /= static_cast<double>(n * k);
  const double bandwidth = mean_knn > 0.0 ? mean_knn : 1.0;

  std::vector<std::pair<Index, Index>> edges;
  trips.clear();
  for (Index i = 0; i < n; ++i) {
    const auto& nb = neighbors[static_cast<std::size_t>(i)];
    // The region itself is its nearest latent neighbor: intra-region trips get
    // the full kTripScale, neighbors exp(-d²/bandwidth) of it (at least 1).
    trips.push_back({i, i, static_cast<std::int64_t>(kTripScale)});
    for (Index j : nb) {
      edges.emplace_back(i, j);
      const double weight = std::exp(-dist2(i, j) / bandwidth);
      const auto count = static_cast<std::int64_t>(std::max(1.0, std::round(kTripScale * weight)));
      trips.push_back({i, j, count});
    }
  }
  city.adjacency = build_adjacency(edges, n);
  city.mobility = build_mobility(trips, n);
}

}  // namespace

TwinCityTruth gen_twin_cities(const TwinCityParams& p) {
  if (p.n_source < 4 || p.n_target < 4) throw InputError("gen_twin_cities: need n_s, n_t >= 4");
  if (!(p.drop_frac >= 0.0 && p.drop_frac < 1.0)) {
    throw InputError("gen_twin_cities: drop_frac must be in [0, 1)");
  }
  if (!(p.noise_sigma >= 0.0) || !std::isfinite(p.noise_sigma)) {
    throw InputError("gen_twin_cities: noise_sigma must be >= 0");
  }
  if (p.latent_dim < 1) throw InputError("gen_twin_cities: latent_dim must be >= 1");

  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index d = p.latent_dim;
  const Index n_max = std::max(p.n_source, p.n_target);

  Matrix centers(kClusters, d);
  for (Index c = 0; c < kClusters; ++c)
    for (Index k = 0; k < d; ++k) centers(c, k) = kClusterSpread * normal(rng);

  Matrix pool(n_max, d);
  for (Index i = 0; i < n_max; ++i) pool.row(i) = sample_mixture(rng, centers).transpose();

  std::vector<LabelFunctional> functionals = {{"gdp", 100.0, 10.0, Vector(d)},
                                              {"population", 60.0, 6.0, Vector(d)}};
  for (auto& f : functionals) {
    for (Index k = 0; k < d; ++k) f.weights(k) = normal(rng);
    f.weights.normalize();
  }

  std::vector<Index> perm(static_cast<std::size_t>(n_max));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  perm.resize(static_cast<std::size_t>(p.n_target));

  TwinCityTruth twins;
  twins.source_latent = pool.topRows(p.n_source);
  twins.target_latent.resize(p.n_target, d);
  twins.true_match.assign(static_cast<std::size_t>(p.n_source), kUnmatched);
  for (Index j = 0; j < p.n_target; ++j) {
    const Index origin = perm[static_cast<std::size_t>(j)];
    twins.target_latent.row(j) = pool.row(origin);
    if (origin < p.n_source) twins.true_match[static_cast<std::size_t>(origin)] = j;
  }

  std::vector<Index> matched;
  for (Index i = 0; i < p.n_source; ++i)
    if (twins.true_match[static_cast<std::size_t>(i)] != kUnmatched) matched.push_back(i);
  const auto n_drop = static_cast<std::size_t>(
      std::floor(p.drop_frac * static_cast<double>(matched.size())));
  std::shuffle(matched.begin(), matched.end(), rng);
  for (std::size_t r = 0; r < n_drop; ++r) {
    auto& slot = twins.true_match[static_cast<std::size_t>(matched[r])];
    twins.target_latent.row(slot) = sample_mixture(rng, centers).transpose();
    slot = kUnmatched;
  }

  if (p.noise_sigma > 0.0) {
    for (Index j = 0; j < p.n_target; ++j)
      for (Index k = 0; k < d; ++k) twins.target_latent(j, k) += p.noise_sigma * normal(rng);
  }

  twins.source.city_id = "source";
  twins.target.city_id = "target";
  build_synthetic_city(twins.source_latent, twins.source, twins.source_trips);
  build_synthetic_city(twins.target_latent, twins.target, twins.target_trips);

  for (const auto& f : functionals) {
    for (auto* city : {&twins.source, &twins.target}) {
      const Matrix& latent = city == &twins.source ? twins.source_latent : twins.target_latent;
      Vector y = (latent * f.weights).array() * f.scale + f.offset;
      for (Index i = 0; i < y.size(); ++i) y(i) += kLabelNoise * normal(rng);
      city->labels[f.task] = std::move(y);
    }
  }

  twins.source.validate();
  twins.target.validate();
  return twins;
}

CityGraph permute_city(const CityGraph& city, const std::vector<Index>& perm,
                       const std::string& city_id) {
  const Index n = city.size();
  if (static_cast<Index>(perm.size()) != n) throw InputError("permute_city: size mismatch");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (Index p : perm) {
    if (p < 0 || p >= n || seen[static_cast<std::size_t>(p)]) {
      throw InputError("permute_city: not a permutation");
    }
    seen[static_cast<std::size_t>(p)] = 1;
  }
  CityGraph out;
  out.city_id = city_id;
  out.adjacency.resize(n, n);
  out.mobility.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      out.adjacency(i, j) = city.adjacency(perm[i], perm[j]);
      out.mobility(i, j) = city.mobility(perm[i], perm[j]);
    }
  }
  for (const auto& [task, y] : city.labels) {
    Vector py(n);
    for (Index i = 0; i < n; ++i) py(i) = y(perm[i]);
    out.labels[task] = py;
  }
  return out;
}

void write_twin_cities(const fs::path& dir, const TwinCityTruth& twins) {
  write_city(dir / "source", twins.source, twins.source_trips);
  write_city(dir / "target", twins.target, twins.target_trips);
  std::ofstream out(dir / "truth.csv");
  out << "source_id,target_id\n";
  for (std::size_t i = 0; i < twins.true_match.size(); ++i) {
    out << i << ',' << twins.true_match[i] << '\n';
  }
}

std::vector<Index> load_truth(const fs::path& file) {
  detail::CsvReader reader(file);
  detail::require_header(reader, {"source_id", "target_id"});
  std::vector<Index> truth;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (reader.parse_int(fields[0]) != static_cast<long long>(truth.size())) {
      reader.fail("source_id must be consecutive from 0");
    }
    const auto j = reader.parse_int(fields[1]);
    if (j < kUnmatched) reader.fail("target_id must be >= -1");
    truth.push_back(j);
  }
  return truth;
}

}  // namespace scot
