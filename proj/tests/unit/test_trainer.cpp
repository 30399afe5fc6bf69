#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "scot/error.hpp"
#include "scot/trainer.hpp"

namespace fs = std::filesystem;
using namespace scot;

namespace {

TrainConfig short_config(int epochs = 20) {
  TrainConfig c;
  c.epochs = epochs;
  c.seed = 3;
  c.dim = 8;
  c.diag_every = 5;
  return c;
}

std::string slurp(const fs::path& f) {
  std::ifstream in(f);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Plain intra-only Adam loop, written out independently of the trainer.
EncoderParams intra_only(EncoderParams p, const CityGraph& city, const TrainConfig& config) {
  const Matrix adj = normalized_adjacency(city.adjacency);
  AdamState st_h0, st_mix;
  for (int e = 0; e < config.epochs; ++e) {
    const Matrix z = encode(p, adj);
    const EncoderGrads g = encode_backward(p, adj, intra_loss(z, city.mobility).grad);
    adam_step(p.h0, g.h0, st_h0, config.adam, "h0");
    adam_step(p.mix, g.mix, st_mix, config.adam, "mix");
  }
  return p;
}

}  // namespace

TEST(Trainer, ZeroCouplingWeightsReduceToIndependentIntraTraining) {
  const TwinCityTruth tw = gen_twin_cities({});
  TrainConfig c = short_config(15);
  c.lambda_align = 0.0;
  c.lambda_rec = 0.0;
  c.clip_norm = 0.0;
  const SingleRun run = train_single(tw.source, tw.target, c);

  auto rng_s = block_rng(c.seed, 0);
  auto rng_t = block_rng(c.seed, 1);
  const EncoderParams s0 = init_encoder_spectral(tw.source, c.dim, rng_s, c.init_std, c.leak);
  const EncoderParams t0 = init_encoder_spectral(tw.target, c.dim, rng_t, c.init_std, c.leak);
  const EncoderParams s = intra_only(s0, tw.source, c);
  const EncoderParams t = intra_only(t0, tw.target, c);
  EXPECT_LT((run.source.h0 - s.h0).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((run.source.mix - s.mix).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((run.target.h0 - t.h0).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((run.target.mix - t.mix).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Trainer, LoggedTotalDecomposes) {
  TwinCityParams p;
  p.noise_sigma = 0.3;
  const TwinCityTruth tw = gen_twin_cities(p);
  const TrainConfig c = short_config();
  const SingleRun run = train_single(tw.source, tw.target, c);
  ASSERT_EQ(run.record.rows.size(), 20u);
  for (const auto& row : run.record.rows) {
    EXPECT_NEAR(row.total, recompose_total(row, c, false), 1e-9 * std::abs(row.total) + 1e-12);
    EXPECT_NEAR(row.l_align, row.l_ot + c.eta * row.l_con, 1e-12);
    EXPECT_GT(row.total_mass, 0.0);
  }
}

TEST(Trainer, DiagnosticsFollowSchedule) {
  const TwinCityTruth tw = gen_twin_cities({});
  TrainConfig c = short_config(12);
  const SingleRun run = train_single(tw.source, tw.target, c);
  for (const auto& row : run.record.rows) {
    const bool expected = row.epoch == 1 || row.epoch % 5 == 0 || row.epoch == 12;
    EXPECT_EQ(row.q_max.has_value(), expected) << "epoch " << row.epoch;
    EXPECT_FALSE(row.b_entropy.has_value());
  }
}

TEST(Trainer, SingleRunIsDeterministic) {
  const TwinCityTruth tw = gen_twin_cities({});
  const TrainConfig c = short_config();
  const SingleRun a = train_single(tw.source, tw.target, c);
  const SingleRun b = train_single(tw.source, tw.target, c);
  EXPECT_TRUE(a.source_embedding == b.source_embedding);
  EXPECT_TRUE(a.coupling.plan == b.coupling.plan);
  const fs::path dir = fs::temp_directory_path() / "scot_trainer_det";
  fs::create_directories(dir);
  a.record.write_csv(dir / "a.csv");
  b.record.write_csv(dir / "b.csv");
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  fs::remove_all(dir);
}

TEST(Trainer, LearningReducesTotal) {
  TwinCityParams p;
  p.noise_sigma = 0.3;
  const TwinCityTruth tw = gen_twin_cities(p);
  const SingleRun run = train_single(tw.source, tw.target, short_config(100));
  EXPECT_LT(run.record.rows.back().total, run.record.rows.front().total);
}

TEST(Trainer, MultiSourceRecordsHubUsage) {
  const auto fam = scot::testing::twin_family(2);
  TrainConfig c = short_config(6);
  c.hub.prototypes = 8;
  c.diag_every = 3;
  const MultiRun run = train_multi(fam.sources, fam.target, c);
  ASSERT_EQ(run.encoders.size(), 3u);
  ASSERT_EQ(run.couplings.size(), 3u);
  ASSERT_EQ(run.record.cities.size(), 3u);
  EXPECT_EQ(run.hub.size(), 8);
  EXPECT_NEAR(run.hub.b.sum(), 1.0, 1e-12);
  for (const auto& row : run.record.rows) {
    EXPECT_TRUE(row.b_entropy.has_value());
    EXPECT_NEAR(row.total, recompose_total(row, c, true), 1e-9 * std::abs(row.total) + 1e-12);
  }
  // Epochs 1, 3 and 6, one row per city.
  EXPECT_EQ(run.record.hub_usage.size(), 9u);
  for (const auto& q : run.assignments) {
    for (Index i = 0; i < q.rows(); ++i) EXPECT_NEAR(q.row(i).sum(), 1.0, 1e-9);
  }
}

TEST(Trainer, RejectsInvalidConfigAndCities) {
  const TwinCityTruth tw = gen_twin_cities({});
  TrainConfig c = short_config();
  c.dim = 1;
  EXPECT_THROW(train_single(tw.source, tw.target, c), InputError);
  EXPECT_THROW(train_multi({}, tw.target, short_config()), InputError);
  CityGraph broken = tw.source;
  broken.mobility(0, 0) += 0.5;
  EXPECT_THROW(train_single(broken, tw.target, short_config()), InputError);
}

TEST(BlockRng, StreamsDifferAndRepeat) {
  auto a = block_rng(7, 0);
  auto b = block_rng(7, 1);
  auto c = block_rng(7, 0);
  const auto x = a();
  EXPECT_NE(x, b());
  EXPECT_EQ(x, c());
}
