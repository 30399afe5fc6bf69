#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fixtures.hpp"
#include "scot/config.hpp"
#include "scot/error.hpp"
#include "scot/io.hpp"
#include "scot/optim.hpp"

namespace fs = std::filesystem;
using namespace scot;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "scot_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Adam, FirstStepMovesByLearningRate) {
  // Bias correction makes the first update exactly lr * sign(g) (up to eps).
  Matrix x = (Matrix(1, 3) << 1.0, -2.0, 0.5).finished();
  const Matrix g = (Matrix(1, 3) << 3.0, -0.01, 40.0).finished();
  AdamState st;
  AdamConfig cfg;
  cfg.lr = 0.01;
  const Matrix before = x;
  adam_step(x, g, st, cfg, "x");
  const Matrix step = before - x;
  EXPECT_NEAR(step(0), 0.01, 1e-8);
  EXPECT_NEAR(step(1), -0.01, 1e-6);
  EXPECT_NEAR(step(2), 0.01, 1e-8);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, ZeroGradientLeavesParamUnchanged) {
  Matrix x = Matrix::Constant(2, 2, 0.3);
  AdamState st;
  adam_step(x, Matrix::Zero(2, 2), st, {}, "x");
  EXPECT_TRUE(x.isApprox(Matrix::Constant(2, 2, 0.3)));
}

TEST(Adam, MinimizesQuadratic) {
  Matrix x = Matrix::Constant(1, 2, 5.0);
  AdamState st;
  AdamConfig cfg;
  cfg.lr = 0.1;
  for (int i = 0; i < 2000; ++i) adam_step(x, 2.0 * x, st, cfg, "x");
  EXPECT_LT(x.cwiseAbs().maxCoeff(), 1e-2);
}

TEST(Adam, NonFiniteGradientNamesBlock) {
  Matrix x = Matrix::Zero(1, 1);
  AdamState st;
  const Matrix g = Matrix::Constant(1, 1, std::numeric_limits<double>::quiet_NaN());
  try {
    adam_step(x, g, st, {}, "h0_source");
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("h0_source"), std::string::npos);
  }
  EXPECT_THROW(adam_step(x, Matrix::Zero(2, 1), st, {}, "x"), InputError);
}

TEST(GlobalNorm, CombinesBlocks) {
  const Matrix a = (Matrix(1, 2) << 3.0, 0.0).finished();
  const Matrix b = (Matrix(1, 1) << 4.0).finished();
  EXPECT_DOUBLE_EQ(global_norm({&a, &b}), 5.0);
  EXPECT_DOUBLE_EQ(global_norm({}), 0.0);
}

TEST(Config, EntriesRoundTrip) {
  TrainConfig c;
  c.epochs = 17;
  c.sinkhorn.unbalanced_rho = 0.3;
  c.hub.prior_mode = PriorMode::kFrozen;
  c.init = EncoderInit::kGaussian;
  c.cycle_mode = CycleMode::kTwoSided;
  std::string text;
  for (const auto& [k, v] : config_entries(c)) text += k + "=" + v + "\n";
  const TrainConfig back = parse_config(text);
  EXPECT_EQ(config_entries(back), config_entries(c));
  EXPECT_EQ(back.epochs, 17);
  EXPECT_EQ(*back.sinkhorn.unbalanced_rho, 0.3);
}

TEST(Config, KeysMatchEntries) {
  const auto entries = config_entries(TrainConfig{});
  const auto keys = config_keys();
  ASSERT_EQ(entries.size(), keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) EXPECT_EQ(entries[i].first, keys[i]);
}

TEST(Config, ParsesCommentsAndWhitespace) {
  const TrainConfig c = parse_config("# comment\n\n  eta = 0.25 \nsinkhorn.unbalanced_rho=none\n");
  EXPECT_EQ(c.eta, 0.25);
  EXPECT_FALSE(c.sinkhorn.unbalanced_rho.has_value());
}

TEST(Config, RejectsBadInput) {
  TrainConfig c;
  EXPECT_THROW(set_config_value(c, "foo", "1"), InputError);
  EXPECT_THROW(set_config_value(c, "epochs", "many"), InputError);
  EXPECT_THROW(parse_config("eta\n"), InputError);
  EXPECT_THROW(parse_config("epochs=0\n"), InputError);
  EXPECT_THROW(load_config(scratch("missing.cfg")), NotFoundError);
}

TEST(Config, UnknownKeyMessageListsValidKeys) {
  TrainConfig c;
  try {
    set_config_value(c, "foo", "1");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("lambda_align"), std::string::npos);
  }
}

TEST(MatrixCsv, RoundTripsExactly) {
  std::mt19937_64 rng(1);
  Matrix m = scot::testing::gaussian_matrix(5, 3, rng);
  m(0, 0) = 1e-300;
  m(1, 1) = 0.1;
  const fs::path f = scratch("m.csv");
  write_matrix_csv(f, m);
  EXPECT_TRUE(read_matrix_csv(f) == m);
}

TEST(Params, RoundTripsExactly) {
  std::mt19937_64 rng(2);
  const std::vector<NamedMatrix> blocks = {{"h0", scot::testing::gaussian_matrix(4, 2, rng)},
                                           {"mix", scot::testing::gaussian_matrix(2, 2, rng)},
                                           {"empty", Matrix(0, 3)}};
  const fs::path f = scratch("p.bin");
  write_params(f, blocks);
  const auto back = read_params(f);
  ASSERT_EQ(back.size(), blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    EXPECT_EQ(back[i].name, blocks[i].name);
    EXPECT_TRUE(back[i].value == blocks[i].value);
  }
}

TEST(Params, RejectsForeignAndTruncatedFiles) {
  const fs::path f = scratch("bad.bin");
  std::ofstream(f) << "not a parameter file";
  EXPECT_THROW(read_params(f), InputError);

  write_params(f, {{"x", Matrix::Ones(3, 3)}});
  fs::resize_file(f, fs::file_size(f) - 8);
  EXPECT_THROW(read_params(f), InputError);
  EXPECT_THROW(read_params(scratch("nope.bin")), NotFoundError);
}
