#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "scot/error.hpp"

using namespace scot::cli;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scot: cross-city region alignment with entropic optimal transport"};
  app.require_subcommand(1);

  GencityOptions gen;
  auto* gencity = app.add_subcommand("gencity", "Generate a synthetic twin-city pair");
  gencity->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gencity->add_option("--ns", gen.ns, "Source region count")->capture_default_str();
  gencity->add_option("--nt", gen.nt, "Target region count")->capture_default_str();
  gencity->add_option("--dlatent", gen.dlatent, "Latent dimension")->capture_default_str();
  gencity->add_option("--noise", gen.noise, "Target latent noise std")->capture_default_str();
  gencity->add_option("--drop", gen.drop, "Fraction of matches dropped")->capture_default_str();
  gencity->add_option("--out", gen.out, "Output directory")->required();
  gencity->add_flag("--force", gen.force, "Write into a non-empty directory");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train single-source or hub alignment");
  train_cmd->add_option("--mode", train.mode, "single | multi")
      ->check(CLI::IsMember({"single", "multi"}))
      ->capture_default_str();
  train_cmd->add_option("--source", train.sources, "Source city directory (repeatable)")
      ->required();
  train_cmd->add_option("--target", train.target, "Target city directory")->required();
  train_cmd->add_option("--config", train.config_file, "key=value config file");
  train_cmd->add_option("--set", train.overrides, "key=value override (repeatable)");
  train_cmd->add_option("--out", train.out, "Run directory")->required();
  train_cmd->add_flag("--force", train.force, "Write into a non-empty directory");

  DiagnoseOptions diag;
  auto* diagnose = app.add_subcommand("diagnose", "Coupling or hub-usage diagnostics as CSV");
  diagnose->add_option("--coupling", diag.coupling, "Coupling CSV written by train");
  diagnose->add_option("--hub", diag.hub_run, "Multi-source run directory");
  diagnose->add_option("--city", diag.city, "Restrict --hub output to one city");
  diagnose->add_option("--out", diag.out, "Write to this file instead of stdout");
  diagnose->add_flag("--summary-only", diag.summary_only, "Only the summary row");

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Ridge transfer MAE/MAPE for a train run");
  eval->add_option("--run", ev.run, "Run directory")->required();
  eval->add_option("--task", ev.tasks, "Label column (repeatable; default all)");
  eval->add_option("--alpha", ev.alpha, "Ridge penalty")->capture_default_str();
  eval->add_flag("--uncentered", ev.uncentered, "Fit without intercept");
  eval->add_option("--truth", ev.truth, "truth.csv for matching accuracy (single mode)");

  GradcheckCliOptions gc;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of analytic gradients");
  grad->add_option("--component", gc.component,
                   "intra | encoder | align | contrastive | cycle | hub | total | all")
      ->capture_default_str();
  grad->add_option("--seed", gc.seed, "Instance seed")->capture_default_str();
  grad->add_option("--regions", gc.regions, "Regions per city")->capture_default_str();
  grad->add_option("--dim", gc.dim, "Embedding dimension")->capture_default_str();
  grad->add_option("--step", gc.step, "Central difference step")->capture_default_str();
  grad->add_option("--threshold", gc.threshold, "Max relative error")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*gencity) return run_gencity(gen, std::cerr);
    if (*train_cmd) return run_train(train, std::cerr);
    if (*diagnose) return run_diagnose(diag, std::cout);
    if (*eval) return run_eval(ev, std::cout);
    if (*grad) return run_gradcheck(gc, std::cout);
  } catch (const scot::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitInput;
}
