#include "commands.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "manifest.hpp"
#include "scot/citydata.hpp"
#include "scot/config.hpp"
#include "scot/error.hpp"
#include "scot/eval.hpp"
#include "scot/gradcheck.hpp"
#include "scot/io.hpp"
#include "scot/sinkhorn.hpp"
#include "scot/trainer.hpp"

namespace fs = std::filesystem;

namespace scot::cli {
namespace {

// Shortest text that round-trips the double.
std::string format_value(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void prepare_out_dir(const fs::path& dir, bool force) {
  if (dir.empty()) throw InputError("--out is required");
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw InputError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !force) {
      throw InputError(dir.string() + " is not empty (pass --force to overwrite)");
    }
  }
  fs::create_directories(dir);
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

// Inputs are recorded as "<role>:<path>" so eval can find the cities again.
std::vector<std::string> inputs_with_role(const RunManifest& m, const std::string& role) {
  std::vector<std::string> out;
  const std::string prefix = role + ":";
  for (const auto& in : m.inputs)
    if (in.rfind(prefix, 0) == 0) out.push_back(in.substr(prefix.size()));
  return out;
}

std::string lookup(const KeyValues& kv, const std::string& key) {
  for (const auto& [k, v] : kv)
    if (k == key) return v;
  return {};
}

void write_coupling_outputs(const fs::path& out, const std::string& suffix, const Matrix& plan) {
  write_matrix_csv(out / ("coupling" + suffix + ".csv"), plan);
}

}  // namespace

int run_gencity(const GencityOptions& opt, std::ostream& log) {
  RunManifest manifest;
  manifest.started = utc_timestamp();
  prepare_out_dir(opt.out, opt.force);

  TwinCityParams p;
  p.seed = opt.seed;
  p.n_source = opt.ns;
  p.n_target = opt.nt;
  p.latent_dim = opt.dlatent;
  p.noise_sigma = opt.noise;
  p.drop_frac = opt.drop;
  const TwinCityTruth twins = gen_twin_cities(p);
  write_twin_cities(opt.out, twins);

  manifest.command = "gencity";
  manifest.seed = opt.seed;
  manifest.output_dir = absolute(opt.out);
  manifest.config = {{"seed", std::to_string(opt.seed)},   {"ns", std::to_string(opt.ns)},
                     {"nt", std::to_string(opt.nt)},       {"dlatent", std::to_string(opt.dlatent)},
                     {"noise", format_value(opt.noise)},   {"drop", format_value(opt.drop)}};
  manifest.finished = utc_timestamp();
  manifest.write(fs::path(opt.out) / "manifest.json");
  log << "wrote twin cities to " << opt.out << " (" << twins.matched_count() << " matched of "
      << opt.ns << " source regions)\n";
  return 0;
}

int run_train(const TrainOptions& opt, std::ostream& log) {
  RunManifest manifest;
  manifest.started = utc_timestamp();
  const bool multi = opt.mode == "multi";
  if (!multi && opt.mode != "single") {
    throw InputError("--mode must be single or multi, got '" + opt.mode + "'");
  }
  if (opt.sources.empty()) throw InputError("at least one --source is required");
  if (!multi && opt.sources.size() != 1) {
    throw InputError("--mode single takes exactly one --source");
  }
  if (opt.target.empty()) throw InputError("--target is required");

  TrainConfig config;
  if (!opt.config_file.empty()) config = load_config(opt.config_file, config);
  for (const auto& kv : opt.overrides) config = parse_config(kv, config);
  config.validate();

  std::vector<CityGraph> sources;
  for (const auto& dir : opt.sources) sources.push_back(load_city(dir));
  const CityGraph target = load_city(opt.target);
  prepare_out_dir(opt.out, opt.force);
  const fs::path out(opt.out);

  manifest.command = "train";
  manifest.seed = config.seed;
  manifest.output_dir = absolute(opt.out);
  for (const auto& dir : opt.sources) manifest.inputs.push_back("source:" + absolute(dir));
  manifest.inputs.push_back("target:" + absolute(opt.target));
  manifest.config.emplace_back("mode", opt.mode);
  for (auto& entry : config_entries(config)) manifest.config.push_back(std::move(entry));

  if (!multi) {
    const SingleRun run = train_single(sources.front(), target, config);
    run.record.write_csv(out / "train_record.csv");
    run.record.write_timing_csv(out / "timing.csv");
    write_params(out / "params.bin", {{"h0_source", run.source.h0},
                                      {"mix_source", run.source.mix},
                                      {"h0_target", run.target.h0},
                                      {"mix_target", run.target.mix},
                                      {"wq", run.cycle.wq},
                                      {"wk", run.cycle.wk}});
    write_coupling_outputs(out, "", run.coupling.plan);
    write_matrix_csv(out / "embeddings_source.csv", run.source_embedding);
    write_matrix_csv(out / "embeddings_target.csv", run.target_embedding);
  } else {
    const MultiRun run = train_multi(sources, target, config);
    run.record.write_csv(out / "train_record.csv");
    run.record.write_timing_csv(out / "timing.csv");
    run.record.write_hub_usage_csv(out / "hub_usage.csv");
    std::vector<NamedMatrix> blocks;
    for (std::size_t m = 0; m < run.encoders.size(); ++m) {
      const std::string& city = run.record.cities[m];
      blocks.push_back({"h0_" + city, run.encoders[m].h0});
      blocks.push_back({"mix_" + city, run.encoders[m].mix});
      write_coupling_outputs(out, "_" + city, run.couplings[m].plan);
      write_matrix_csv(out / ("assignment_" + city + ".csv"), run.assignments[m]);
      write_matrix_csv(out / ("embeddings_" + city + ".csv"), run.embeddings[m]);
    }
    blocks.push_back({"prototypes", run.hub.prototypes});
    blocks.push_back({"prior_b", run.hub.b});
    blocks.push_back({"wq", run.cycle.wq});
    blocks.push_back({"wk", run.cycle.wk});
    write_params(out / "params.bin", blocks);
  }
  manifest.finished = utc_timestamp();
  manifest.write(out / "manifest.json");
  log << "trained " << opt.mode << "-source run for " << config.epochs << " epochs -> " << opt.out
      << " (config " << manifest.config_hash() << ")\n";
  return 0;
}

int run_diagnose(const DiagnoseOptions& opt, std::ostream& os) {
  if (opt.coupling.empty() == opt.hub_run.empty()) {
    throw InputError("diagnose needs exactly one of --coupling or --hub");
  }
  std::ofstream file;
  if (!opt.out.empty()) {
    file.open(opt.out);
    if (!file) throw InputError("cannot write " + opt.out);
  }
  std::ostream& out = opt.out.empty() ? os : file;

  if (!opt.coupling.empty()) {
    if (!fs::exists(opt.coupling)) {
      throw NotFoundError("missing coupling " + opt.coupling +
                          " (expected a run's coupling*.csv written by train)");
    }
    const CouplingDiagnostics d = coupling_diagnostics(read_matrix_csv(opt.coupling));
    if (!opt.summary_only) {
      out << "region,marginal,max_weight,entropy\n";
      for (Index i = 0; i < d.row_marginals.size(); ++i) {
        out << i << ',' << format_value(d.row_marginals(i)) << ',' << format_value(d.row_max(i))
            << ',' << format_value(d.row_entropies(i)) << '\n';
      }
      out << '\n';
    }
    out << "q_max,q_ent,q_ent_norm,total_mass,zero_rows\n"
        << format_value(d.q_max) << ',' << format_value(d.q_ent) << ','
        << format_value(d.q_ent_normalized) << ',' << format_value(d.total_mass) << ','
        << d.zero_rows << '\n';
    return 0;
  }

  const fs::path usage = fs::path(opt.hub_run) / "hub_usage.csv";
  std::ifstream in(usage);
  if (!in) {
    throw NotFoundError("missing " + usage.string() + " (expected a --mode multi train run)");
  }
  std::string line;
  std::getline(in, line);
  out << line << '\n';
  while (std::getline(in, line)) {
    if (!opt.city.empty()) {
      const auto a = line.find(',');
      const auto b = line.find(',', a + 1);
      if (a == std::string::npos || line.substr(a + 1, b - a - 1) != opt.city) continue;
    }
    out << line << '\n';
  }
  return 0;
}

int run_eval(const EvalOptions& opt, std::ostream& out) {
  const fs::path run(opt.run);
  const RunManifest manifest = read_manifest(run / "manifest.json");
  if (manifest.command != "train") throw InputError(opt.run + " is not a train run");
  const bool multi = lookup(manifest.config, "mode") == "multi";
  const auto source_dirs = inputs_with_role(manifest, "source");
  const auto target_dirs = inputs_with_role(manifest, "target");
  if (source_dirs.empty() || target_dirs.size() != 1) {
    throw InputError("manifest of " + opt.run + " lacks source/target inputs");
  }

  const auto embedding = [&](const std::string& city) {
    const fs::path f = run / ("embeddings_" + city + ".csv");
    if (!fs::exists(f)) throw NotFoundError("missing " + f.string());
    return read_matrix_csv(f);
  };
  std::vector<CityGraph> sources;
  std::vector<Matrix> zs;
  for (std::size_t m = 0; m < source_dirs.size(); ++m) {
    sources.push_back(load_city(source_dirs[m]));
    zs.push_back(embedding(multi ? "source" + std::to_string(m) : "source"));
  }
  const CityGraph target = load_city(target_dirs.front());
  const Matrix zt = embedding("target");

  std::vector<std::string> tasks = opt.tasks;
  if (tasks.empty())
    for (const auto& [name, y] : target.labels) tasks.push_back(name);
  if (tasks.empty()) throw InputError("target city has no labels to evaluate");

  out << "task,mae,mape,excluded\n";
  for (const auto& task : tasks) {
    // Pool labelled regions of every source into one readout.
    Index rows = 0;
    for (const auto& s : sources) {
      if (!s.labels.count(task)) throw InputError("source city lacks label '" + task + "'");
      rows += s.size();
    }
    if (!target.labels.count(task)) throw InputError("target city lacks label '" + task + "'");
    Matrix z(rows, zt.cols());
    Vector y(rows);
    Index r = 0;
    for (std::size_t m = 0; m < sources.size(); ++m) {
      if (zs[m].rows() != sources[m].size()) {
        throw InputError("embedding rows do not match source region count");
      }
      z.middleRows(r, zs[m].rows()) = zs[m];
      y.segment(r, zs[m].rows()) = sources[m].labels.at(task);
      r += zs[m].rows();
    }
    const RidgeModel model = ridge_fit(z, y, opt.alpha, !opt.uncentered);
    const TransferMetrics tm = transfer_metrics(model, zt, target.labels.at(task));
    out << task << ',' << format_value(tm.mae) << ',' << format_value(tm.mape) << ','
        << tm.excluded << '\n';
  }

  if (!opt.truth.empty()) {
    if (multi) throw InputError("--truth applies to single-source runs");
    const MatchingMetrics mm =
        matching_metrics(read_matrix_csv(run / "coupling.csv"), load_truth(opt.truth));
    out << "\ntop1_acc,true_mass_lift,matched,ties\n"
        << format_value(mm.top1_acc) << ',' << format_value(mm.mean_true_mass_ratio) << ','
        << mm.matched << ',' << mm.ties << '\n';
  }
  return 0;
}

int run_gradcheck(const GradcheckCliOptions& opt, std::ostream& out) {
  GradcheckOptions g;
  g.regions = opt.regions;
  g.dim = opt.dim;
  g.step = opt.step;
  g.threshold = opt.threshold;
  const GradcheckReport rep = gradcheck(parse_grad_component(opt.component), opt.seed, g);
  out << "block,max_rel_error,status\n";
  for (const auto& b : rep.blocks) {
    const bool ok = b.finite && b.max_rel_error < rep.threshold;
    out << b.block << ',' << format_value(b.max_rel_error) << ',' << (ok ? "ok" : "FAIL") << '\n';
  }
  return rep.ok() ? 0 : 2;
}

}  // namespace scot::cli
