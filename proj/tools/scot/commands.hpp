#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace scot::cli {

struct GencityOptions {
  std::uint64_t seed = 1;
  long ns = 20;
  long nt = 20;
  long dlatent = 8;
  double noise = 0.0;
  double drop = 0.0;
  std::string out;
  bool force = false;
};

struct TrainOptions {
  std::string mode = "single";
  std::vector<std::string> sources;
  std::string target;
  std::string config_file;
  std::vector<std::string> overrides;  // key=value, applied after the file
  std::string out;
  bool force = false;
};

struct DiagnoseOptions {
  std::string coupling;
  std::string hub_run;
  std::string city;  // filter for --hub; empty = every city
  std::string out;   // empty = stdout
  bool summary_only = false;
};

struct EvalOptions {
  std::string run;
  std::vector<std::string> tasks;  // empty = every label column of the target
  double alpha = 1.0;
  bool uncentered = false;
  std::string truth;
};

struct GradcheckCliOptions {
  std::string component = "all";
  std::uint64_t seed = 0;
  long regions = 5;
  long dim = 3;
  double step = 1e-5;
  double threshold = 1e-3;
};

// Each returns the process exit code for a completed command; input and
// numerical failures are reported by throwing scot::Error subclasses.
int run_gencity(const GencityOptions& opt, std::ostream& log);
int run_train(const TrainOptions& opt, std::ostream& log);
int run_diagnose(const DiagnoseOptions& opt, std::ostream& out);
int run_eval(const EvalOptions& opt, std::ostream& out);
int run_gradcheck(const GradcheckCliOptions& opt, std::ostream& out);

}  // namespace scot::cli
