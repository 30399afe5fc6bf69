#include "scot/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "csv.hpp"
#include "scot/error.hpp"

namespace scot {

namespace {

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw InputError("config key '" + key + "': not a number: '" + value + "'");
  }
  return v;
}

long long to_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw InputError("config key '" + key + "': not an integer: '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InputError("config key '" + key + "': expected true|false, got '" + value + "'");
}

std::string fmt(double v) { return detail::format_double(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

struct Entry {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&, const std::string&)> set;
};

#define SCOT_DOUBLE(KEY, FIELD)                                                    \
  Entry {                                                                          \
    KEY, [](const TrainConfig& c) { return fmt(c.FIELD); },                        \
        [](TrainConfig& c, const std::string& k, const std::string& v) {           \
          c.FIELD = to_double(k, v);                                               \
        }                                                                          \
  }
#define SCOT_INT(KEY, FIELD, TYPE)                                                 \
  Entry {                                                                          \
    KEY, [](const TrainConfig& c) { return std::to_string(c.FIELD); },             \
        [](TrainConfig& c, const std::string& k, const std::string& v) {           \
          c.FIELD = static_cast<TYPE>(to_int(k, v));                               \
        }                                                                          \
  }
#define SCOT_BOOL(KEY, FIELD)                                                      \
  Entry {                                                                          \
    KEY, [](const TrainConfig& c) { return fmt(c.FIELD); },                        \
        [](TrainConfig& c, const std::string& k, const std::string& v) {           \
          c.FIELD = to_bool(k, v);                                                 \
        }                                                                          \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      SCOT_DOUBLE("lr", adam.lr),
      SCOT_DOUBLE("adam_beta1", adam.beta1),
      SCOT_DOUBLE("adam_beta2", adam.beta2),
      SCOT_DOUBLE("adam_eps", adam.eps),
      SCOT_INT("epochs", epochs, int),
      SCOT_INT("seed", seed, std::uint64_t),
      SCOT_INT("dim", dim, Index),
      SCOT_DOUBLE("leak", leak),
      SCOT_DOUBLE("init_std", init_std),
      Entry{"init", [](const TrainConfig& c) { return to_string(c.init); },
            [](TrainConfig& c, const std::string&, const std::string& v) {
              c.init = parse_encoder_init(v);
            }},
      SCOT_DOUBLE("lambda_align", lambda_align),
      SCOT_DOUBLE("lambda_rec", lambda_rec),
      SCOT_DOUBLE("eta", eta),
      SCOT_DOUBLE("ot_weight", ot_weight),
      SCOT_DOUBLE("beta", beta),
      SCOT_DOUBLE("tau", tau),
      SCOT_DOUBLE("sinkhorn.epsilon", sinkhorn.epsilon),
      SCOT_INT("sinkhorn.max_iters", sinkhorn.max_iters, int),
      SCOT_DOUBLE("sinkhorn.tol", sinkhorn.tol),
      Entry{"sinkhorn.marginal_mode",
            [](const TrainConfig& c) { return to_string(c.sinkhorn.marginal_mode); },
            [](TrainConfig& c, const std::string&, const std::string& v) {
              c.sinkhorn.marginal_mode = parse_marginal_mode(v);
            }},
      Entry{"sinkhorn.unbalanced_rho",
            [](const TrainConfig& c) {
              return c.sinkhorn.unbalanced_rho ? fmt(*c.sinkhorn.unbalanced_rho)
                                               : std::string("none");
            },
            [](TrainConfig& c, const std::string& k, const std::string& v) {
              if (v == "none") {
                c.sinkhorn.unbalanced_rho.reset();
              } else {
                c.sinkhorn.unbalanced_rho = to_double(k, v);
              }
            }},
      SCOT_BOOL("sinkhorn.log_domain", sinkhorn.log_domain),
      Entry{"cycle.mode", [](const TrainConfig& c) { return to_string(c.cycle_mode); },
            [](TrainConfig& c, const std::string&, const std::string& v) {
              c.cycle_mode = parse_cycle_mode(v);
            }},
      SCOT_BOOL("cycle.normalize_by_n2", cycle_normalize_by_n2),
      SCOT_INT("hub.k", hub.prototypes, Index),
      SCOT_DOUBLE("hub.tau_b", hub.tau_b),
      SCOT_DOUBLE("hub.eps_b", hub.eps_b),
      SCOT_DOUBLE("hub.lambda_c", hub.lambda_c),
      SCOT_DOUBLE("hub.lambda_hub", hub.lambda_hub),
      Entry{"hub.prior_mode", [](const TrainConfig& c) { return to_string(c.hub.prior_mode); },
            [](TrainConfig& c, const std::string&, const std::string& v) {
              c.hub.prior_mode = parse_prior_mode(v);
            }},
      SCOT_INT("hub.frozen_epoch", hub.frozen_epoch, int),
      SCOT_DOUBLE("hub.epsilon", hub.sinkhorn.epsilon),
      SCOT_INT("hub.max_iters", hub.sinkhorn.max_iters, int),
      SCOT_DOUBLE("hub.tol", hub.sinkhorn.tol),
      Entry{"hub.unbalanced_rho",
            [](const TrainConfig& c) {
              return c.hub.sinkhorn.unbalanced_rho ? fmt(*c.hub.sinkhorn.unbalanced_rho)
                                                   : std::string("none");
            },
            [](TrainConfig& c, const std::string& k, const std::string& v) {
              if (v == "none") {
                c.hub.sinkhorn.unbalanced_rho.reset();
              } else {
                c.hub.sinkhorn.unbalanced_rho = to_double(k, v);
              }
            }},
      SCOT_DOUBLE("clip_norm", clip_norm),
      SCOT_INT("diag_every", diag_every, int),
  };
  return table;
}

#undef SCOT_DOUBLE
#undef SCOT_INT
#undef SCOT_BOOL

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string to_string(EncoderInit init) {
  return init == EncoderInit::kSpectral ? "spectral" : "gaussian";
}

EncoderInit parse_encoder_init(const std::string& text) {
  if (text == "spectral") return EncoderInit::kSpectral;
  if (text == "gaussian") return EncoderInit::kGaussian;
  throw InputError("unknown encoder init '" + text + "' (expected spectral|gaussian)");
}

void TrainConfig::validate() const {
  if (!(adam.lr > 0.0) || !(adam.eps > 0.0)) throw InputError("config: lr and adam_eps must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw InputError("config: adam betas must be in [0, 1)");
  }
  if (epochs < 1) throw InputError("config: epochs must be >= 1");
  if (dim < 2) throw InputError("config: dim must be >= 2");
  if (!(tau > 0.0)) throw InputError("config: tau must be > 0");
  if (!(lambda_align >= 0.0) || !(lambda_rec >= 0.0) || !(eta >= 0.0) || !(beta >= 0.0) ||
      !(ot_weight >= 0.0)) {
    throw InputError("config: loss weights must be >= 0");
  }
  if (!(init_std > 0.0)) throw InputError("config: init_std must be > 0");
  if (diag_every < 1) throw InputError("config: diag_every must be >= 1");
  sinkhorn.validate();
  hub.validate();
}

void set_config_value(TrainConfig& config, const std::string& key, const std::string& value) {
  for (const auto& e : entries()) {
    if (key == e.key) {
      e.set(config, key, value);
      return;
    }
  }
  std::ostringstream msg;
  msg << "unknown config key '" << key << "'; valid keys:";
  for (const auto& e : entries()) msg << ' ' << e.key;
  throw InputError(msg.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : entries()) out.emplace_back(e.key, e.get(config));
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : entries()) keys.emplace_back(e.key);
  return keys;
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    set_config_value(base, trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  base.validate();
  return base;
}

TrainConfig load_config(const std::filesystem::path& file, TrainConfig base) {
  std::ifstream in(file);
  if (!in) throw NotFoundError("config file not found: " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base));
}

}  // namespace scot
