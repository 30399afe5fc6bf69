#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "scot/cycle.hpp"
#include "scot/hub.hpp"
#include "scot/optim.hpp"
#include "scot/sinkhorn.hpp"

namespace scot {

enum class EncoderInit { kSpectral, kGaussian };

std::string to_string(EncoderInit init);
EncoderInit parse_encoder_init(const std::string& text);

/// Every knob of both training loops. Defaults are the shipped configuration.
struct TrainConfig {
  AdamConfig adam;
  int epochs = 300;
  std::uint64_t seed = 0;
  Index dim = 32;
  double leak = 0.25;
  double init_std = 0.1;
  EncoderInit init = EncoderInit::kSpectral;

  double lambda_align = 1.0;
  double lambda_rec = 0.5;
  double eta = 0.5;
  double ot_weight = 1.0;  // weight of L_OT inside L_Align (0 ablates it)
  double beta = 0.05;
  double tau = 0.1;

  SinkhornConfig sinkhorn;
  CycleMode cycle_mode = CycleMode::kOneSided;
  bool cycle_normalize_by_n2 = false;
  HubConfig hub;

  double clip_norm = 10.0;  // <= 0 disables clipping
  int diag_every = 10;

  void validate() const;
};

/// Flat `key=value` configuration. Keys match `config_keys()`.
void set_config_value(TrainConfig& config, const std::string& key, const std::string& value);

/// All keys with their current values, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& config);

std::vector<std::string> config_keys();

/// Parses `key=value` lines (blank lines and `#` comments ignored) on top of
/// the defaults in `base`.
TrainConfig parse_config(const std::string& text, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& file, TrainConfig base = {});

}  // namespace scot
