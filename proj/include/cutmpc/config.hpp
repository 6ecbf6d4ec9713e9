#pragma once

#include "cutmpc/common.hpp"
#include "cutmpc/plant.hpp"

#include <string>
#include <vector>

namespace cutmpc::cli {

/// Every pipeline knob, one flat file with sections. All fields have working
/// defaults; unknown keys are rejected; the effective config is snapshotted
/// into every output directory.
struct RunConfig {
  // [run]
  std::uint64_t seed = 1;
  std::string materials_file;

  // [plant]
  sim::PlantConfig plant;

  // [collect]
  int trials_per_material = 30;
  std::vector<std::string> train_materials = {"cake",        "cucumber", "zucchini", "cheese",
                                              "bell-pepper", "hollow-pepper", "lemon"};
  std::vector<std::string> held_out = {"potato", "carrot"};
  double duration_min = 3.0, duration_max = 4.5;
  double saw_range = 0.03;
  double saw_period_min = 0.5, saw_period_max = 1.2;
  double ka_min = 0.02, ka_max = 0.15;
  double kp_min = 0.0, kp_max = 2.0;
  double trial_extra_s = 1.0;  // keep sawing after the descent ends

  // [dataset]
  int block_m = 10;
  double train_fraction = 0.8;

  // [train]
  double stage1_lr = 1e-3;
  int stage1_epochs = 50;
  double stage2_lr = 1e-3;
  int stage2_epochs = 100;
  double stage3_lr = 3e-4;
  int stage3_epochs = 100;
  int minibatch = 32;
  double momentum = 0.9;
  double clip_norm = 5.0;
  int horizon_blocks = 5;
  int hidden = 32;
  int latent = 3;
  int rnn_units = 30;

  // [mpc]
  int candidates = 128;
  double force_amp = 8.0;
  double c_cut = 50.0;
  double c_saw = 10.0;
  double c_v = 1e-4;
  double control_rate = 10.0;
  double deploy_ka = 0.08;
  double timeout_s = 60.0;
  double force_limit_n = 50.0;
  double complete_tol_m = 1e-3;

  // [eval]
  int eval_n = 5;
  std::vector<std::string> eval_materials = {"cake",   "cucumber",      "zucchini",
                                             "cheese", "bell-pepper",   "hollow-pepper",
                                             "lemon",  "potato",        "carrot"};

  void validate() const;
};

/// Parse the sectioned key=value file into defaults. Unknown sections or keys
/// throw ConfigError with the offending line.
RunConfig load_config(const std::string& path);

/// Apply one "section.key=value" override.
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Deterministic serialization of the effective config (the snapshot format).
std::string serialize_config(const RunConfig& cfg);
void write_config(const RunConfig& cfg, const std::string& path);

}  // namespace cutmpc::cli
