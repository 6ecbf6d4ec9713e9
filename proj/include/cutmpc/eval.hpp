#pragma once

#include "cutmpc/common.hpp"
#include "cutmpc/controller.hpp"
#include "cutmpc/dataset.hpp"
#include "cutmpc/mpc.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cutmpc::eval {

struct TrialResult {
  std::string material;
  std::string controller;  // "baseline" or "mpc"
  bool completed = false;
  double cut_time_s = 0.0;     // elapsed until completion or timeout
  double cutting_rate = 0.0;   // depth cut per second over cut_time_s
  double final_cut_front = 0.0;
  double peak_force_n = 0.0;
  std::uint64_t seed = 0;
  std::string log_path;
};

/// Fixed-trajectory admittance baseline, tuned per material.
struct BaselineConfig {
  ctl::Gains gains;
  ctl::DesiredTrajectory traj;
  double tuned_rate = 0.0;  // rate achieved on the tuning trial
};

struct EvalContext {
  sim::MaterialLibrary materials;
  sim::PlantConfig plant;
  net::NetworkParams params;
  data::NormStats stats;
  ctl::Gains deploy_gains;       // K_p unused on the controlled axes during MPC
  mpc::MpcConfig mpc_cfg;
  mpc::StopCriteria stop;
  std::vector<std::string> train_materials;  // from the manifest, for hygiene checks
  std::vector<std::string> held_out;
};

/// One fixed-trajectory episode until completion or timeout.
TrialResult run_baseline_trial(const EvalContext& ctx, const std::string& material,
                               const BaselineConfig& base, std::uint64_t plant_seed,
                               ctl::TrialLog* log_out = nullptr);

/// One learned-model MPC episode.
TrialResult run_mpc_trial(const EvalContext& ctx, const std::string& material,
                          std::uint64_t plant_seed, mpc::DeployResult* deploy_out = nullptr);

/// Small deterministic grid search over gains, saw period and descent duration
/// maximizing the cutting rate for one material.
BaselineConfig tune_baseline(const EvalContext& ctx, const std::string& material);

struct ComparisonCell {
  std::string material;
  bool held_out = false;
  double baseline_mean = 0.0, baseline_std = 0.0;
  double mpc_mean = 0.0, mpc_std = 0.0;
  bool mpc_wins = false;  // strict mean dominance
};

struct ComparisonReport {
  int n_per_cell = 0;
  std::vector<ComparisonCell> cells;
  std::vector<TrialResult> trials;                 // all individual results
  std::vector<std::pair<std::string, ctl::TrialLog>> logs;  // (file name, log)
};

/// Paired protocol: per material, the same plant seed drives repetition i of
/// both controllers. Every cell gets exactly N results or the run fails.
ComparisonReport run_comparison(const EvalContext& ctx, const std::vector<std::string>& materials,
                                int n, std::uint64_t seed);

struct ForceCriticalReport {
  TrialResult trial;
  mpc::DeployResult deploy;
  double band_top_z = 0.0, band_bottom_z = 0.0;
  bool reached_core = false;
  double core_contact_t = 0.0;
  bool stalled = false;              // cut front moved < 0.5 mm in the 3 s after core contact
  double stall_window_advance = 0.0;
  // Post-stall reference-force statistics over the MPC ticks.
  double pre_mean_frz = 0.0, post_mean_frz = 0.0;
  double pre_mean_abs_fry = 0.0, post_mean_abs_fry = 0.0;
  bool releasing_z = false;          // mean commanded F_r_z after the stall is <= 0
  bool intensified_lateral = false;  // mean |F_r_y| grows after the stall
  bool any_indicator = false;
  bool cut_passed_band = false;
  bool fault = false;                // force-limit stop or numeric fault
};

/// Runs the MPC on the uncuttable-core material and measures the stall and
/// retreat indicators.
ForceCriticalReport force_critical_scenario(const EvalContext& ctx, std::uint64_t seed,
                                            const std::string& material = "carrot");

/// Writes rates.csv, rates.svg, the per-trial logs, force_critical.csv and
/// force_critical.svg into `out_dir`. Deterministic byte-for-byte.
void emit_report(const ComparisonReport& report, const ForceCriticalReport& fc,
                 const std::string& out_dir);

}  // namespace cutmpc::eval
