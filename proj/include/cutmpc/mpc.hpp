#pragma once

#include "cutmpc/common.hpp"
#include "cutmpc/controller.hpp"
#include "cutmpc/model.hpp"
#include "cutmpc/plant.hpp"

#include <random>
#include <string>
#include <vector>

namespace cutmpc::mpc {

struct MpcConfig {
  int candidates = 128;        // K
  int horizon_blocks = 5;      // H_b
  double force_amp = 8.0;      // N, componentwise uniform sampling bound
  double c_cut = 50.0;
  double c_saw = 10.0;
  double c_v = 1e-4;
  double p_table = 0.0;        // m
  double p_center = 0.0;       // m
  double control_rate = 10.0;  // Hz
  std::uint64_t seed = 0;

  void validate() const;
};

struct CostBreakdown {
  double cut = 0.0;
  double terminal = 0.0;
  double saw = 0.0;
  double input = 0.0;
  double total() const { return cut + terminal + saw + input; }
};

/// K iid reference-force candidates, uniform on [-force_amp, force_amp]^2.
std::vector<Vec2> sample_candidates(const MpcConfig& cfg, std::mt19937_64& rng);

/// Cutting/sawing cost over every predicted timestep of the horizon:
///   c_cut * sum (p_z - p_table)^2 + p_z(final)
/// + c_saw * sum (p_y - p_center)^2 + c_v * sum |F_r|^2.
/// Positions are absolute; F_r is the constant candidate. Pure.
CostBreakdown horizon_cost(const std::vector<Vec2>& abs_positions, const Vec2& F_r,
                           const MpcConfig& cfg);

struct MpcDiagnostics {
  std::vector<Vec2> candidates;
  std::vector<double> costs;
  int chosen = -1;
  CostBreakdown chosen_breakdown;
  std::vector<Vec2> chosen_trajectory;  // absolute predicted positions of the winner
};

struct MpcStepResult {
  Vec2 F_r_star;
  net::LatentState latent;  // advanced once, on the measured block only
  MpcDiagnostics diag;
};

/// Shooting core: rolls every explicit candidate through the model from a
/// fork of `latent`, integrates to absolute positions and scores them. Ties
/// resolve to the lowest index.
MpcDiagnostics evaluate_candidates(const net::NetworkParams& params,
                                   const data::NormStats& stats, const Eigen::MatrixXd& x_raw,
                                   const Vec2& anchor, const net::LatentState& latent,
                                   const MpcConfig& cfg, const std::vector<Vec2>& candidates);

/// One shooting round. `x_raw` is the just-completed measured block
/// (unnormalized relative positions + sensed forces), `anchor` the absolute
/// position of its last sample, `latent` the recurrent state from before that
/// block. Candidate rollouts fork from a copy of the latent; ties pick the
/// lowest candidate index. Requires a multi-step model.
MpcStepResult mpc_step(const net::NetworkParams& params, const data::NormStats& stats,
                       const Eigen::MatrixXd& x_raw, const Vec2& anchor,
                       const net::LatentState& latent, const MpcConfig& cfg,
                       std::mt19937_64& rng);

struct StopCriteria {
  double timeout_s = 60.0;
  double force_limit_n = 50.0;   // componentwise on |F_s|
  double complete_tol_m = 1e-3;  // cut front within this of the table
};

enum class StopReason { completed, timeout, force_limit };
std::string stop_reason_name(StopReason r);

struct TickInfo {
  double t;
  Vec2 F_r_star;
  double cost;
  int chosen;
  double wall_ms;
};

struct DeployResult {
  ctl::TrialLog log;                  // one row per plant step, F_r = applied F_r*
  std::vector<double> cut_front;      // per log row, ground truth
  std::vector<TickInfo> ticks;
  StopReason reason = StopReason::timeout;
  bool completed = false;
  double elapsed_s = 0.0;
  double initial_cut_front = 0.0;
  double final_cut_front = 0.0;
  double peak_force_n = 0.0;          // max componentwise |F_s|
  double init_duration_s = 0.0;
};

/// Full online episode: a contact-initialization phase driven by the
/// data-collection controller, then receding-horizon ticks applying
/// u = K_a (F_s - F_r*) at the plant rate between re-optimizations.
DeployResult deploy_loop(sim::Plant& plant, const net::NetworkParams& params,
                         const data::NormStats& stats, const ctl::Gains& gains,
                         const MpcConfig& cfg, const StopCriteria& stop);

/// Deployment log: trial CSV plus chosen cost and tick wall clock (blank for
/// rows before the first tick).
void write_deploy_csv(const DeployResult& r, const std::string& path);

}  // namespace cutmpc::mpc
