#include "cutmpc/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

namespace cutmpc::mpc {

using Eigen::MatrixXd;

void MpcConfig::validate() const {
  if (candidates < 1) throw ConfigError("mpc: candidates must be >= 1");
  if (horizon_blocks < 1) throw ConfigError("mpc: horizon_blocks must be >= 1");
  if (!(force_amp > 0.0)) throw ConfigError("mpc: force_amp must be > 0");
  if (!(c_cut >= 0.0 && c_saw >= 0.0 && c_v >= 0.0))
    throw ConfigError("mpc: cost weights must be >= 0");
  if (!(control_rate > 0.0)) throw ConfigError("mpc: control_rate must be > 0");
}

std::vector<Vec2> sample_candidates(const MpcConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-cfg.force_amp, cfg.force_amp);
  std::vector<Vec2> out(static_cast<std::size_t>(cfg.candidates));
  for (auto& f : out) {
    const double fy = dist(rng);
    const double fz = dist(rng);
    f = Vec2(fy, fz);
  }
  return out;
}

CostBreakdown horizon_cost(const std::vector<Vec2>& abs_positions, const Vec2& F_r,
                           const MpcConfig& cfg) {
  CostBreakdown c;
  for (const auto& p : abs_positions) {
    const double dz = p[kZ] - cfg.p_table;
    const double dy = p[kY] - cfg.p_center;
    c.cut += cfg.c_cut * dz * dz;
    c.saw += cfg.c_saw * dy * dy;
    c.input += cfg.c_v * F_r.squaredNorm();
  }
  if (!abs_positions.empty()) c.terminal = abs_positions.back()[kZ];
  return c;
}

namespace {

MatrixXd normalize_x(const MatrixXd& x_raw, const data::NormStats& s) {
  MatrixXd x = x_raw;
  for (int c = 0; c < 4; ++c) x.col(c) = (x_raw.col(c).array() - s.mean[c]) / s.std[c];
  return x;
}

MatrixXd normalize_force_rows(const MatrixXd& f_raw, const data::NormStats& s) {
  MatrixXd f = f_raw;
  for (int c = 0; c < 2; ++c)
    f.col(c) = (f_raw.col(c).array() - s.mean[data::kChanFy + c]) / s.std[data::kChanFy + c];
  return f;
}

/// Denormalize predicted relative positions and chain them into absolute
/// positions, each block anchored at the previous block's last sample.
std::vector<Vec2> integrate_predictions(const std::vector<MatrixXd>& preds, const Vec2& anchor,
                                        const data::NormStats& s) {
  std::vector<Vec2> abs_positions;
  Vec2 base = anchor;
  for (const auto& pred : preds) {
    Vec2 last = base;
    for (int t = 0; t < pred.rows(); ++t) {
      Vec2 rel;
      for (int c = 0; c < 2; ++c)
        rel[c] = pred(t, c) * s.std[data::kChanRelY + c] + s.mean[data::kChanRelY + c];
      last = base + rel;
      abs_positions.push_back(last);
    }
    base = last;
  }
  return abs_positions;
}

}  // namespace

MpcDiagnostics evaluate_candidates(const net::NetworkParams& params,
                                   const data::NormStats& stats, const MatrixXd& x_raw,
                                   const Vec2& anchor, const net::LatentState& latent,
                                   const MpcConfig& cfg, const std::vector<Vec2>& candidates) {
  if (params.stage != net::Stage::multi_step)
    throw ConfigError("mpc: model is a " + net::stage_name(params.stage) +
                      " checkpoint; deployment needs the multi_step stage");
  if (x_raw.rows() != params.dims.M || x_raw.cols() != 4)
    throw DataError("mpc: measured block does not match the model's block size");
  if (candidates.empty()) throw DataError("mpc: no candidates to evaluate");

  const MatrixXd x = normalize_x(x_raw, stats);
  MpcDiagnostics diag;
  diag.candidates = candidates;
  diag.costs.resize(candidates.size());

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Vec2 F_r = candidates[i];
    MatrixXd tile(params.dims.M, 2);
    tile.col(0).setConstant(F_r[kY]);
    tile.col(1).setConstant(F_r[kZ]);
    const std::vector<MatrixXd> future_v(static_cast<std::size_t>(cfg.horizon_blocks),
                                         normalize_force_rows(tile, stats));
    const auto preds = net::rollout(params, x, future_v, latent);
    const auto abs_positions = integrate_predictions(preds, anchor, stats);
    const auto breakdown = horizon_cost(abs_positions, F_r, cfg);
    diag.costs[i] = breakdown.total();
    if (breakdown.total() < best) {
      best = breakdown.total();
      diag.chosen = static_cast<int>(i);
      diag.chosen_breakdown = breakdown;
      diag.chosen_trajectory = abs_positions;
    }
  }
  return diag;
}

MpcStepResult mpc_step(const net::NetworkParams& params, const data::NormStats& stats,
                       const MatrixXd& x_raw, const Vec2& anchor, const net::LatentState& latent,
                       const MpcConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  MpcStepResult res{Vec2::Zero(), net::LatentState(params.dims), {}};
  res.diag = evaluate_candidates(params, stats, x_raw, anchor, latent, cfg,
                                 sample_candidates(cfg, rng));
  res.F_r_star = res.diag.candidates[static_cast<std::size_t>(res.diag.chosen)];

  // Advance the recurrent state once, on measured data only.
  const MatrixXd x = normalize_x(x_raw, stats);
  res.latent = net::forward_block(params, x, normalize_force_rows(x_raw.rightCols(2), stats),
                                  latent).latent;
  return res;
}

std::string stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::completed: return "completed";
    case StopReason::timeout: return "timeout";
    case StopReason::force_limit: return "force_limit";
  }
  return "unknown";
}

DeployResult deploy_loop(sim::Plant& plant, const net::NetworkParams& params,
                         const data::NormStats& stats, const ctl::Gains& gains,
                         const MpcConfig& cfg, const StopCriteria& stop) {
  cfg.validate();
  gains.validate();
  const int M = params.dims.M;
  const double dt = plant.config().dt;
  const int steps_per_tick = static_cast<int>(std::llround(1.0 / (cfg.control_rate * dt)));
  if (steps_per_tick != M)
    throw ConfigError("deploy_loop: control_rate, plant dt and block size disagree (" +
                      std::to_string(steps_per_tick) + " steps per tick vs M=" +
                      std::to_string(M) + ")");

  DeployResult res;
  res.initial_cut_front = plant.state().cut_front;
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x3579));

  Vec2 last_sensed = Vec2::Zero();
  double t = 0.0;
  bool stop_now = false;

  auto log_and_step = [&](const Vec2& F_r) {
    const Vec2 u = ctl::control_law(last_sensed, F_r, gains);
    res.log.rows.push_back({t, plant.state().p, last_sensed, F_r});
    res.cut_front.push_back(plant.state().cut_front);
    last_sensed = plant.step(u);
    res.peak_force_n = std::max({res.peak_force_n, std::abs(last_sensed[kY]),
                                 std::abs(last_sensed[kZ])});
    t += dt;
    if (plant.cut_complete(stop.complete_tol_m)) {
      res.reason = StopReason::completed;
      res.completed = true;
      stop_now = true;
    } else if (std::abs(last_sensed[kY]) > stop.force_limit_n ||
               std::abs(last_sensed[kZ]) > stop.force_limit_n) {
      res.reason = StopReason::force_limit;
      stop_now = true;
    } else if (t >= stop.timeout_s) {
      res.reason = StopReason::timeout;
      stop_now = true;
    }
  };

  // Contact initialization: a short descent under the data-collection
  // controller so the knife touches the object and the recurrent state sees
  // real interaction before the first optimization.
  const double init_s = 1.5;
  const int init_ticks = static_cast<int>(std::llround(init_s / dt)) / M;
  ctl::DesiredTrajectory init_traj;
  init_traj.duration = init_s;
  init_traj.saw_center = plant.state().p[kY];
  init_traj.saw_range = 0.02;
  init_traj.saw_period = 0.75;
  init_traj.z_start = plant.state().p[kZ];
  init_traj.z_end = plant.object_top() - 0.003;
  ctl::Gains init_gains = gains;
  init_gains.kp = Vec2(1.0, 1.0);
  init_gains.require_invertible_ka();

  for (int i = 0; i < init_ticks * M && !stop_now; ++i) {
    const Vec2 F_r = ctl::reference_force(plant.state().p, init_traj.position(t),
                                          init_traj.velocity(t), init_traj.F_d, init_gains);
    log_and_step(F_r);
  }
  res.init_duration_s = t;

  auto measured_block = [&](int b) {
    const Vec2 ref = b == 0 ? res.log.rows[0].p : res.log.rows[b * M - 1].p;
    MatrixXd x(M, 4);
    for (int i = 0; i < M; ++i) {
      const auto& row = res.log.rows[b * M + i];
      x(i, 0) = row.p[kY] - ref[kY];
      x(i, 1) = row.p[kZ] - ref[kZ];
      x(i, 2) = row.F_s[kY];
      x(i, 3) = row.F_s[kZ];
    }
    return x;
  };

  // Thread the recurrent state through all but the newest complete block;
  // mpc_step consumes the newest one itself and hands back the advanced state.
  const int init_blocks = static_cast<int>(res.log.rows.size()) / M;
  if (init_blocks < 1 && !stop_now)
    throw DataError("deploy_loop: no complete measured block before the first tick");
  net::LatentState latent(params.dims);  // state from before the newest block
  for (int b = 0; b + 1 < init_blocks; ++b) {
    const MatrixXd x_raw = measured_block(b);
    latent = net::forward_block(params, normalize_x(x_raw, stats),
                                normalize_force_rows(x_raw.rightCols(2), stats), latent).latent;
  }
  int newest_block = init_blocks - 1;

  // Receding horizon: re-optimize once per block, apply only that block.
  while (!stop_now) {
    const MatrixXd x_raw = measured_block(newest_block);
    const Vec2 anchor = res.log.rows[(newest_block + 1) * M - 1].p;
    const auto t0 = std::chrono::steady_clock::now();
    auto step = mpc_step(params, stats, x_raw, anchor, latent, cfg, rng);
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    // Tick invariants: the emitted force respects the sampling bound and the
    // chosen candidate is the argmin of its own diagnostic cost list.
    if (std::abs(step.F_r_star[kY]) > cfg.force_amp || std::abs(step.F_r_star[kZ]) > cfg.force_amp)
      throw NumericFault("deploy_loop: emitted force violates the sampling bound");
    for (double c : step.diag.costs)
      if (c < step.diag.costs[static_cast<std::size_t>(step.diag.chosen)])
        throw NumericFault("deploy_loop: chosen candidate is not the cost argmin");
    res.ticks.push_back({t, step.F_r_star, step.diag.chosen_breakdown.total(),
                         step.diag.chosen, wall_ms});
    for (int i = 0; i < M && !stop_now; ++i) log_and_step(step.F_r_star);
    if (static_cast<int>(res.log.rows.size()) / M > newest_block + 1) {
      latent = step.latent;
      ++newest_block;
    }
  }

  res.elapsed_s = t;
  res.final_cut_front = plant.state().cut_front;
  return res;
}

void write_deploy_csv(const DeployResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "# units: t [s]; p_y p_z [m]; F_s_y F_s_z F_r_y F_r_z [N]; tick_wall [ms]\n";
  out << "t,p_y,p_z,F_s_y,F_s_z,F_r_y,F_r_z,chosen_cost,tick_wall_ms\n";
  std::size_t tick = 0;
  for (std::size_t i = 0; i < r.log.rows.size(); ++i) {
    const auto& row = r.log.rows[i];
    while (tick + 1 < r.ticks.size() && r.ticks[tick + 1].t <= row.t + 1e-12) ++tick;
    const bool in_mpc = !r.ticks.empty() && row.t >= r.ticks[0].t - 1e-12;
    out << fmt_g(row.t) << ',' << fmt_g(row.p[kY]) << ',' << fmt_g(row.p[kZ]) << ','
        << fmt_g(row.F_s[kY]) << ',' << fmt_g(row.F_s[kZ]) << ',' << fmt_g(row.F_r[kY]) << ','
        << fmt_g(row.F_r[kZ]) << ',';
    if (in_mpc) {
      out << fmt_g(r.ticks[tick].cost) << ',' << fmt_g(r.ticks[tick].wall_ms) << '\n';
    } else {
      out << ",\n";
    }
  }
}

}  // namespace cutmpc::mpc
