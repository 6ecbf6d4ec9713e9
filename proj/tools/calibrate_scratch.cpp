// Temporary calibration harness, not part of the deliverable build.
#include "cutmpc/cli.hpp"
#include "cutmpc/train.hpp"

#include <cstdio>
#include <cstring>

using namespace cutmpc;

static void baselines() {
  eval::EvalContext ctx;
  ctx.stop.timeout_s = 60.0;
  for (const auto& label : sim::material_labels()) {
    const auto base = eval::tune_baseline(ctx, label);
    ctl::TrialLog log;
    const auto r = eval::run_baseline_trial(ctx, label, base, 12345, &log);
    std::printf("%-14s tuned: ka=%.2f kp=%.1f period=%.1f dur=%.1f | rate=%.5f m/s "
                "completed=%d time=%.1f s peakF=%.1f N final_cf=%.4f\n",
                label.c_str(), base.gains.ka[kY], base.gains.kp[kY], base.traj.saw_period,
                base.traj.duration, r.cutting_rate, r.completed ? 1 : 0, r.cut_time_s,
                r.peak_force_n, r.final_cut_front);
  }
}

static void model_metrics(const std::string& out) {
  const auto manifest = data::read_manifest(out + "/dataset/manifest.json");
  auto load_set = [&](const std::vector<int>& idx) {
    auto raw = data::load_blocks(manifest, out + "/dataset", idx);
    net::BlockSet set;
    for (auto& trial : raw) {
      std::vector<data::Block> blocks;
      for (auto& b : trial) blocks.push_back(data::apply_norm(b, manifest.stats));
      set.push_back(std::move(blocks));
    }
    return set;
  };
  const auto val = load_set(manifest.val_trials);
  const auto p2 = net::load_model(out + "/model_stage2.json").first;
  const auto p3 = net::load_model(out + "/model_stage3.json").first;
  std::printf("persistence=%.6f\n", net::persistence_mse(val));
  std::printf("stage2 single=%.6f multi5=%.6f\n", net::single_step_mse(p2, val),
              net::multi_step_mse(p2, val, 5));
  std::printf("stage3 single=%.6f multi5=%.6f\n", net::single_step_mse(p3, val),
              net::multi_step_mse(p3, val, 5));
}

static void mpc_eval(const std::string& out, const std::string& material, std::uint64_t seed) {
  cli::RunConfig cfg;
  auto ctx = cli::make_eval_context(cfg, out + "/model_stage3.json",
                                    out + "/dataset/manifest.json");
  mpc::DeployResult dres;
  const auto r = eval::run_mpc_trial(ctx, material, seed, &dres);
  double mean_frz = 0.0, mean_fry = 0.0;
  for (const auto& t : dres.ticks) {
    mean_frz += t.F_r_star[kZ];
    mean_fry += std::abs(t.F_r_star[kY]);
  }
  if (!dres.ticks.empty()) {
    mean_frz /= dres.ticks.size();
    mean_fry /= dres.ticks.size();
  }
  std::printf("mpc %-14s seed=%llu rate=%.5f completed=%d reason=%s time=%.1f peakF=%.1f "
              "final_cf=%.4f meanFrz=%.2f mean|Fry|=%.2f ticks=%zu wall/tick=%.1fms\n",
              material.c_str(), (unsigned long long)seed, r.cutting_rate, r.completed ? 1 : 0,
              mpc::stop_reason_name(dres.reason).c_str(), r.cut_time_s, r.peak_force_n,
              r.final_cut_front, mean_frz, mean_fry, dres.ticks.size(),
              dres.ticks.empty() ? 0.0 : dres.ticks.back().wall_ms);
}

static void force_critical(const std::string& out, std::uint64_t seed) {
  cli::RunConfig cfg;
  auto ctx = cli::make_eval_context(cfg, out + "/model_stage3.json",
                                    out + "/dataset/manifest.json");
  const auto fc = eval::force_critical_scenario(ctx, seed);
  std::printf("fc seed=%llu reached_core=%d stalled=%d advance=%.5f pre_frz=%.2f post_frz=%.2f "
              "pre|fry|=%.2f post|fry|=%.2f releasing=%d lateral=%d any=%d passed=%d fault=%d\n",
              (unsigned long long)seed, fc.reached_core, fc.stalled, fc.stall_window_advance,
              fc.pre_mean_frz, fc.post_mean_frz, fc.pre_mean_abs_fry, fc.post_mean_abs_fry,
              fc.releasing_z, fc.intensified_lateral, fc.any_indicator, fc.cut_passed_band,
              fc.fault);
}

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "baselines";
  const std::string out = argc > 2 ? argv[2] : "/tmp/cal1";
  if (mode == "baselines") baselines();
  if (mode == "metrics") model_metrics(out);
  if (mode == "mpc") {
    for (const auto m : {"cake", "cucumber", "cheese", "hollow-pepper", "lemon", "potato"})
      mpc_eval(out, m, 1001);
  }
  if (mode == "fc")
    for (std::uint64_t s : {1ull, 2ull, 3ull}) force_critical(out, s);
  return 0;
}
