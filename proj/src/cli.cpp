#include "cutmpc/cli.hpp"

#include "cutmpc/train.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>

namespace cutmpc::cli {

namespace fs = std::filesystem;

namespace {

// Sub-seed streams derived from the one global seed.
constexpr std::uint64_t kStreamTrial = 0x101;
constexpr std::uint64_t kStreamSplit = 0x511;
constexpr std::uint64_t kStreamStage1 = 0x7a1;
constexpr std::uint64_t kStreamStage2 = 0x7a2;
constexpr std::uint64_t kStreamStage3 = 0x7a3;
constexpr std::uint64_t kStreamEval = 0xea1;
constexpr std::uint64_t kStreamForceCritical = 0xfc0;
constexpr std::uint64_t kStreamRun = 0x4f0;

std::string trial_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trial_%04d.csv", index);
  return buf;
}

sim::MaterialLibrary make_library(const RunConfig& cfg) {
  sim::MaterialLibrary lib;
  if (!cfg.materials_file.empty()) lib.load_overrides(cfg.materials_file);
  return lib;
}

net::Dims dims_from(const RunConfig& cfg, int M) {
  net::Dims d;
  d.M = M;
  d.enc_hidden = cfg.hidden;
  d.state_hidden = cfg.hidden;
  d.input_hidden = cfg.hidden;
  d.out_hidden = cfg.hidden;
  d.latent = cfg.latent;
  d.rnn_units = cfg.rnn_units;
  return d;
}

net::TrainConfig train_cfg_for(const RunConfig& cfg, net::Stage stage) {
  net::TrainConfig tc;
  tc.stage = stage;
  tc.minibatch = cfg.minibatch;
  tc.momentum = cfg.momentum;
  tc.clip_norm = cfg.clip_norm;
  tc.horizon_blocks = cfg.horizon_blocks;
  switch (stage) {
    case net::Stage::autoencoder:
      tc.lr = cfg.stage1_lr;
      tc.epochs = cfg.stage1_epochs;
      tc.seed = mix_seed(cfg.seed, kStreamStage1);
      break;
    case net::Stage::single_step:
      tc.lr = cfg.stage2_lr;
      tc.epochs = cfg.stage2_epochs;
      tc.seed = mix_seed(cfg.seed, kStreamStage2);
      break;
    case net::Stage::multi_step:
      tc.lr = cfg.stage3_lr;
      tc.epochs = cfg.stage3_epochs;
      tc.seed = mix_seed(cfg.seed, kStreamStage3);
      break;
  }
  return tc;
}

net::BlockSet normalized_blocks(const data::DatasetManifest& m, const std::string& dir,
                                const std::vector<int>& indices) {
  auto raw = data::load_blocks(m, dir, indices);
  net::BlockSet out;
  out.reserve(raw.size());
  for (auto& trial : raw) {
    std::vector<data::Block> blocks;
    blocks.reserve(trial.size());
    for (auto& b : trial) blocks.push_back(data::apply_norm(b, m.stats));
    out.push_back(std::move(blocks));
  }
  return out;
}

}  // namespace

void cmd_collect(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const auto lib = make_library(cfg);
  const std::string dataset_dir = out_dir + "/dataset";
  fs::create_directories(dataset_dir);
  write_config(cfg, out_dir + "/config.ini");

  data::DatasetManifest manifest;
  manifest.M = cfg.block_m;
  manifest.train_fraction = cfg.train_fraction;
  manifest.held_out_materials = cfg.held_out;

  long total_samples = 0;
  int trial_index = 0;
  for (const auto& material : cfg.train_materials) {
    const auto mat = lib.get(material);
    for (int k = 0; k < cfg.trials_per_material; ++k, ++trial_index) {
      const std::uint64_t trial_seed =
          mix_seed(cfg.seed, kStreamTrial + static_cast<std::uint64_t>(trial_index));
      std::mt19937_64 rng(trial_seed);
      std::uniform_real_distribution<double> uni;
      auto in_range = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

      ctl::Gains gains;
      gains.ka = Vec2(in_range(cfg.ka_min, cfg.ka_max), in_range(cfg.ka_min, cfg.ka_max));
      gains.kp = Vec2(in_range(cfg.kp_min, cfg.kp_max), in_range(cfg.kp_min, cfg.kp_max));

      sim::PlantConfig pc = cfg.plant;
      pc.rng_seed = mix_seed(trial_seed, 1);
      sim::Plant plant(mat, pc);

      ctl::DesiredTrajectory traj;
      traj.duration = in_range(cfg.duration_min, cfg.duration_max);
      traj.saw_period = in_range(cfg.saw_period_min, cfg.saw_period_max);
      traj.saw_range = cfg.saw_range;
      traj.saw_center = plant.state().p[kY];
      traj.z_start = plant.state().p[kZ];
      traj.z_end = cfg.plant.table_z + 5e-4;

      ctl::ClosedLoopRunner runner(std::move(plant), traj, gains);
      runner.run(traj.duration + cfg.trial_extra_s);

      const std::string file = trial_file_name(trial_index);
      ctl::write_trial_csv(runner.log(), dataset_dir + "/" + file);
      manifest.trials.push_back({file, material, static_cast<int>(runner.log().rows.size())});
      total_samples += static_cast<long>(runner.log().rows.size());
    }
  }

  data::split(manifest, mix_seed(cfg.seed, kStreamSplit));
  const auto train_blocks = data::load_blocks(manifest, dataset_dir, manifest.train_trials);
  manifest.stats =
      data::fit_norm_stats(train_blocks, "dataset@seed" + std::to_string(cfg.seed));
  data::write_manifest(manifest, dataset_dir + "/manifest.json");

  std::cout << "collect: " << manifest.trials.size() << " trials, " << total_samples
            << " timesteps, " << manifest.train_trials.size() << " train / "
            << manifest.val_trials.size() << " validation\n";
}

void cmd_train(const RunConfig& cfg, const std::string& out_dir, int stage) {
  cfg.validate();
  if (stage < 0 || stage > 3) throw ConfigError("train: stage must be 0 (all) or 1..3");
  const std::string dataset_dir = out_dir + "/dataset";
  const std::string manifest_path = dataset_dir + "/manifest.json";
  if (!fs::exists(manifest_path))
    throw DataError("no dataset manifest at " + manifest_path + "; run collect first");
  fs::create_directories(out_dir);
  write_config(cfg, out_dir + "/config.ini");

  const auto manifest = data::read_manifest(manifest_path);
  const auto train = normalized_blocks(manifest, dataset_dir, manifest.train_trials);
  const auto val = normalized_blocks(manifest, dataset_dir, manifest.val_trials);
  const std::string metrics_path = out_dir + "/metrics.csv";
  const bool run_all = stage == 0;
  if (run_all || stage == 1) fs::remove(metrics_path);

  auto checkpoint = [&](int s) { return out_dir + "/model_stage" + std::to_string(s) + ".json"; };

  net::NetworkParams params;
  if (run_all || stage == 1) {
    std::vector<net::EpochMetrics> metrics;
    params = net::stage1_autoencoder_train(train, val, train_cfg_for(cfg, net::Stage::autoencoder),
                                           dims_from(cfg, manifest.M), metrics);
    net::append_metrics_csv(metrics, metrics_path);
    net::save_model(params, manifest.stats, checkpoint(1));
    std::cout << "train: stage 1 done, reconstruction loss " << fmt_g(metrics.back().train_loss)
              << " (val " << fmt_g(metrics.back().val_loss) << ")\n";
  }
  if (run_all || stage == 2) {
    if (!run_all) {
      if (!fs::exists(checkpoint(1)))
        throw DataError("stage 2 requires the stage-1 checkpoint " + checkpoint(1));
      params = net::load_model(checkpoint(1)).first;
    }
    std::vector<net::EpochMetrics> metrics;
    params = net::stage2_single_step_train(train, val, train_cfg_for(cfg, net::Stage::single_step),
                                           std::move(params), metrics);
    net::append_metrics_csv(metrics, metrics_path);
    net::save_model(params, manifest.stats, checkpoint(2));
    std::cout << "train: stage 2 done, single-step loss " << fmt_g(metrics.back().train_loss)
              << " (val " << fmt_g(metrics.back().val_loss) << ")\n";
  }
  if (run_all || stage == 3) {
    if (!run_all) {
      if (!fs::exists(checkpoint(2)))
        throw DataError("stage 3 requires the stage-2 checkpoint " + checkpoint(2));
      params = net::load_model(checkpoint(2)).first;
    }
    std::vector<net::EpochMetrics> metrics;
    params = net::stage3_multi_step_train(train, val, train_cfg_for(cfg, net::Stage::multi_step),
                                          std::move(params), metrics);
    net::append_metrics_csv(metrics, metrics_path);
    net::save_model(params, manifest.stats, checkpoint(3));

    const double model_mse = net::single_step_mse(params, val);
    const double persistence = net::persistence_mse(val);
    const double multi = net::multi_step_mse(params, val, cfg.horizon_blocks);
    std::cout << "train: stage 3 done, multi-step loss " << fmt_g(metrics.back().train_loss)
              << " (val " << fmt_g(metrics.back().val_loss) << ")\n"
              << "train: validation single-step mse " << fmt_g(model_mse) << ", persistence "
              << fmt_g(persistence) << ", " << fmt_g(cfg.horizon_blocks) << "-block mse "
              << fmt_g(multi) << '\n';
  }
}

eval::EvalContext make_eval_context(const RunConfig& cfg, const std::string& model_path,
                                    const std::string& manifest_path) {
  if (!fs::exists(model_path))
    throw DataError("no model at " + model_path + "; run train first");
  eval::EvalContext ctx;
  ctx.materials = make_library(cfg);
  ctx.plant = cfg.plant;
  auto [params, stats] = net::load_model(model_path);
  if (params.stage != net::Stage::multi_step)
    throw DataError("stage gate: " + model_path + " is a " + net::stage_name(params.stage) +
                    " checkpoint; deployment needs multi_step");
  ctx.params = std::move(params);
  ctx.stats = std::move(stats);
  ctx.deploy_gains.kp = Vec2::Zero();  // gains on the controlled axes are zero online
  ctx.deploy_gains.ka = Vec2(cfg.deploy_ka, cfg.deploy_ka);
  ctx.mpc_cfg.candidates = cfg.candidates;
  ctx.mpc_cfg.horizon_blocks = cfg.horizon_blocks;
  ctx.mpc_cfg.force_amp = cfg.force_amp;
  ctx.mpc_cfg.c_cut = cfg.c_cut;
  ctx.mpc_cfg.c_saw = cfg.c_saw;
  ctx.mpc_cfg.c_v = cfg.c_v;
  ctx.mpc_cfg.control_rate = cfg.control_rate;
  ctx.mpc_cfg.p_table = cfg.plant.table_z;
  ctx.stop.timeout_s = cfg.timeout_s;
  ctx.stop.force_limit_n = cfg.force_limit_n;
  ctx.stop.complete_tol_m = cfg.complete_tol_m;
  ctx.held_out = cfg.held_out;
  if (fs::exists(manifest_path)) {
    const auto manifest = data::read_manifest(manifest_path);
    for (const auto& t : manifest.trials)
      if (std::find(ctx.train_materials.begin(), ctx.train_materials.end(), t.material) ==
          ctx.train_materials.end())
        ctx.train_materials.push_back(t.material);
  }
  return ctx;
}

void cmd_run(const RunConfig& cfg, const std::string& out_dir, const std::string& material) {
  cfg.validate();
  make_library(cfg).get(material);  // fail early with the preset list on bad labels
  auto ctx = make_eval_context(cfg, out_dir + "/model_stage3.json",
                               out_dir + "/dataset/manifest.json");
  fs::create_directories(out_dir);
  write_config(cfg, out_dir + "/config.ini");

  const std::uint64_t plant_seed =
      mix_seed(cfg.seed, kStreamRun ^ fnv1a64(material.data(), material.size()));
  mpc::DeployResult deploy;
  const auto r = eval::run_mpc_trial(ctx, material, plant_seed, &deploy);
  const std::string log_path = out_dir + "/run_" + material + ".csv";
  mpc::write_deploy_csv(deploy, log_path);

  std::cout << "run material=" << material << " completed=" << (r.completed ? 1 : 0)
            << " reason=" << mpc::stop_reason_name(deploy.reason) << " rate_m_s="
            << fmt_g(r.cutting_rate) << " cut_time_s=" << fmt_g(r.cut_time_s)
            << " peak_force_n=" << fmt_g(r.peak_force_n) << " log=" << log_path << '\n';
}

void cmd_eval(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  auto ctx = make_eval_context(cfg, out_dir + "/model_stage3.json",
                               out_dir + "/dataset/manifest.json");
  fs::create_directories(out_dir);
  write_config(cfg, out_dir + "/config.ini");

  const auto report =
      eval::run_comparison(ctx, cfg.eval_materials, cfg.eval_n, mix_seed(cfg.seed, kStreamEval));
  const auto fc = eval::force_critical_scenario(ctx, mix_seed(cfg.seed, kStreamForceCritical));
  eval::emit_report(report, fc, out_dir + "/report");

  for (const auto& c : report.cells)
    std::cout << "eval " << c.material << (c.held_out ? " (held out)" : "") << ": baseline "
              << fmt_g(c.baseline_mean) << " m/s, mpc " << fmt_g(c.mpc_mean) << " m/s"
              << (c.mpc_wins ? " [mpc wins]" : "") << '\n';
  std::cout << "eval force-critical: stalled=" << (fc.stalled ? 1 : 0)
            << " releasing_z=" << (fc.releasing_z ? 1 : 0)
            << " intensified_lateral=" << (fc.intensified_lateral ? 1 : 0)
            << " cut_passed_band=" << (fc.cut_passed_band ? 1 : 0)
            << " fault=" << (fc.fault ? 1 : 0) << '\n';
  std::cout << "eval report written to " << out_dir << "/report\n";
}

}  // namespace cutmpc::cli
