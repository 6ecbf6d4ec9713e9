#include "cutmpc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cutmpc::eval {

namespace fs = std::filesystem;

namespace {

// Cutting rate: knife descent depth achieved over elapsed time, both taken
// from the trial log so the metric can be recomputed from the CSV alone.
double rate_from_log(const ctl::TrialLog& log, double elapsed) {
  if (log.rows.empty() || !(elapsed > 0.0)) return 0.0;
  double min_z = log.rows.front().p[kZ];
  for (const auto& r : log.rows) min_z = std::min(min_z, r.p[kZ]);
  return std::max(0.0, log.rows.front().p[kZ] - min_z) / elapsed;
}

void check_held_out_hygiene(const EvalContext& ctx) {
  for (const auto& h : ctx.held_out)
    for (const auto& t : ctx.train_materials)
      if (h == t)
        throw DataError("held-out material '" + h + "' appears in the training manifest");
}

}  // namespace

TrialResult run_baseline_trial(const EvalContext& ctx, const std::string& material,
                               const BaselineConfig& base, std::uint64_t plant_seed,
                               ctl::TrialLog* log_out) {
  sim::PlantConfig pc = ctx.plant;
  pc.rng_seed = plant_seed;
  sim::Plant plant(ctx.materials.get(material), pc);

  ctl::DesiredTrajectory traj = base.traj;
  traj.saw_center = plant.state().p[kY];
  traj.z_start = plant.state().p[kZ];
  ctl::ClosedLoopRunner runner(std::move(plant), traj, base.gains);

  TrialResult r;
  r.material = material;
  r.controller = "baseline";
  r.seed = plant_seed;
  const int max_steps =
      static_cast<int>(std::llround(ctx.stop.timeout_s / ctx.plant.dt));
  for (int i = 0; i < max_steps; ++i) {
    runner.step();
    if (runner.plant().cut_complete(ctx.stop.complete_tol_m)) {
      r.completed = true;
      break;
    }
  }
  r.cut_time_s = runner.time();
  r.final_cut_front = runner.plant().state().cut_front;
  r.cutting_rate = rate_from_log(runner.log(), r.cut_time_s);
  for (const auto& row : runner.log().rows)
    r.peak_force_n = std::max({r.peak_force_n, std::abs(row.F_s[kY]), std::abs(row.F_s[kZ])});
  if (log_out != nullptr) *log_out = runner.log();
  return r;
}

TrialResult run_mpc_trial(const EvalContext& ctx, const std::string& material,
                          std::uint64_t plant_seed, mpc::DeployResult* deploy_out) {
  sim::PlantConfig pc = ctx.plant;
  pc.rng_seed = plant_seed;
  sim::Plant plant(ctx.materials.get(material), pc);

  mpc::MpcConfig cfg = ctx.mpc_cfg;
  cfg.p_table = ctx.plant.table_z;
  cfg.seed = mix_seed(plant_seed, 0x4d50);
  cfg.p_center = plant.state().p[kY];

  auto res = mpc::deploy_loop(plant, ctx.params, ctx.stats, ctx.deploy_gains, cfg, ctx.stop);

  TrialResult r;
  r.material = material;
  r.controller = "mpc";
  r.seed = plant_seed;
  r.completed = res.completed;
  r.cut_time_s = res.elapsed_s;
  r.final_cut_front = res.final_cut_front;
  r.cutting_rate = rate_from_log(res.log, res.elapsed_s);
  r.peak_force_n = res.peak_force_n;
  if (deploy_out != nullptr) *deploy_out = std::move(res);
  return r;
}

BaselineConfig tune_baseline(const EvalContext& ctx, const std::string& material) {
  // Small documented grid; the worst point is still returned if nothing cuts.
  const double kp_grid[] = {1.0, 2.5, 4.0};
  const double ka_grid[] = {0.03, 0.06, 0.10};
  const double period_grid[] = {0.4, 0.8};
  const double duration_grid[] = {2.0, 4.0};
  const std::uint64_t tuning_seed = 0x7e57;

  BaselineConfig best;
  double best_rate = -1.0;
  for (double kp : kp_grid)
    for (double ka : ka_grid)
      for (double period : period_grid)
        for (double duration : duration_grid) {
          BaselineConfig c;
          c.gains.kp = Vec2(kp, kp);
          c.gains.ka = Vec2(ka, ka);
          c.traj.duration = duration;
          c.traj.saw_period = period;
          c.traj.saw_range = 0.03;
          c.traj.z_end = ctx.plant.table_z + 5e-4;
          const auto r = run_baseline_trial(ctx, material, c, tuning_seed);
          if (r.cutting_rate > best_rate) {
            best_rate = r.cutting_rate;
            best = c;
            best.tuned_rate = r.cutting_rate;
          }
        }
  return best;
}

ComparisonReport run_comparison(const EvalContext& ctx, const std::vector<std::string>& materials,
                                int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("run_comparison: n must be >= 1");
  check_held_out_hygiene(ctx);

  ComparisonReport rep;
  rep.n_per_cell = n;
  for (std::size_t mi = 0; mi < materials.size(); ++mi) {
    const auto& material = materials[mi];
    const BaselineConfig base = tune_baseline(ctx, material);

    std::vector<double> base_rates, mpc_rates;
    for (int rep_i = 0; rep_i < n; ++rep_i) {
      // Paired protocol: both controllers face the identical plant seed.
      const std::uint64_t plant_seed = mix_seed(seed, mi * 1000 + rep_i);

      ctl::TrialLog blog;
      TrialResult br = run_baseline_trial(ctx, material, base, plant_seed, &blog);
      br.log_path = "trial_" + material + "_baseline_" + std::to_string(rep_i) + ".csv";
      rep.logs.emplace_back(br.log_path, std::move(blog));
      base_rates.push_back(br.cutting_rate);
      rep.trials.push_back(br);

      mpc::DeployResult dres;
      TrialResult mr = run_mpc_trial(ctx, material, plant_seed, &dres);
      mr.log_path = "trial_" + material + "_mpc_" + std::to_string(rep_i) + ".csv";
      rep.logs.emplace_back(mr.log_path, dres.log);
      mpc_rates.push_back(mr.cutting_rate);
      rep.trials.push_back(mr);
    }

    auto mean_std = [](const std::vector<double>& v) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      return std::pair<double, double>(mean, std::sqrt(var / static_cast<double>(v.size())));
    };
    ComparisonCell cell;
    cell.material = material;
    cell.held_out = std::find(ctx.held_out.begin(), ctx.held_out.end(), material) !=
                    ctx.held_out.end();
    std::tie(cell.baseline_mean, cell.baseline_std) = mean_std(base_rates);
    std::tie(cell.mpc_mean, cell.mpc_std) = mean_std(mpc_rates);
    cell.mpc_wins = cell.mpc_mean > cell.baseline_mean;
    rep.cells.push_back(cell);
  }

  // Every cell must hold exactly N paired results.
  for (const auto& cell : rep.cells) {
    long count = 0;
    for (const auto& t : rep.trials)
      if (t.material == cell.material) ++count;
    if (count != 2L * n)
      throw DataError("comparison cell " + cell.material + " is incomplete");
  }
  return rep;
}

ForceCriticalReport force_critical_scenario(const EvalContext& ctx, std::uint64_t seed,
                                            const std::string& material) {
  ForceCriticalReport fc;
  const auto mat = ctx.materials.get(material);

  // Locate the uncuttable band from the material definition.
  int band = -1;
  for (std::size_t i = 0; i < mat.cuttability.values.size(); ++i)
    if (mat.cuttability.values[i] == 0.0) {
      band = static_cast<int>(i);
      break;
    }
  if (band < 0)
    throw ConfigError("force_critical_scenario: material '" + material +
                      "' has no zero-cuttability band");
  const double top = ctx.plant.table_z + mat.height;
  fc.band_top_z = top - mat.cuttability.edges[band] * mat.height;
  fc.band_bottom_z = top - mat.cuttability.edges[band + 1] * mat.height;

  try {
    fc.trial = run_mpc_trial(ctx, material, seed, &fc.deploy);
  } catch (const NumericFault&) {
    fc.fault = true;
    throw;
  }
  if (fc.deploy.reason == mpc::StopReason::force_limit) fc.fault = true;
  fc.cut_passed_band = fc.trial.final_cut_front < fc.band_bottom_z;

  // Core contact: the cut front reaches the top of the band.
  const auto& rows = fc.deploy.log.rows;
  std::size_t core_idx = rows.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (fc.deploy.cut_front[i] <= fc.band_top_z + 1e-4) {
      core_idx = i;
      break;
    }
  }
  fc.reached_core = core_idx < rows.size();
  if (!fc.reached_core) return fc;
  fc.core_contact_t = rows[core_idx].t;

  const double cf_at_core = fc.deploy.cut_front[core_idx];
  double cf_after = cf_at_core;
  for (std::size_t i = core_idx; i < rows.size(); ++i) {
    if (rows[i].t <= fc.core_contact_t + 3.0) cf_after = fc.deploy.cut_front[i];
    else break;
  }
  fc.stall_window_advance = cf_at_core - cf_after;
  fc.stalled = fc.stall_window_advance < 5e-4;

  // Reference-force behavior before core contact vs after the stall window.
  double pre_frz = 0.0, post_frz = 0.0, pre_fry = 0.0, post_fry = 0.0;
  long pre_n = 0, post_n = 0;
  for (const auto& tick : fc.deploy.ticks) {
    if (tick.t < fc.core_contact_t) {
      pre_frz += tick.F_r_star[kZ];
      pre_fry += std::abs(tick.F_r_star[kY]);
      ++pre_n;
    } else if (tick.t > fc.core_contact_t + 3.0) {
      post_frz += tick.F_r_star[kZ];
      post_fry += std::abs(tick.F_r_star[kY]);
      ++post_n;
    }
  }
  if (pre_n > 0) {
    fc.pre_mean_frz = pre_frz / static_cast<double>(pre_n);
    fc.pre_mean_abs_fry = pre_fry / static_cast<double>(pre_n);
  }
  if (post_n > 0) {
    fc.post_mean_frz = post_frz / static_cast<double>(post_n);
    fc.post_mean_abs_fry = post_fry / static_cast<double>(post_n);
  }
  // Under u = K_a (F_s - F_r) with reaction forces positive upward, a
  // non-positive Z reference commands release/upward motion while in contact.
  fc.releasing_z = post_n > 0 && fc.post_mean_frz <= 0.0;
  fc.intensified_lateral = post_n > 0 && pre_n > 0 && fc.post_mean_abs_fry > fc.pre_mean_abs_fry;
  fc.any_indicator = fc.releasing_z || fc.intensified_lateral;
  return fc;
}

// --- report emission ---------------------------------------------------------

namespace {

std::string svg_header(int w, int h) {
  std::ostringstream ss;
  ss << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
     << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  return ss.str();
}

void svg_text(std::ostream& out, double x, double y, const std::string& text, int size = 12,
              const std::string& anchor = "middle") {
  out << "<text x=\"" << fmt_g(x) << "\" y=\"" << fmt_g(y) << "\" font-size=\"" << size
      << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << text
      << "</text>\n";
}

void svg_line(std::ostream& out, double x1, double y1, double x2, double y2,
              const std::string& stroke, double width = 1.0,
              const std::string& dash = "") {
  out << "<line x1=\"" << fmt_g(x1) << "\" y1=\"" << fmt_g(y1) << "\" x2=\"" << fmt_g(x2)
      << "\" y2=\"" << fmt_g(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
      << fmt_g(width) << "\"";
  if (!dash.empty()) out << " stroke-dasharray=\"" << dash << "\"";
  out << "/>\n";
}

void write_rates_svg(const ComparisonReport& rep, const std::string& path) {
  const int W = 80 + static_cast<int>(rep.cells.size()) * 90;
  const int H = 360;
  const double x0 = 60, y0 = 300, plot_h = 240;
  double max_rate = 1e-9;
  for (const auto& c : rep.cells)
    max_rate = std::max({max_rate, c.baseline_mean + c.baseline_std, c.mpc_mean + c.mpc_std});

  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << svg_header(W, H);
  svg_text(out, W / 2.0, 24, "cutting rate: tuned baseline vs learned-model MPC", 14);
  svg_line(out, x0, y0, W - 20, y0, "black");
  svg_line(out, x0, y0, x0, y0 - plot_h, "black");
  svg_text(out, 16, y0 - plot_h / 2.0, "mm/s", 11, "middle");
  for (int i = 0; i <= 4; ++i) {
    const double v = max_rate * i / 4.0;
    const double y = y0 - plot_h * i / 4.0;
    svg_line(out, x0 - 4, y, x0, y, "black");
    svg_text(out, x0 - 8, y + 4, fmt_g(std::round(v * 1e5) / 1e2), 10, "end");
  }
  auto bar = [&](double x, double mean, double sd, const std::string& fill) {
    const double h = plot_h * mean / max_rate;
    out << "<rect x=\"" << fmt_g(x) << "\" y=\"" << fmt_g(y0 - h)
        << "\" width=\"24\" height=\"" << fmt_g(h) << "\" fill=\"" << fill << "\"/>\n";
    const double ye1 = y0 - plot_h * std::min(mean + sd, max_rate) / max_rate;
    const double ye2 = y0 - plot_h * std::max(mean - sd, 0.0) / max_rate;
    svg_line(out, x + 12, ye1, x + 12, ye2, "black");
  };
  for (std::size_t i = 0; i < rep.cells.size(); ++i) {
    const auto& c = rep.cells[i];
    const double gx = x0 + 20 + static_cast<double>(i) * 90;
    bar(gx, c.baseline_mean, c.baseline_std, "#9e9e9e");
    bar(gx + 28, c.mpc_mean, c.mpc_std, "#4878cf");
    svg_text(out, gx + 26, y0 + 16, c.material + (c.held_out ? "*" : ""), 10);
  }
  svg_text(out, x0 + 20, H - 12, "* held out of training; gray = baseline, blue = MPC", 10,
           "start");
  out << "</svg>\n";
}

void write_force_critical_svg(const ForceCriticalReport& fc, const std::string& path) {
  const int W = 720, H = 480;
  const double x0 = 60, x1 = W - 20;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << svg_header(W, H);
  svg_text(out, W / 2.0, 22, "force-critical episode: " + fc.trial.material, 14);

  const auto& rows = fc.deploy.log.rows;
  if (rows.empty()) {
    out << "</svg>\n";
    return;
  }
  const double t_max = rows.back().t;
  auto tx = [&](double t) { return x0 + (x1 - x0) * t / std::max(t_max, 1e-9); };

  // Panel 1: knife height and cut front.
  {
    const double py0 = 210, ph = 160;
    double z_min = fc.band_bottom_z, z_max = 0.0;
    for (const auto& r : rows) z_max = std::max(z_max, r.p[kZ]);
    for (double cf : fc.deploy.cut_front) z_min = std::min(z_min, cf);
    const double span = std::max(z_max - z_min, 1e-9);
    auto zy = [&](double z) { return py0 - ph * (z - z_min) / span; };
    svg_line(out, x0, py0, x1, py0, "black");
    svg_line(out, x0, py0, x0, py0 - ph, "black");
    svg_text(out, 16, py0 - ph / 2.0, "z [m]", 11);
    svg_line(out, x0, zy(fc.band_top_z), x1, zy(fc.band_top_z), "#c44e52", 1.0, "4,3");
    svg_line(out, x0, zy(fc.band_bottom_z), x1, zy(fc.band_bottom_z), "#c44e52", 1.0, "4,3");
    auto poly = [&](const std::string& stroke, auto value) {
      out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.2\" points=\"";
      for (std::size_t i = 0; i < rows.size(); i += 2)
        out << fmt_g(tx(rows[i].t)) << ',' << fmt_g(zy(value(i))) << ' ';
      out << "\"/>\n";
    };
    poly("#4878cf", [&](std::size_t i) { return rows[i].p[kZ]; });
    poly("#55a868", [&](std::size_t i) { return fc.deploy.cut_front[i]; });
    svg_text(out, x1 - 4, py0 - ph + 12, "blue: knife z, green: cut front, red: core band", 10,
             "end");
  }

  // Panel 2: commanded reference forces at the ticks.
  {
    const double py0 = 440, ph = 170;
    double f_min = 0.0, f_max = 0.0;
    for (const auto& k : fc.deploy.ticks) {
      f_min = std::min({f_min, k.F_r_star[kY], k.F_r_star[kZ]});
      f_max = std::max({f_max, k.F_r_star[kY], k.F_r_star[kZ]});
    }
    const double span = std::max(f_max - f_min, 1e-9);
    auto fy = [&](double f) { return py0 - ph * (f - f_min) / span; };
    svg_line(out, x0, py0, x1, py0, "black");
    svg_line(out, x0, py0, x0, py0 - ph, "black");
    svg_text(out, 16, py0 - ph / 2.0, "F_r [N]", 11);
    if (f_min < 0.0 && f_max > 0.0) svg_line(out, x0, fy(0.0), x1, fy(0.0), "#bbbbbb");
    if (fc.reached_core)
      svg_line(out, tx(fc.core_contact_t), py0, tx(fc.core_contact_t), py0 - ph, "#c44e52", 1.0,
               "4,3");
    auto poly = [&](const std::string& stroke, int axis) {
      out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.2\" points=\"";
      for (const auto& k : fc.deploy.ticks)
        out << fmt_g(tx(k.t)) << ',' << fmt_g(fy(k.F_r_star[axis])) << ' ';
      out << "\"/>\n";
    };
    if (!fc.deploy.ticks.empty()) {
      poly("#dd8452", kY);
      poly("#4878cf", kZ);
    }
    svg_text(out, x1 - 4, py0 - ph + 12, "orange: F_r_y, blue: F_r_z, red: core contact", 10,
             "end");
    svg_text(out, x1 - 4, py0 + 16, "t [s]", 10, "end");
  }
  out << "</svg>\n";
}

}  // namespace

void emit_report(const ComparisonReport& rep, const ForceCriticalReport& fc,
                 const std::string& out_dir) {
  fs::create_directories(out_dir);

  {
    std::ofstream out(out_dir + "/rates.csv");
    if (!out) throw DataError("cannot write rates.csv");
    out << "material,controller,mean_rate,std_rate,n,held_out,win\n";
    for (const auto& c : rep.cells) {
      out << c.material << ",baseline," << fmt_g(c.baseline_mean) << ',' << fmt_g(c.baseline_std)
          << ',' << rep.n_per_cell << ',' << (c.held_out ? 1 : 0) << ','
          << (c.mpc_wins ? 0 : (c.baseline_mean > c.mpc_mean ? 1 : 0)) << '\n';
      out << c.material << ",mpc," << fmt_g(c.mpc_mean) << ',' << fmt_g(c.mpc_std) << ','
          << rep.n_per_cell << ',' << (c.held_out ? 1 : 0) << ',' << (c.mpc_wins ? 1 : 0)
          << '\n';
    }
  }

  for (const auto& [name, log] : rep.logs) ctl::write_trial_csv(log, out_dir + "/" + name);

  {
    std::ofstream out(out_dir + "/force_critical.csv");
    if (!out) throw DataError("cannot write force_critical.csv");
    out << "key,value\n";
    out << "material," << fc.trial.material << '\n';
    out << "completed," << (fc.trial.completed ? 1 : 0) << '\n';
    out << "stop_reason," << mpc::stop_reason_name(fc.deploy.reason) << '\n';
    out << "band_top_z," << fmt_g(fc.band_top_z) << '\n';
    out << "band_bottom_z," << fmt_g(fc.band_bottom_z) << '\n';
    out << "final_cut_front," << fmt_g(fc.trial.final_cut_front) << '\n';
    out << "cut_passed_band," << (fc.cut_passed_band ? 1 : 0) << '\n';
    out << "reached_core," << (fc.reached_core ? 1 : 0) << '\n';
    out << "core_contact_t," << fmt_g(fc.core_contact_t) << '\n';
    out << "stalled," << (fc.stalled ? 1 : 0) << '\n';
    out << "stall_window_advance_m," << fmt_g(fc.stall_window_advance) << '\n';
    out << "pre_mean_frz," << fmt_g(fc.pre_mean_frz) << '\n';
    out << "post_mean_frz," << fmt_g(fc.post_mean_frz) << '\n';
    out << "pre_mean_abs_fry," << fmt_g(fc.pre_mean_abs_fry) << '\n';
    out << "post_mean_abs_fry," << fmt_g(fc.post_mean_abs_fry) << '\n';
    out << "releasing_z," << (fc.releasing_z ? 1 : 0) << '\n';
    out << "intensified_lateral," << (fc.intensified_lateral ? 1 : 0) << '\n';
    out << "any_indicator," << (fc.any_indicator ? 1 : 0) << '\n';
    out << "peak_force_n," << fmt_g(fc.trial.peak_force_n) << '\n';
    out << "fault," << (fc.fault ? 1 : 0) << '\n';
  }

  write_rates_svg(rep, out_dir + "/rates.svg");
  write_force_critical_svg(fc, out_dir + "/force_critical.svg");
}

}  // namespace cutmpc::eval
