#include "cutmpc/controller.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

namespace cutmpc::ctl {

void Gains::validate() const {
  if (!(kp[kY] >= 0.0 && kp[kZ] >= 0.0 && ka[kY] >= 0.0 && ka[kZ] >= 0.0))
    throw ConfigError("gains: diagonal entries must be >= 0");
}

void Gains::require_invertible_ka() const {
  if (!(ka[kY] > 0.0 && ka[kZ] > 0.0))
    throw ConfigError("gains: K_a diagonal must be strictly positive here");
}

Vec2 control_law(const Vec2& F_s, const Vec2& F_r, const Gains& g) {
  return g.ka.cwiseProduct(F_s - F_r);
}

Vec2 reference_force(const Vec2& p, const Vec2& p_d, const Vec2& pdot_d, const Vec2& F_d,
                     const Gains& g) {
  g.require_invertible_ka();
  const Vec2 e_p = p - p_d;
  return F_d - (pdot_d - g.kp.cwiseProduct(e_p)).cwiseQuotient(g.ka);
}

PosVel quintic_descent(double t, double duration, double z0, double z1) {
  if (!(duration > 0.0)) throw ConfigError("quintic_descent: duration must be > 0");
  if (t <= 0.0) return {z0, 0.0};
  if (t >= duration) return {z1, 0.0};
  const double s = t / duration;
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  const double shape = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
  const double dshape = (30.0 * s2 - 60.0 * s3 + 30.0 * s4) / duration;
  return {z0 + (z1 - z0) * shape, (z1 - z0) * dshape};
}

PosVel triangular_saw(double t, double center, double range, double period) {
  if (!(period > 0.0)) throw ConfigError("triangular_saw: period must be > 0");
  if (!(range >= 0.0)) throw ConfigError("triangular_saw: range must be >= 0");
  if (range == 0.0) return {center, 0.0};
  const double slope = 2.0 * range / period;
  double phase = std::fmod(t, period) / period;
  if (phase < 0.0) phase += 1.0;
  // Rising through the center on [0, 1/4] and (3/4, 1); falling on (1/4, 3/4].
  // Derivatives at the kinks take the left limit.
  if (phase <= 0.25) return {center + slope * phase * period, slope};
  if (phase <= 0.75) return {center + 0.5 * range - slope * (phase - 0.25) * period, -slope};
  return {center - 0.5 * range + slope * (phase - 0.75) * period, slope};
}

Vec2 DesiredTrajectory::position(double t) const {
  return {triangular_saw(t, saw_center, saw_range, saw_period).pos,
          quintic_descent(t, duration, z_start, z_end).pos};
}

Vec2 DesiredTrajectory::velocity(double t) const {
  return {triangular_saw(t, saw_center, saw_range, saw_period).vel,
          quintic_descent(t, duration, z_start, z_end).vel};
}

void write_trial_csv(const TrialLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "# units: t [s]; p_y p_z [m]; F_s_y F_s_z F_r_y F_r_z [N]\n";
  out << "t,p_y,p_z,F_s_y,F_s_z,F_r_y,F_r_z\n";
  for (const auto& r : log.rows) {
    out << fmt_g(r.t) << ',' << fmt_g(r.p[kY]) << ',' << fmt_g(r.p[kZ]) << ','
        << fmt_g(r.F_s[kY]) << ',' << fmt_g(r.F_s[kZ]) << ','
        << fmt_g(r.F_r[kY]) << ',' << fmt_g(r.F_r[kZ]) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

TrialLog read_trial_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trial log: " + path);
  TrialLog log;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("t,p_y,p_z,F_s_y", 0) != 0)
        throw DataError(path + ": unexpected trial CSV header: " + line);
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    double vals[7];
    for (double& val : vals) {
      if (!std::getline(ss, cell, ',')) throw DataError(path + ": short row: " + line);
      val = std::stod(cell);
    }
    log.rows.push_back({vals[0], {vals[1], vals[2]}, {vals[3], vals[4]}, {vals[5], vals[6]}});
  }
  if (!header_seen) throw DataError(path + ": missing header row");
  return log;
}

ClosedLoopRunner::ClosedLoopRunner(sim::Plant plant, DesiredTrajectory traj, Gains gains)
    : plant_(std::move(plant)), traj_(std::move(traj)), gains_(gains) {
  gains_.validate();
  gains_.require_invertible_ka();
}

Vec2 ClosedLoopRunner::step() {
  const Vec2 p = plant_.state().p;
  const Vec2 F_r = reference_force(p, traj_.position(t_), traj_.velocity(t_), traj_.F_d, gains_);
  const Vec2 u = control_law(last_sensed_, F_r, gains_);
  log_.rows.push_back({t_, p, last_sensed_, F_r});
  last_sensed_ = plant_.step(u);
  t_ += plant_.config().dt;
  return u;
}

void ClosedLoopRunner::run(double duration) {
  const int n = static_cast<int>(std::llround(duration / plant_.config().dt));
  for (int i = 0; i < n; ++i) step();
}

}  // namespace cutmpc::ctl
