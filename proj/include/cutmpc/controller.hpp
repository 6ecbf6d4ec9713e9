#pragma once

#include "cutmpc/common.hpp"
#include "cutmpc/plant.hpp"

#include <string>
#include <vector>

namespace cutmpc::ctl {

/// Diagonal stiffness (1/s) and compliance ((m/s)/N) gains on the Y/Z plane.
struct Gains {
  Vec2 kp = Vec2::Zero();
  Vec2 ka = Vec2::Constant(0.05);

  void validate() const;
  void require_invertible_ka() const;
};

/// Velocity command from the force error: u = K_a (F_s - F_r). Pure.
Vec2 control_law(const Vec2& F_s, const Vec2& F_r, const Gains& g);

/// Reference force realizing compliant trajectory tracking:
/// F_r = F_d - K_a^-1 (pdot_d - K_p e_p), with e_p = p - p_d. Pure.
/// Throws ConfigError when K_a has a zero diagonal entry.
Vec2 reference_force(const Vec2& p, const Vec2& p_d, const Vec2& pdot_d, const Vec2& F_d,
                     const Gains& g);

/// Minimum-jerk quintic between z0 and z1 with zero end velocity/acceleration.
/// t outside [0, duration] clamps to the endpoint values.
struct PosVel {
  double pos;
  double vel;
};
PosVel quintic_descent(double t, double duration, double z0, double z1);

/// Periodic triangular wave about `center`, peak to peak `range`. Starts at the
/// center moving in +Y; the slope magnitude is 2*range/period and the kink
/// derivative takes the left limit.
PosVel triangular_saw(double t, double center, double range, double period);

/// Commanded sawing + descent trajectory for data collection.
struct DesiredTrajectory {
  double duration = 4.0;     // s
  double saw_center = 0.0;   // m
  double saw_range = 0.03;   // m, peak to peak
  double saw_period = 0.8;   // s
  double z_start = 0.05;     // m
  double z_end = 0.002;      // m
  Vec2 F_d = Vec2::Zero();   // desired force

  Vec2 position(double t) const;
  Vec2 velocity(double t) const;
};

struct TrialRow {
  double t;
  Vec2 p;
  Vec2 F_s;
  Vec2 F_r;
};

struct TrialLog {
  std::vector<TrialRow> rows;
};

void write_trial_csv(const TrialLog& log, const std::string& path);
TrialLog read_trial_csv(const std::string& path);

/// Sense -> reference force -> inverse damping command -> plant step, appending
/// one row per call. Runs the data-collection loop of the admittance controller.
class ClosedLoopRunner {
 public:
  ClosedLoopRunner(sim::Plant plant, DesiredTrajectory traj, Gains gains);

  /// One controller+plant step; returns the applied command.
  Vec2 step();
  void run(double duration);

  const TrialLog& log() const { return log_; }
  const sim::Plant& plant() const { return plant_; }
  double time() const { return t_; }

 private:
  sim::Plant plant_;
  DesiredTrajectory traj_;
  Gains gains_;
  double t_ = 0.0;
  Vec2 last_sensed_ = Vec2::Zero();
  TrialLog log_;
};

}  // namespace cutmpc::ctl
