#pragma once

#include "cutmpc/common.hpp"
#include "cutmpc/material.hpp"

#include <random>

namespace cutmpc::sim {

/// Ground-truth simulator state. Positions are world frame, z up, table below.
struct PlantState {
  Vec2 p = Vec2::Zero();        // knife tip position (y, z) [m]
  Vec2 v = Vec2::Zero();        // actual velocity after actuator lag [m/s]
  double cut_front = 0.0;       // lowest z severed inside the object [m]
  bool in_contact = false;
};

struct PlantConfig {
  double dt = 0.01;              // plant step [s]
  double actuator_tau = 0.04;    // first-order velocity lag [s]
  double v_ref = 0.005;          // Coulomb smoothing scale [m/s]
  double table_z = 0.0;          // table height [m]
  double start_clearance = 0.002;  // knife starts this far above the object [m]
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Knife may sink at most this far below the cut front before the uncut
// material stops it.
inline constexpr double kPenetrationMax = 0.002;  // m

/// Blade length below the object's top surface and above the cut front,
/// clamped to [0, height]. Zero outside the object's lateral extent.
double embedded_length(const PlantState& s, const MaterialSpec& mat, const PlantConfig& cfg);

struct StepResult {
  PlantState state;
  Vec2 sensed_force;  // contact force + sensor noise [N]
};

/// One dt of the contact plant: exponential actuator relaxation toward u,
/// penetration spring normal force, cut-front advance that sawing speeds up,
/// and smoothed Coulomb friction on the sawing axis. Noise is drawn from rng
/// (two normal draws per step, always consumed, so traces are reproducible).
/// NaN anywhere in the inputs is a NumericFault.
StepResult plant_step(const PlantState& s, const Vec2& u, const MaterialSpec& mat,
                      const PlantConfig& cfg, std::mt19937_64& rng);

/// Stateful wrapper owning the state and the noise stream. Independent
/// instances with distinct seeds may run in parallel; one instance is
/// single-threaded.
class Plant {
 public:
  Plant(const MaterialSpec& mat, const PlantConfig& cfg);

  /// Advance one dt under commanded velocity u; returns the sensed force.
  Vec2 step(const Vec2& u);

  const PlantState& state() const { return state_; }
  const MaterialSpec& material() const { return mat_; }
  const PlantConfig& config() const { return cfg_; }
  double object_top() const { return cfg_.table_z + mat_.height; }
  bool cut_complete(double tol = 1e-3) const { return state_.cut_front <= cfg_.table_z + tol; }

 private:
  MaterialSpec mat_;
  PlantConfig cfg_;
  PlantState state_;
  std::mt19937_64 rng_;
};

}  // namespace cutmpc::sim
