#include "cutmpc/plant.hpp"

#include <algorithm>
#include <cmath>

namespace cutmpc::sim {

void PlantConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("plant: dt must be > 0");
  if (!(actuator_tau >= 0.0)) throw ConfigError("plant: actuator_tau must be >= 0");
  if (!(v_ref > 0.0)) throw ConfigError("plant: v_ref must be > 0");
}

namespace {

bool inside_extent(double y, const MaterialSpec& mat) {
  return y >= mat.y_min && y <= mat.y_max;
}

double depth_fraction(double z, const MaterialSpec& mat, const PlantConfig& cfg) {
  const double top = cfg.table_z + mat.height;
  return std::clamp((top - z) / mat.height, 0.0, 1.0);
}

}  // namespace

double embedded_length(const PlantState& s, const MaterialSpec& mat, const PlantConfig& cfg) {
  if (!inside_extent(s.p[kY], mat)) return 0.0;
  const double top = cfg.table_z + mat.height;
  return std::clamp(top - std::max(s.p[kZ], s.cut_front), 0.0, mat.height);
}

StepResult plant_step(const PlantState& s, const Vec2& u, const MaterialSpec& mat,
                      const PlantConfig& cfg, std::mt19937_64& rng) {
  if (!finite2(s.p) || !finite2(s.v) || !std::isfinite(s.cut_front) || !finite2(u))
    throw NumericFault("plant_step: NaN/Inf in state or command");

  PlantState n = s;

  // Actuator: exact first-order relaxation toward the command.
  const double alpha = cfg.actuator_tau > 0.0 ? std::exp(-cfg.dt / cfg.actuator_tau) : 0.0;
  n.v = u + alpha * (s.v - u);
  n.p = s.p + cfg.dt * n.v;

  // Table and uncut material are rigid for the knife tip: no sinking past the
  // cut front from above and no lateral entry into uncut flesh from the side.
  n.p[kZ] = std::max(n.p[kZ], cfg.table_z);
  const bool was_inside = inside_extent(s.p[kY], mat);
  bool inside = inside_extent(n.p[kY], mat);
  if (inside && !was_inside && n.p[kZ] < n.cut_front - kPenetrationMax) {
    n.p[kY] = s.p[kY];
    inside = false;
  }
  if (inside) n.p[kZ] = std::max(n.p[kZ], n.cut_front - kPenetrationMax);

  Vec2 contact = Vec2::Zero();
  if (inside) {
    const double frac = depth_fraction(n.cut_front, mat, cfg);
    const double delta = std::max(0.0, n.cut_front - n.p[kZ]);
    contact[kZ] = mat.stiffness.at(frac) * delta;

    // Cutting progresses where the blade presses on uncut material; sawing
    // speed accelerates it, epsilon admits plain press cutting.
    const double beta = mat.cuttability.at(frac);
    const double advance = beta * delta * (mat.press_cut_floor + std::abs(n.v[kY])) * cfg.dt;
    n.cut_front = std::max(n.cut_front - advance, cfg.table_z);

    const double embedded = embedded_length(n, mat, cfg);
    const double drag = mat.friction_coeff * contact[kZ] + mat.adhesion * embedded;
    contact[kY] = -drag * std::tanh(n.v[kY] / cfg.v_ref);
    n.in_contact = delta > 0.0 || embedded > 0.0;
  } else {
    n.in_contact = false;
  }

  // Both draws always happen so the noise stream does not depend on contact.
  std::normal_distribution<double> noise(0.0, 1.0);
  Vec2 sensed = contact;
  sensed[kY] += mat.force_noise_std * noise(rng);
  sensed[kZ] += mat.force_noise_std * noise(rng);
  return {n, sensed};
}

Plant::Plant(const MaterialSpec& mat, const PlantConfig& cfg)
    : mat_(mat), cfg_(cfg), rng_(cfg.rng_seed) {
  mat_.validate();
  cfg_.validate();
  state_.p = Vec2(0.5 * (mat_.y_min + mat_.y_max), cfg_.table_z + mat_.height + 0.01);
  state_.cut_front = cfg_.table_z + mat_.height;
}

Vec2 Plant::step(const Vec2& u) {
  auto r = plant_step(state_, u, mat_, cfg_, rng_);
  state_ = r.state;
  return r.sensed_force;
}

}  // namespace cutmpc::sim
