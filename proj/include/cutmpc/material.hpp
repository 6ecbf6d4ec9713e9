#pragma once

#include "cutmpc/common.hpp"

#include <string>
#include <vector>

namespace cutmpc::sim {

/// Piecewise-constant profile over the depth fraction [0, 1].
/// `edges` has N+1 entries starting at 0 and ending at 1; `values[i]` applies
/// on [edges[i], edges[i+1]).
struct PiecewiseProfile {
  std::vector<double> edges{0.0, 1.0};
  std::vector<double> values{0.0};

  static PiecewiseProfile constant(double v) { return {{0.0, 1.0}, {v}}; }
  /// Build from (band start, value) pairs; starts must begin at 0 and increase.
  static PiecewiseProfile bands(const std::vector<std::pair<double, double>>& start_value);

  double at(double depth_frac) const;
  void validate(const std::string& ctx) const;
};

/// Parameterized synthetic object standing in for the fruits/vegetables/cake
/// the knife cuts through. All magnitudes are artifact choices at desk scale.
struct MaterialSpec {
  std::string name;
  double y_min = -0.04, y_max = 0.04;     // lateral extent [m]
  double height = 0.04;                   // top surface above the table [m]
  PiecewiseProfile stiffness;             // N/m vs depth fraction
  PiecewiseProfile cuttability;           // 1/(m*(m/s)) vs depth fraction
  double friction_coeff = 0.2;            // Coulomb mu on the normal force
  double adhesion = 10.0;                 // N per meter of embedded blade
  double press_cut_floor = 0.1;           // epsilon: cut advance with zero sawing speed
  double force_noise_std = 0.05;          // N, per axis sensor noise

  void validate() const;
};

/// Preset names accepted by make_material.
const std::vector<std::string>& material_labels();

/// Pure lookup of the built-in presets. Unknown label -> ConfigError naming
/// the valid labels.
MaterialSpec make_material(const std::string& label);

/// Presets plus optional user overrides loaded from a plain-text file.
///
/// File schema (one section per material, keys override the preset, or define
/// a new material when the name is unknown):
///
///   [material.carrot]
///   friction_coeff = 0.5
///   stiffness_profile = 0:2600, 0.4:3500, 0.6:2600
///
/// Profiles are comma-separated `start:value` bands over the depth fraction.
class MaterialLibrary {
 public:
  MaterialLibrary() = default;
  void load_overrides(const std::string& path);
  MaterialSpec get(const std::string& label) const;
  std::vector<std::string> labels() const;

 private:
  std::vector<MaterialSpec> overrides_;
};

}  // namespace cutmpc::sim
