#include "cutmpc/material.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cutmpc::sim {

PiecewiseProfile PiecewiseProfile::bands(const std::vector<std::pair<double, double>>& sv) {
  if (sv.empty()) throw ConfigError("profile needs at least one band");
  PiecewiseProfile p;
  p.edges.clear();
  p.values.clear();
  for (const auto& [start, value] : sv) {
    p.edges.push_back(start);
    p.values.push_back(value);
  }
  p.edges.push_back(1.0);
  p.validate("profile");
  return p;
}

double PiecewiseProfile::at(double depth_frac) const {
  const double d = std::clamp(depth_frac, 0.0, 1.0);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (d < edges[i + 1]) return values[i];
  }
  return values.back();
}

void PiecewiseProfile::validate(const std::string& ctx) const {
  if (edges.size() != values.size() + 1 || values.empty())
    throw ConfigError(ctx + ": edges/values size mismatch");
  if (edges.front() != 0.0 || edges.back() != 1.0)
    throw ConfigError(ctx + ": profile must span depth fractions [0, 1]");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    if (!(edges[i] < edges[i + 1])) throw ConfigError(ctx + ": edges must increase");
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(ctx + ": values must be >= 0");
}

void MaterialSpec::validate() const {
  if (name.empty()) throw ConfigError("material: empty name");
  if (!(height > 0.0)) throw ConfigError(name + ": height must be > 0");
  if (!(y_min < y_max)) throw ConfigError(name + ": empty y extent");
  stiffness.validate(name + ".stiffness_profile");
  cuttability.validate(name + ".cuttability_profile");
  if (!(friction_coeff >= 0.0)) throw ConfigError(name + ": friction_coeff must be >= 0");
  if (!(adhesion >= 0.0)) throw ConfigError(name + ": adhesion must be >= 0");
  if (!(press_cut_floor >= 0.0 && press_cut_floor <= 1.0))
    throw ConfigError(name + ": press_cut_floor must be in [0, 1]");
  if (!(force_noise_std >= 0.0)) throw ConfigError(name + ": force_noise_std must be >= 0");
}

namespace {

// Desk-scale presets. Stiffness keeps the 100 Hz admittance loop stable for
// compliance gains up to 0.15 (m/s)/N; cuttability is sized so a competent
// controller finishes a 3-4 cm object within tens of seconds. The calibration
// runs behind these numbers are recorded in docs/plant.md.
MaterialSpec preset(const std::string& label) {
  MaterialSpec m;
  m.name = label;
  if (label == "cake") {
    // Homogeneous, easy to cut, nearly frictionless; plain pressing works.
    m.height = 0.035;
    m.stiffness = PiecewiseProfile::constant(400.0);
    m.cuttability = PiecewiseProfile::constant(30.0);
    m.friction_coeff = 0.05;
    m.adhesion = 2.0;
    m.press_cut_floor = 0.6;
  } else if (label == "cucumber") {
    m.height = 0.03;
    m.stiffness = PiecewiseProfile::bands({{0.0, 1200.0}, {0.15, 800.0}});
    m.cuttability = PiecewiseProfile::bands({{0.0, 20.0}, {0.15, 28.0}});
    m.friction_coeff = 0.2;
    m.adhesion = 8.0;
    m.press_cut_floor = 0.25;
  } else if (label == "zucchini") {
    // Stiff with viscous drag.
    m.height = 0.035;
    m.stiffness = PiecewiseProfile::constant(1400.0);
    m.cuttability = PiecewiseProfile::constant(14.0);
    m.friction_coeff = 0.45;
    m.adhesion = 18.0;
    m.press_cut_floor = 0.15;
  } else if (label == "cheese") {
    // Soft but sticky; lateral motion fights high friction.
    m.height = 0.03;
    m.stiffness = PiecewiseProfile::constant(600.0);
    m.cuttability = PiecewiseProfile::constant(10.0);
    m.friction_coeff = 0.7;
    m.adhesion = 35.0;
    m.press_cut_floor = 0.3;
  } else if (label == "bell-pepper") {
    // Stiff skin, soft flesh, stiff base ridge.
    m.height = 0.045;
    m.stiffness = PiecewiseProfile::bands({{0.0, 1800.0}, {0.2, 250.0}, {0.85, 1500.0}});
    m.cuttability = PiecewiseProfile::bands({{0.0, 12.0}, {0.2, 45.0}, {0.85, 14.0}});
    m.friction_coeff = 0.15;
    m.adhesion = 4.0;
    m.press_cut_floor = 0.2;
  } else if (label == "hollow-pepper") {
    // Hollow interior: zero stiffness band, knife free-falls to the far wall.
    m.height = 0.05;
    m.stiffness = PiecewiseProfile::bands({{0.0, 1800.0}, {0.2, 0.0}, {0.8, 1400.0}});
    m.cuttability = PiecewiseProfile::bands({{0.0, 12.0}, {0.2, 60.0}, {0.8, 16.0}});
    m.friction_coeff = 0.15;
    m.adhesion = 4.0;
    m.press_cut_floor = 0.5;
  } else if (label == "lemon") {
    // Tough skin over juicy flesh, slippery.
    m.height = 0.045;
    m.stiffness = PiecewiseProfile::bands({{0.0, 2200.0}, {0.12, 700.0}});
    m.cuttability = PiecewiseProfile::bands({{0.0, 8.0}, {0.12, 26.0}});
    m.friction_coeff = 0.12;
    m.adhesion = 6.0;
    m.press_cut_floor = 0.1;
  } else if (label == "potato") {
    // Dense flesh gripping the whole blade; pressing without sawing never cuts.
    m.height = 0.04;
    m.stiffness = PiecewiseProfile::constant(1100.0);
    m.cuttability = PiecewiseProfile::constant(22.0);
    m.friction_coeff = 0.8;
    m.adhesion = 60.0;
    m.press_cut_floor = 0.0;
  } else if (label == "carrot") {
    // Woody core the plant refuses to cut: cuttability 0 on [0.4, 0.6].
    m.height = 0.04;
    m.stiffness = PiecewiseProfile::bands({{0.0, 2600.0}, {0.4, 3500.0}, {0.6, 2600.0}});
    m.cuttability = PiecewiseProfile::bands({{0.0, 16.0}, {0.4, 0.0}, {0.6, 16.0}});
    m.friction_coeff = 0.35;
    m.adhesion = 12.0;
    m.press_cut_floor = 0.05;
  } else if (label == "air") {
    // Zero-resistance placeholder for controller plumbing tests.
    m.height = 0.04;
    m.stiffness = PiecewiseProfile::constant(0.0);
    m.cuttability = PiecewiseProfile::constant(80.0);
    m.friction_coeff = 0.0;
    m.adhesion = 0.0;
    m.press_cut_floor = 1.0;
    m.force_noise_std = 0.0;
  } else {
    std::string msg = "unknown material label '" + label + "'; valid labels:";
    for (const auto& l : material_labels()) msg += " " + l;
    throw ConfigError(msg);
  }
  m.validate();
  return m;
}

}  // namespace

const std::vector<std::string>& material_labels() {
  static const std::vector<std::string> labels = {
      "cake",   "cucumber", "zucchini",      "cheese", "bell-pepper",
      "lemon",  "potato",   "carrot",        "hollow-pepper", "air"};
  return labels;
}

MaterialSpec make_material(const std::string& label) { return preset(label); }

void MaterialLibrary::load_overrides(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open materials file: " + path);

  auto parse_profile = [](const std::string& text, const std::string& ctx) {
    std::vector<std::pair<double, double>> sv;
    std::stringstream ss(text);
    std::string band;
    while (std::getline(ss, band, ',')) {
      auto colon = band.find(':');
      if (colon == std::string::npos) throw ConfigError(ctx + ": bands are 'start:value'");
      sv.emplace_back(std::stod(band.substr(0, colon)), std::stod(band.substr(colon + 1)));
    }
    return PiecewiseProfile::bands(sv);
  };

  MaterialSpec* cur = nullptr;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto ctx = path + ":" + std::to_string(lineno);
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    if (line.front() == '[') {
      if (line.back() != ']' || line.rfind("[material.", 0) != 0)
        throw ConfigError(ctx + ": expected [material.NAME]");
      const std::string name = line.substr(10, line.size() - 11);
      if (name.empty()) throw ConfigError(ctx + ": empty material name");
      MaterialSpec base;
      try {
        base = make_material(name);
      } catch (const ConfigError&) {
        base.name = name;  // brand new material, starts from defaults
      }
      overrides_.push_back(base);
      cur = &overrides_.back();
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos || cur == nullptr)
      throw ConfigError(ctx + ": expected key = value inside a [material.*] section");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
    };
    trim(key);
    trim(val);
    try {
      if (key == "y_min") cur->y_min = std::stod(val);
      else if (key == "y_max") cur->y_max = std::stod(val);
      else if (key == "height") cur->height = std::stod(val);
      else if (key == "stiffness_profile") cur->stiffness = parse_profile(val, ctx);
      else if (key == "cuttability_profile") cur->cuttability = parse_profile(val, ctx);
      else if (key == "friction_coeff") cur->friction_coeff = std::stod(val);
      else if (key == "adhesion") cur->adhesion = std::stod(val);
      else if (key == "press_cut_floor") cur->press_cut_floor = std::stod(val);
      else if (key == "force_noise_std") cur->force_noise_std = std::stod(val);
      else throw ConfigError(ctx + ": unknown material key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ConfigError(ctx + ": bad number in '" + val + "'");
    }
  }
  for (const auto& m : overrides_) m.validate();
}

MaterialSpec MaterialLibrary::get(const std::string& label) const {
  for (auto it = overrides_.rbegin(); it != overrides_.rend(); ++it)
    if (it->name == label) return *it;
  return make_material(label);
}

std::vector<std::string> MaterialLibrary::labels() const {
  std::vector<std::string> all = material_labels();
  for (const auto& m : overrides_)
    if (std::find(all.begin(), all.end(), m.name) == all.end()) all.push_back(m.name);
  return all;
}

}  // namespace cutmpc::sim
