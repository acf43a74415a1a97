#pragma once

#include "ilio/degeneracy.hpp"
#include "ilio/features.hpp"
#include "ilio/fusion.hpp"
#include "ilio/imu.hpp"
#include "ilio/intensity_filter.hpp"

#include <fstream>
#include <sstream>

namespace ilio {

/// All module settings plus extrinsics. Parsed from a sectioned key = value
/// file; unknown keys are rejected and values validated against ranges.
struct RunConfig {
  ProjectionModel projection = ProjectionModel::uniform(1024, 128, M_PI / 2.0,
                                                        0.015);
  FilterConfig filter;
  bool filter_reflectivity = false;  // ablation: feed reflectivity instead
  DegeneracyConfig degeneracy;
  FeatureConfig features;
  FusionConfig fusion;
  ImuConfig imu;
  Pose T_IL;
  uint64_t seed = 1;  // random-policy selection seed
  bool custom_beam_table = false;

  void finalize() {
    if (!custom_beam_table) {
      projection = ProjectionModel::uniform(
          projection.width, projection.height, projection.vertical_fov,
          projection.emitter_offset, projection.u_offset);
    } else {
      projection.uniform_beams = false;
    }
    if (static_cast<int>(projection.beam_elevations.size()) !=
        projection.height) {
      throw std::invalid_argument("config: beam table size != height");
    }
    for (size_t i = 1; i < projection.beam_elevations.size(); ++i) {
      const double d = projection.beam_elevations[i] -
                       projection.beam_elevations[i - 1];
      const double d0 = projection.beam_elevations[1] -
                        projection.beam_elevations[0];
      if (d * d0 <= 0.0) {
        throw std::invalid_argument("config: beam table not strictly monotone");
      }
    }
    filter.validate();
    T_IL.rotation.normalize();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& v, const std::string& key) {
  size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": " + v);
  }
  if (pos != v.size()) {
    throw std::invalid_argument("config: bad number for " + key + ": " + v);
  }
  return d;
}

inline double checked(double v, double lo, double hi, const std::string& key) {
  if (v < lo || v > hi) {
    throw std::invalid_argument("config: " + key + " out of range [" +
                                std::to_string(lo) + ", " + std::to_string(hi) +
                                "]: " + std::to_string(v));
  }
  return v;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw std::invalid_argument("config: bad bool for " + key + ": " + v);
}

}  // namespace detail

/// Applies one "section.key = value" setting; throws on unknown keys or
/// out-of-range values.
inline void apply_config_key(RunConfig& cfg, const std::string& section,
                             const std::string& key, const std::string& value) {
  using detail::checked;
  using detail::parse_bool;
  using detail::parse_double;
  const std::string full = section + "." + key;
  auto num = [&](double lo, double hi) {
    return checked(parse_double(value, full), lo, hi, full);
  };

  if (section == "projection") {
    if (key == "width") cfg.projection.width = static_cast<int>(num(16, 8192));
    else if (key == "height") cfg.projection.height = static_cast<int>(num(2, 1024));
    else if (key == "vertical_fov_deg")
      cfg.projection.vertical_fov = num(1.0, 180.0) * M_PI / 180.0;
    else if (key == "emitter_offset") cfg.projection.emitter_offset = num(0.0, 0.2);
    else if (key == "u_offset") cfg.projection.u_offset = num(-8192.0, 8192.0);
    else if (key == "beam_elevations_deg") {
      cfg.projection.beam_elevations.clear();
      cfg.custom_beam_table = true;
      std::istringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        cfg.projection.beam_elevations.push_back(
            parse_double(detail::trim(item), full) * M_PI / 180.0);
      }
    } else throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "filter") {
    if (key == "highpass_cutoff") cfg.filter.highpass_cutoff = num(0.01, 0.5);
    else if (key == "horizontal_width")
      cfg.filter.horizontal_width = static_cast<int>(num(1, 201));
    else if (key == "brightness_window")
      cfg.filter.brightness_window = static_cast<int>(num(3, 501));
    else if (key == "intensity_scale") cfg.filter.intensity_scale = num(1.0, 1e4);
    else if (key == "gaussian") cfg.filter.gaussian = parse_bool(value, full);
    else if (key == "source") {
      if (value == "intensity") cfg.filter_reflectivity = false;
      else if (value == "reflectivity") cfg.filter_reflectivity = true;
      else throw std::invalid_argument("config: bad filter.source: " + value);
    } else throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "degeneracy") {
    if (key == "contribution_floor")
      cfg.degeneracy.contribution_floor = num(0.0, 1.0);
    else if (key == "threshold") cfg.degeneracy.threshold = num(0.0, 1e9);
    else throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "features") {
    if (key == "gradient_threshold")
      cfg.features.gradient_threshold = num(0.0, 255.0);
    else if (key == "nms_radius") cfg.features.nms_radius = static_cast<int>(num(1, 50));
    else if (key == "budget_per_direction")
      cfg.features.budget_per_direction = static_cast<int>(num(0, 1000));
    else if (key == "max_patches")
      cfg.features.max_patches = static_cast<int>(num(0, 10000));
    else if (key == "max_age") cfg.features.max_age = static_cast<int>(num(1, 1000));
    else if (key == "ncc_threshold") cfg.features.ncc_threshold = num(-1.0, 1.0);
    else if (key == "occlusion_threshold")
      cfg.features.occlusion_threshold = num(0.0, 10.0);
    else if (key == "min_range") cfg.features.min_range = num(0.0, 1000.0);
    else if (key == "max_range") cfg.features.max_range = num(0.0, 10000.0);
    else if (key == "min_spacing") cfg.features.min_spacing = num(0.0, 100.0);
    else if (key == "isotropy_ratio") cfg.features.isotropy_ratio = num(1.0, 100.0);
    else if (key == "policy") {
      if (value == "complementary")
        cfg.features.policy = SelectionPolicy::kComplementary;
      else if (value == "strongest")
        cfg.features.policy = SelectionPolicy::kStrongest;
      else if (value == "random") cfg.features.policy = SelectionPolicy::kRandom;
      else throw std::invalid_argument("config: bad features.policy: " + value);
    } else throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "fusion") {
    if (key == "lambda") cfg.fusion.lambda = num(0.0, 1000.0);
    else if (key == "sigma") cfg.fusion.sigma = num(1e-9, 1e6);
    else if (key == "scan_voxel") cfg.fusion.scan_voxel = num(0.01, 10.0);
    else if (key == "map_voxel") cfg.fusion.map_voxel = num(0.01, 10.0);
    else if (key == "map_cap_per_voxel")
      cfg.fusion.map_cap_per_voxel = static_cast<int>(num(1, 1000));
    else if (key == "map_horizon") cfg.fusion.map_horizon = num(1.0, 10000.0);
    else if (key == "knn") cfg.fusion.knn = static_cast<int>(num(3, 20));
    else if (key == "plane_tolerance") cfg.fusion.plane_tolerance = num(1e-3, 1.0);
    else if (key == "max_iterations")
      cfg.fusion.max_iterations = static_cast<int>(num(1, 100));
    else if (key == "convergence_delta")
      cfg.fusion.convergence_delta = num(0.0, 1.0);
    else if (key == "photometric") cfg.fusion.photometric = parse_bool(value, full);
    else throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "imu") {
    if (key == "gyro_noise") cfg.imu.gyro_noise = num(0.0, 10.0);
    else if (key == "acc_noise") cfg.imu.acc_noise = num(0.0, 100.0);
    else if (key == "gyro_bias_noise") cfg.imu.gyro_bias_noise = num(0.0, 10.0);
    else if (key == "acc_bias_noise") cfg.imu.acc_bias_noise = num(0.0, 100.0);
    else if (key == "gravity_noise") cfg.imu.gravity_noise = num(0.0, 10.0);
    else if (key == "max_gap") cfg.imu.max_gap = num(1e-3, 10.0);
    else if (key == "init_duration") cfg.imu.init_duration = num(0.0, 10.0);
    else if (key == "gravity_magnitude") cfg.imu.gravity_magnitude = num(1.0, 20.0);
    else throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "extrinsics") {
    if (key == "t_x") cfg.T_IL.translation.x() = num(-10.0, 10.0);
    else if (key == "t_y") cfg.T_IL.translation.y() = num(-10.0, 10.0);
    else if (key == "t_z") cfg.T_IL.translation.z() = num(-10.0, 10.0);
    else if (key == "q_w") cfg.T_IL.rotation.w() = num(-1.0, 1.0);
    else if (key == "q_x") cfg.T_IL.rotation.x() = num(-1.0, 1.0);
    else if (key == "q_y") cfg.T_IL.rotation.y() = num(-1.0, 1.0);
    else if (key == "q_z") cfg.T_IL.rotation.z() = num(-1.0, 1.0);
    else throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "run") {
    if (key == "seed") cfg.seed = static_cast<uint64_t>(num(0, 1e18));
    else throw std::invalid_argument("config: unknown key " + full);
  } else {
    throw std::invalid_argument("config: unknown section [" + section + "]");
  }
}

/// "section.key=value" CLI override.
inline void apply_config_override(RunConfig& cfg, const std::string& spec) {
  const auto eq = spec.find('=');
  const auto dot = spec.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw std::invalid_argument("config: bad override (want section.key=value): " +
                                spec);
  }
  apply_config_key(cfg, detail::trim(spec.substr(0, dot)),
                   detail::trim(spec.substr(dot + 1, eq - dot - 1)),
                   detail::trim(spec.substr(eq + 1)));
}

inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("config: bad section at line " +
                                    std::to_string(lineno));
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: missing '=' at line " +
                                  std::to_string(lineno));
    }
    apply_config_key(cfg, section, detail::trim(line.substr(0, eq)),
                     detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_config: cannot open " + path);
  return parse_config(f);
}

}  // namespace ilio
