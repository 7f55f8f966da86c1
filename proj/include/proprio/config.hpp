#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "proprio/controller.hpp"
#include "proprio/errors.hpp"
#include "proprio/plant.hpp"
#include "proprio/sensor.hpp"

namespace proprio {

/// Everything a batch run needs, grouped to mirror the library modules.
/// The file format is a sectioned key = value text file; numeric values
/// round-trip bit exactly.
struct ExperimentConfig {
  // [plant]
  TransmissionParams trans;
  KinematicsParams kin;
  BodyParams body;
  SurfaceModel surface;

  // [sensor]
  SensorParams sensor;
  double sigma_vm = 0.6;    // V, noise on V_m
  double sigma_v = 0.05;    // V, noise on V
  double offset_vm = 0.0;   // injected constant offsets
  double offset_v = 0.0;

  // [sysid]
  double sysid_f_lo = 10.0;
  double sysid_f_hi = 50.0;
  double sysid_amplitude_v = 40.0;
  double sysid_duration_s = 6.0;

  // [controller]
  CostWeights weights;
  double v_min = -100.0;
  double v_max = 100.0;

  // [gait]
  double trot_A_S_um = 175.0;
  double trot_A_L_um = 175.0;
  double pronk_A_S_um = 150.0;
  double pronk_A_L_um = 150.0;
  std::vector<double> freq_list_hz{10.0, 20.0, 30.0, 40.0, 50.0};
  std::vector<double> s1_list{50.0, 60.0, 70.0, 80.0};
  std::vector<double> s2_list{-75.0, -50.0, -25.0, 0.0, 25.0};
  std::vector<double> s3_list{20.0, 35.0, 50.0, 65.0, 80.0};
  int knots_per_period = 24;

  // [metrics]
  double step_length_mm = 4.7;
  double robot_mass_g = 1.43;
  int transient_strides = 2;

  // [harness]
  double sample_rate_hz = 2500.0;
  int trial_strides = 20;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int workers = 1;
  double validation_s1 = 70.0;
  double validation_s2 = 25.0;
  double validation_drive_v = 22.0;

  double dt() const { return 1.0 / sample_rate_hz; }

  PlantConfig plant() const { return PlantConfig{trans, kin, body}; }

  void validate() const {
    if (seed == 0) {
      throw ConfigError("config: harness.seed is mandatory and nonzero");
    }
    for (double f : freq_list_hz) {
      if (f < 10.0 - 1e-9 || f > 50.0 + 1e-9) {
        throw ConfigError("config: frequency outside the 10-50 Hz grid");
      }
    }
    for (double s : s1_list) {
      if (s < 50.0 || s > 80.0) throw ConfigError("config: S1 outside [50,80]");
    }
    for (double s : s2_list) {
      if (s < -75.0 || s > 25.0) {
        throw ConfigError("config: S2 outside [-75,25]");
      }
    }
    for (double s : s3_list) {
      if (s < 20.0 || s > 80.0) throw ConfigError("config: S3 outside [20,80]");
    }
    if (sample_rate_hz <= 0 || trial_strides < transient_strides + 1) {
      throw ConfigError("config: bad harness timing");
    }
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s;
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const char* c = item.c_str();
    char* end = nullptr;
    const double v = std::strtod(c, &end);
    if (end == c) throw ConfigError("config: bad number in list: " + item);
    out.push_back(v);
  }
  return out;
}

struct Binding {
  enum class Kind { real, integer, u64, text, list } kind;
  std::string section, key;
  void* ptr;
};

inline std::vector<Binding> bindings(ExperimentConfig& c) {
  using K = Binding::Kind;
  return {
      {K::real, "plant", "m_eff_g", &c.trans.m_eff},
      {K::real, "plant", "k1_mn_per_mm", &c.trans.k1},
      {K::real, "plant", "k3_mn_per_mm3", &c.trans.k3},
      {K::real, "plant", "b_mn_s_per_mm", &c.trans.b},
      {K::real, "plant", "b2_mn_s2_per_mm2", &c.trans.b2},
      {K::real, "plant", "k_bl_mn_per_mm2", &c.trans.k_bl},
      {K::real, "plant", "k_v_mn_per_v", &c.trans.k_v},
      {K::real, "plant", "v_bias_v", &c.trans.v_bias},
      {K::real, "plant", "q_max_mm", &c.trans.q_max},
      {K::real, "plant", "substep_max_s", &c.trans.h_max},
      {K::real, "plant", "kin_gain_x", &c.kin.gain_x},
      {K::real, "plant", "kin_gain_z", &c.kin.gain_z},
      {K::real, "plant", "kin_cross_x", &c.kin.cross_x},
      {K::real, "plant", "kin_cross_z", &c.kin.cross_z},
      {K::real, "plant", "kin_q_max_mm", &c.kin.q_max},
      {K::real, "plant", "body_mass_g", &c.body.mass},
      {K::real, "plant", "body_length_mm", &c.body.length},
      {K::real, "plant", "hip_x_mm", &c.body.hip_x},
      {K::real, "plant", "hip_drop_mm", &c.body.hip_drop},
      {K::real, "plant", "surface_height_mm", &c.surface.height},
      {K::real, "plant", "surface_k_n", &c.surface.k_n},
      {K::real, "plant", "surface_c_n", &c.surface.c_n},
      {K::real, "plant", "surface_mu", &c.surface.mu},
      {K::real, "plant", "surface_v_reg", &c.surface.v_reg},
      {K::real, "sensor", "alpha_mm_per_s_ma", &c.sensor.alpha},
      {K::real, "sensor", "r_kohm", &c.sensor.R},
      {K::real, "sensor", "c_nf", &c.sensor.C},
      {K::real, "sensor", "r_s_kohm", &c.sensor.R_s},
      {K::real, "sensor", "beta", &c.sensor.beta},
      {K::real, "sensor", "sigma_vm_v", &c.sigma_vm},
      {K::real, "sensor", "sigma_v_v", &c.sigma_v},
      {K::real, "sensor", "offset_vm_v", &c.offset_vm},
      {K::real, "sensor", "offset_v_v", &c.offset_v},
      {K::real, "sysid", "f_lo_hz", &c.sysid_f_lo},
      {K::real, "sysid", "f_hi_hz", &c.sysid_f_hi},
      {K::real, "sysid", "amplitude_v", &c.sysid_amplitude_v},
      {K::real, "sysid", "duration_s", &c.sysid_duration_s},
      {K::real, "controller", "k_p", &c.weights.k_p},
      {K::real, "controller", "k_d", &c.weights.k_d},
      {K::real, "controller", "k_u", &c.weights.k_u},
      {K::real, "controller", "v_min", &c.v_min},
      {K::real, "controller", "v_max", &c.v_max},
      {K::real, "gait", "trot_a_s_um", &c.trot_A_S_um},
      {K::real, "gait", "trot_a_l_um", &c.trot_A_L_um},
      {K::real, "gait", "pronk_a_s_um", &c.pronk_A_S_um},
      {K::real, "gait", "pronk_a_l_um", &c.pronk_A_L_um},
      {K::list, "gait", "freq_list_hz", &c.freq_list_hz},
      {K::list, "gait", "s1_list", &c.s1_list},
      {K::list, "gait", "s2_list", &c.s2_list},
      {K::list, "gait", "s3_list", &c.s3_list},
      {K::integer, "gait", "knots_per_period", &c.knots_per_period},
      {K::real, "metrics", "step_length_mm", &c.step_length_mm},
      {K::real, "metrics", "robot_mass_g", &c.robot_mass_g},
      {K::integer, "metrics", "transient_strides", &c.transient_strides},
      {K::real, "harness", "sample_rate_hz", &c.sample_rate_hz},
      {K::integer, "harness", "trial_strides", &c.trial_strides},
      {K::u64, "harness", "seed", &c.seed},
      {K::text, "harness", "out_dir", &c.out_dir},
      {K::integer, "harness", "workers", &c.workers},
      {K::real, "harness", "validation_s1", &c.validation_s1},
      {K::real, "harness", "validation_s2", &c.validation_s2},
      {K::real, "harness", "validation_drive_v", &c.validation_drive_v},
  };
}

}  // namespace detail

inline void save_config(const ExperimentConfig& cfg_in,
                        const std::string& path) {
  ExperimentConfig cfg = cfg_in;  // bindings want a mutable object
  std::ofstream out(path);
  if (!out) throw ConfigError("save_config: cannot open " + path);
  std::string section;
  for (const auto& b : detail::bindings(cfg)) {
    if (b.section != section) {
      if (!section.empty()) out << "\n";
      out << "[" << b.section << "]\n";
      section = b.section;
    }
    out << b.key << " = ";
    switch (b.kind) {
      case detail::Binding::Kind::real:
        out << detail::format_double(*static_cast<double*>(b.ptr));
        break;
      case detail::Binding::Kind::integer:
        out << *static_cast<int*>(b.ptr);
        break;
      case detail::Binding::Kind::u64:
        out << *static_cast<std::uint64_t*>(b.ptr);
        break;
      case detail::Binding::Kind::text:
        out << *static_cast<std::string*>(b.ptr);
        break;
      case detail::Binding::Kind::list:
        out << detail::format_list(
            *static_cast<std::vector<double>*>(b.ptr));
        break;
    }
    out << "\n";
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_config: cannot open " + path);

  std::map<std::string, std::string> kv;
  std::string line, section;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("load_config: bad line: " + line);
    }
    kv[section + "." + trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  ExperimentConfig cfg;
  bool seed_seen = false;
  for (const auto& b : detail::bindings(cfg)) {
    const auto it = kv.find(b.section + "." + b.key);
    if (it == kv.end()) continue;
    const std::string& v = it->second;
    switch (b.kind) {
      case detail::Binding::Kind::real:
        *static_cast<double*>(b.ptr) = std::strtod(v.c_str(), nullptr);
        break;
      case detail::Binding::Kind::integer:
        *static_cast<int*>(b.ptr) = std::atoi(v.c_str());
        break;
      case detail::Binding::Kind::u64:
        *static_cast<std::uint64_t*>(b.ptr) =
            std::strtoull(v.c_str(), nullptr, 10);
        seed_seen = true;
        break;
      case detail::Binding::Kind::text:
        *static_cast<std::string*>(b.ptr) = v;
        break;
      case detail::Binding::Kind::list:
        *static_cast<std::vector<double>*>(b.ptr) = detail::parse_list(v);
        break;
    }
  }
  if (!seed_seen) {
    throw ConfigError("load_config: harness.seed is mandatory");
  }
  cfg.validate();
  return cfg;
}

}  // namespace proprio
