#pragma once

#include <Eigen/Dense>
#include <array>
#include <fstream>
#include <string>

#include <json.hpp>

#include "proprio/controller.hpp"
#include "proprio/errors.hpp"
#include "proprio/estimator.hpp"
#include "proprio/sensor.hpp"
#include "proprio/sysid.hpp"

namespace proprio {

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  j["data"] = data;  // row major
  return j;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw MissingModel("model file: matrix size mismatch");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++];
  }
  return m;
}

}  // namespace detail

/// Calibration output for one actuator channel.
struct ActuatorCalibration {
  double alpha = 0.0;       // mm/s per mA
  double offset_vm = 0.0;   // V, subtracted from V_m
  double offset_v = 0.0;    // V, subtracted from V
  Eigen::Matrix2d N_H = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d N_D = Eigen::Matrix2d::Zero();
};

/// Per-robot calibration: 4 transmissions x (swing, lift).
struct CalibrationFile {
  std::array<std::array<ActuatorCalibration, 2>, 4> legs;
  std::uint64_t seed = 0;
};

/// Identified models plus everything the constant-gain loop precomputes.
struct ModelFile {
  std::array<ProcessModel, 4> process;
  std::array<MeasurementModel, 4> measurement;
  std::array<AugmentedSystem, 4> augmented;
  std::array<KalmanGain, 4> kalman_gain;
  std::array<Eigen::Matrix<double, 2, 4>, 4> lqr_gain{};
  CostWeights weights;
  double dt = 4e-4;
  std::uint64_t seed = 0;
};

inline void save_calibration(const CalibrationFile& cal,
                             const std::string& path) {
  nlohmann::json j;
  j["seed"] = cal.seed;
  for (const auto& leg : cal.legs) {
    nlohmann::json jl;
    for (const auto& ch : leg) {
      nlohmann::json jc;
      jc["alpha"] = ch.alpha;
      jc["offset_vm"] = ch.offset_vm;
      jc["offset_v"] = ch.offset_v;
      jc["N_H"] = detail::matrix_to_json(ch.N_H);
      jc["N_D"] = detail::matrix_to_json(ch.N_D);
      jl.push_back(jc);
    }
    j["legs"].push_back(jl);
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("save_calibration: cannot open " + path);
  out << j.dump(2) << "\n";
}

inline CalibrationFile load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingModel("load_calibration: cannot open " + path);
  nlohmann::json j;
  in >> j;
  CalibrationFile cal;
  cal.seed = j.value("seed", 0ull);
  const auto& legs = j.at("legs");
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t a = 0; a < 2; ++a) {
      const auto& jc = legs.at(i).at(a);
      ActuatorCalibration& ch = cal.legs[i][a];
      ch.alpha = jc.at("alpha").get<double>();
      ch.offset_vm = jc.at("offset_vm").get<double>();
      ch.offset_v = jc.at("offset_v").get<double>();
      ch.N_H = detail::matrix_from_json(jc.at("N_H"));
      ch.N_D = detail::matrix_from_json(jc.at("N_D"));
    }
  }
  return cal;
}

inline void save_model(const ModelFile& m, const std::string& path) {
  nlohmann::json j;
  j["dt"] = m.dt;
  j["seed"] = m.seed;
  j["weights"] = {{"k_p", m.weights.k_p},
                  {"k_d", m.weights.k_d},
                  {"k_u", m.weights.k_u}};
  for (std::size_t i = 0; i < 4; ++i) {
    nlohmann::json jt;
    jt["A_p"] = detail::matrix_to_json(m.process[i].A_p);
    jt["B_p"] = detail::matrix_to_json(m.process[i].B_p);
    jt["W_p"] = detail::matrix_to_json(m.process[i].W_p);
    jt["x0"] = detail::matrix_to_json(m.process[i].x0);
    jt["u0"] = detail::matrix_to_json(m.process[i].u0);
    jt["dt"] = m.process[i].dt;
    jt["seed"] = m.process[i].seed;
    jt["H_m"] = detail::matrix_to_json(m.measurement[i].H_m);
    jt["D_m"] = detail::matrix_to_json(m.measurement[i].D_m);
    jt["N_m"] = detail::matrix_to_json(m.measurement[i].N_m);
    jt["A"] = detail::matrix_to_json(m.augmented[i].A);
    jt["B"] = detail::matrix_to_json(m.augmented[i].B);
    jt["H"] = detail::matrix_to_json(m.augmented[i].H);
    jt["D"] = detail::matrix_to_json(m.augmented[i].D);
    jt["W"] = detail::matrix_to_json(m.augmented[i].W);
    jt["N"] = detail::matrix_to_json(m.augmented[i].N);
    jt["K"] = detail::matrix_to_json(m.kalman_gain[i]);
    jt["L"] = detail::matrix_to_json(m.lqr_gain[i]);
    j["transmissions"].push_back(jt);
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("save_model: cannot open " + path);
  out << j.dump(2) << "\n";
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingModel("load_model: cannot open " + path);
  nlohmann::json j;
  in >> j;
  ModelFile m;
  m.dt = j.at("dt").get<double>();
  m.seed = j.value("seed", 0ull);
  m.weights.k_p = j.at("weights").at("k_p").get<double>();
  m.weights.k_d = j.at("weights").at("k_d").get<double>();
  m.weights.k_u = j.at("weights").at("k_u").get<double>();
  const auto& ts = j.at("transmissions");
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& jt = ts.at(i);
    m.process[i].A_p = detail::matrix_from_json(jt.at("A_p"));
    m.process[i].B_p = detail::matrix_from_json(jt.at("B_p"));
    m.process[i].W_p = detail::matrix_from_json(jt.at("W_p"));
    m.process[i].x0 = detail::matrix_from_json(jt.at("x0"));
    m.process[i].u0 = detail::matrix_from_json(jt.at("u0"));
    m.process[i].dt = jt.at("dt").get<double>();
    m.process[i].seed = jt.value("seed", 0ull);
    m.measurement[i].H_m = detail::matrix_from_json(jt.at("H_m"));
    m.measurement[i].D_m = detail::matrix_from_json(jt.at("D_m"));
    m.measurement[i].N_m = detail::matrix_from_json(jt.at("N_m"));
    m.augmented[i].A = detail::matrix_from_json(jt.at("A"));
    m.augmented[i].B = detail::matrix_from_json(jt.at("B"));
    m.augmented[i].H = detail::matrix_from_json(jt.at("H"));
    m.augmented[i].D = detail::matrix_from_json(jt.at("D"));
    m.augmented[i].W = detail::matrix_from_json(jt.at("W"));
    m.augmented[i].N = detail::matrix_from_json(jt.at("N"));
    m.kalman_gain[i] = detail::matrix_from_json(jt.at("K"));
    m.lqr_gain[i] = detail::matrix_from_json(jt.at("L"));
  }
  return m;
}

}  // namespace proprio
