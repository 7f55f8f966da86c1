#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "proprio/errors.hpp"
#include "proprio/metrics.hpp"

namespace proprio {

namespace detail {

inline std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::string fmt_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline const char* kLegNames[4] = {"fl", "fr", "rl", "rr"};

}  // namespace detail

/// Columnar text trace, one row per control tick. The header line names
/// every column; body columns first, then 24 columns per leg.
inline void write_trace(const TrialTrace& tr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("write_trace: cannot open " + path);
  out << "# gait=" << to_string(tr.gait.gait)
      << " stride_samples=" << tr.stride_samples << " dt="
      << detail::fmt_exact(tr.dt) << " transient_strides="
      << tr.transient_strides << "\n";
  out << "t x_b z_b th_b vx_b vz_b om_b";
  for (const char* leg : detail::kLegNames) {
    for (const char* col :
         {"q_s", "qd_s", "q_l", "qd_l", "est_q_s", "est_qd_s", "est_q_l",
          "est_qd_l", "ref_q_s", "ref_qd_s", "ref_q_l", "ref_qd_l", "cmd_v_s",
          "cmd_v_l", "vm_s", "vm_l", "v_s", "v_l", "im_s", "im_l", "tip_x",
          "tip_z", "tip_vx", "contact"}) {
      out << " " << leg << "_" << col;
    }
  }
  out << "\n";
  for (std::size_t k = 0; k < tr.size(); ++k) {
    out << detail::fmt_short(tr.t[k]) << " " << detail::fmt_short(tr.x_b[k])
        << " " << detail::fmt_short(tr.z_b[k]) << " "
        << detail::fmt_short(tr.th_b[k]) << " "
        << detail::fmt_short(tr.vx_b[k]) << " "
        << detail::fmt_short(tr.vz_b[k]) << " "
        << detail::fmt_short(tr.om_b[k]);
    for (const LegSeries& leg : tr.legs) {
      for (const std::vector<double>* col :
           {&leg.q_s, &leg.qd_s, &leg.q_l, &leg.qd_l, &leg.est_q_s,
            &leg.est_qd_s, &leg.est_q_l, &leg.est_qd_l, &leg.ref_q_s,
            &leg.ref_qd_s, &leg.ref_q_l, &leg.ref_qd_l, &leg.cmd_v_s,
            &leg.cmd_v_l, &leg.vm_s, &leg.vm_l, &leg.v_s, &leg.v_l,
            &leg.im_s, &leg.im_l, &leg.tip_x, &leg.tip_z, &leg.tip_vx}) {
        out << " " << detail::fmt_short((*col)[k]);
      }
      out << " " << static_cast<int>(leg.contact[k]);
    }
    out << "\n";
  }
}

/// One row of the sweep CSV. Schema:
/// trial_id,gait,f_hz,S1,S2,S3,nu,sigma,epsilon,cot,E_est_swing,E_est_lift,
/// E_cont_swing,E_cont_lift,flags
struct SweepRow {
  int trial_id = 0;
  std::string gait;
  double f_hz = 0.0, S1 = 0.0, S2 = 0.0, S3 = 0.0;
  double nu = 0.0, sigma = 0.0, epsilon = 0.0, cot = 0.0;
  double E_est_swing = 0.0, E_est_lift = 0.0;
  double E_cont_swing = 0.0, E_cont_lift = 0.0;
  std::string flags = "-";
};

inline const char* sweep_csv_header() {
  return "trial_id,gait,f_hz,S1,S2,S3,nu,sigma,epsilon,cot,E_est_swing,"
         "E_est_lift,E_cont_swing,E_cont_lift,flags";
}

inline std::string to_csv_line(const SweepRow& r) {
  std::ostringstream os;
  os << r.trial_id << "," << r.gait << "," << detail::fmt_exact(r.f_hz) << ","
     << detail::fmt_exact(r.S1) << "," << detail::fmt_exact(r.S2) << ","
     << detail::fmt_exact(r.S3) << "," << detail::fmt_exact(r.nu) << ","
     << detail::fmt_exact(r.sigma) << "," << detail::fmt_exact(r.epsilon)
     << "," << detail::fmt_exact(r.cot) << ","
     << detail::fmt_exact(r.E_est_swing) << ","
     << detail::fmt_exact(r.E_est_lift) << ","
     << detail::fmt_exact(r.E_cont_swing) << ","
     << detail::fmt_exact(r.E_cont_lift) << "," << r.flags;
  return os.str();
}

inline SweepRow parse_csv_line(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) f.push_back(item);
  if (f.size() != 15) {
    throw ConfigError("parse_csv_line: expected 15 fields: " + line);
  }
  SweepRow r;
  r.trial_id = std::atoi(f[0].c_str());
  r.gait = f[1];
  r.f_hz = std::strtod(f[2].c_str(), nullptr);
  r.S1 = std::strtod(f[3].c_str(), nullptr);
  r.S2 = std::strtod(f[4].c_str(), nullptr);
  r.S3 = std::strtod(f[5].c_str(), nullptr);
  r.nu = std::strtod(f[6].c_str(), nullptr);
  r.sigma = std::strtod(f[7].c_str(), nullptr);
  r.epsilon = std::strtod(f[8].c_str(), nullptr);
  r.cot = std::strtod(f[9].c_str(), nullptr);
  r.E_est_swing = std::strtod(f[10].c_str(), nullptr);
  r.E_est_lift = std::strtod(f[11].c_str(), nullptr);
  r.E_cont_swing = std::strtod(f[12].c_str(), nullptr);
  r.E_cont_lift = std::strtod(f[13].c_str(), nullptr);
  r.flags = f[14];
  return r;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("write_sweep_csv: cannot open " + path);
  out << sweep_csv_header() << "\n";
  for (const SweepRow& r : rows) out << to_csv_line(r) << "\n";
}

inline std::vector<SweepRow> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("read_sweep_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != sweep_csv_header()) {
    throw ConfigError("read_sweep_csv: bad header in " + path);
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_csv_line(line));
  }
  return rows;
}

}  // namespace proprio
