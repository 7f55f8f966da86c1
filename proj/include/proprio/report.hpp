#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "proprio/trace.hpp"

namespace proprio {

/// Best-performing trial per gait and stride frequency, after averaging
/// rows with identical parameters across the input sweeps (so several
/// robots' sweeps can be pooled).
struct ReportRow {
  std::string gait;
  double f_hz = 0.0;
  double S1 = 0.0, S2 = 0.0, S3 = 0.0;
  double nu = 0.0, sigma = 0.0, epsilon = 0.0, cot = 0.0;
  int n_sweeps = 0;
};

inline std::vector<ReportRow> build_report(
    const std::vector<std::vector<SweepRow>>& sweeps) {
  using Key = std::tuple<std::string, double, double, double, double>;
  struct Acc {
    double nu = 0, sigma = 0, eps = 0;
    int n = 0;
  };
  std::map<Key, Acc> pooled;
  for (const auto& rows : sweeps) {
    for (const SweepRow& r : rows) {
      if (std::isnan(r.nu)) continue;
      Acc& a = pooled[{r.gait, r.f_hz, r.S1, r.S2, r.S3}];
      a.nu += r.nu;
      a.sigma += r.sigma;
      a.eps += r.epsilon;
      a.n += 1;
    }
  }
  std::map<std::pair<std::string, double>, ReportRow> best;
  for (const auto& [key, acc] : pooled) {
    ReportRow row;
    row.gait = std::get<0>(key);
    row.f_hz = std::get<1>(key);
    row.S1 = std::get<2>(key);
    row.S2 = std::get<3>(key);
    row.S3 = std::get<4>(key);
    row.nu = acc.nu / acc.n;
    row.sigma = acc.sigma / acc.n;
    row.epsilon = acc.eps / acc.n;
    row.cot = row.epsilon > 0.0 ? 1.0 / row.epsilon
                                : std::numeric_limits<double>::quiet_NaN();
    row.n_sweeps = acc.n;
    const auto k = std::make_pair(row.gait, row.f_hz);
    const auto it = best.find(k);
    if (it == best.end() || row.nu > it->second.nu) best[k] = row;
  }
  std::vector<ReportRow> out;
  for (const auto& [k, v] : best) out.push_back(v);
  std::sort(out.begin(), out.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.gait, a.f_hz) < std::tie(b.gait, b.f_hz);
  });
  return out;
}

inline void write_report_csv(const std::vector<ReportRow>& rows,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("write_report_csv: cannot open " + path);
  out << "gait,f_hz,S1,S2,S3,nu,sigma,epsilon,cot,n_sweeps\n";
  for (const ReportRow& r : rows) {
    out << r.gait << "," << detail::fmt_exact(r.f_hz) << ","
        << detail::fmt_exact(r.S1) << "," << detail::fmt_exact(r.S2) << ","
        << detail::fmt_exact(r.S3) << "," << detail::fmt_exact(r.nu) << ","
        << detail::fmt_exact(r.sigma) << "," << detail::fmt_exact(r.epsilon)
        << "," << detail::fmt_exact(r.cot) << "," << r.n_sweeps << "\n";
  }
}

inline std::string format_report_table(const std::vector<ReportRow>& rows) {
  std::string s;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-14s %6s %5s %5s %5s %8s %8s %8s %8s\n",
                "gait", "f_hz", "S1", "S2", "S3", "nu", "sigma", "eps",
                "cot");
  s += buf;
  for (const ReportRow& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%-14s %6.0f %5.0f %5.0f %5.0f %8.3f %8.3f %8.3f %8.2f\n",
                  r.gait.c_str(), r.f_hz, r.S1, r.S2, r.S3, r.nu, r.sigma,
                  r.epsilon, r.cot);
    s += buf;
  }
  return s;
}

}  // namespace proprio
