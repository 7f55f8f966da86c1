#pragma once

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "proprio/pipeline.hpp"
#include "proprio/trace.hpp"
#include "proprio/trial.hpp"

namespace proprio {

struct GridEntry {
  int trial_id = 0;
  GaitParams gait;
};

/// Full factorial grid per the trajectory-design table: stride period x
/// retraction period x (adduction level | adduction period).
inline std::vector<GridEntry> make_grid(const ExperimentConfig& cfg,
                                        GaitKind gait) {
  if (gait != GaitKind::trot && gait != GaitKind::pronk) {
    throw ConfigError("make_grid: sweeps cover trot and pronk only");
  }
  std::vector<GridEntry> grid;
  int id = 0;
  const std::vector<double>& shape2 =
      gait == GaitKind::trot ? cfg.s2_list : cfg.s3_list;
  for (double f : cfg.freq_list_hz) {
    for (double s1 : cfg.s1_list) {
      for (double s2 : shape2) {
        GridEntry e;
        e.trial_id = id++;
        e.gait.gait = gait;
        e.gait.T = 1.0 / f;
        e.gait.S1 = s1;
        if (gait == GaitKind::trot) {
          e.gait.S2 = s2;
          e.gait.A_S_um = cfg.trot_A_S_um;
          e.gait.A_L_um = cfg.trot_A_L_um;
        } else {
          e.gait.S3 = s2;
          e.gait.A_S_um = cfg.pronk_A_S_um;
          e.gait.A_L_um = cfg.pronk_A_L_um;
        }
        grid.push_back(e);
      }
    }
  }
  return grid;
}

struct BestByFrequency {
  std::string gait;
  double f_hz = 0.0;
  int trial_id = -1;
  double nu = 0.0, sigma = 0.0, epsilon = 0.0;
  BaselineRms rms;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<BestByFrequency> best;
  int failures = 0;
};

namespace detail {

inline std::string trial_row_path(const std::string& dir, int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trial_%03d.row", id);
  return dir + "/rows/" + buf;
}

inline std::string trial_rms_path(const std::string& dir, int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trial_%03d.rms", id);
  return dir + "/rows/" + buf;
}

inline std::string trial_trace_path(const std::string& dir, int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trial_%03d.trace", id);
  return dir + "/traces/" + buf;
}

inline SweepRow make_row(const GridEntry& e, double f_nominal,
                         const MetricsRecord& m) {
  SweepRow r;
  r.trial_id = e.trial_id;
  r.gait = to_string(e.gait.gait);
  r.f_hz = f_nominal;
  r.S1 = e.gait.S1;
  r.S2 = e.gait.gait == GaitKind::trot ? e.gait.S2 : 0.0;
  r.S3 = e.gait.gait == GaitKind::pronk ? e.gait.S3 : 0.0;
  r.nu = m.nu;
  r.sigma = m.sigma;
  r.epsilon = m.epsilon;
  r.cot = m.cot;
  r.E_est_swing = m.E_est_swing;
  r.E_est_lift = m.E_est_lift;
  r.E_cont_swing = m.E_cont_swing;
  r.E_cont_lift = m.E_cont_lift;
  r.flags = m.flag_string();
  return r;
}

}  // namespace detail

/// Runs (or resumes) the full grid for one gait. Each trial writes its CSV
/// row, its commanded-voltage RMS and its trace under out_dir; the final
/// CSV is assembled from the row files in trial order, so worker count and
/// resume history cannot change a byte of it.
inline SweepResult run_sweep(const ExperimentConfig& cfg,
                             const ModelFile& model,
                             const CalibrationFile& cal, GaitKind gait,
                             const std::string& out_dir, int workers) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir + "/rows");
  fs::create_directories(out_dir + "/traces");

  const std::vector<GridEntry> grid = make_grid(cfg, gait);
  const RobotState stance = settled_stance(cfg);

  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      const GridEntry& e = grid[i];
      const std::string row_path = detail::trial_row_path(out_dir, e.trial_id);
      const std::string rms_path = detail::trial_rms_path(out_dir, e.trial_id);
      if (fs::exists(row_path) && fs::exists(rms_path)) continue;
      try {
        TrialSetup setup;
        setup.trial_id = e.trial_id;
        setup.gait = e.gait;
        setup.mode = TrialMode::closed_loop;
        setup.env = Environment::on_ground;
        setup.seed = derive_seed(cfg.seed,
                                 static_cast<std::uint64_t>(e.trial_id));
        SweepRow row;
        BaselineRms rms;
        try {
          const TrialRecord rec = run_trial(cfg, model, cal, setup, &stance);
          row = detail::make_row(e, 1.0 / e.gait.T, rec.metrics);
          rms = rec.commanded_rms;
          write_trace(rec.trace, detail::trial_trace_path(out_dir, e.trial_id));
        } catch (const Divergence&) {
          MetricsRecord m;
          m.diverged = true;
          m.nu = m.sigma = m.epsilon = m.cot =
              std::numeric_limits<double>::quiet_NaN();
          row = detail::make_row(e, 1.0 / e.gait.T, m);
          failures.fetch_add(1);
        }
        {
          std::ofstream out(row_path);
          out << to_csv_line(row) << "\n";
        }
        {
          std::ofstream out(rms_path);
          out << detail::fmt_exact(rms.all) << " "
              << detail::fmt_exact(rms.swing) << " "
              << detail::fmt_exact(rms.lift) << "\n";
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  const int n_workers = std::max(1, workers);
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  // Assemble strictly from the row files, in trial order.
  SweepResult result;
  result.failures = failures.load();
  for (const GridEntry& e : grid) {
    std::ifstream in(detail::trial_row_path(out_dir, e.trial_id));
    std::string line;
    if (!in || !std::getline(in, line)) {
      throw ConfigError("run_sweep: missing row for trial " +
                        std::to_string(e.trial_id));
    }
    result.rows.push_back(parse_csv_line(line));
  }
  write_sweep_csv(result.rows, out_dir + "/sweep.csv");

  // Best-by-frequency summary, the handoff to the sinusoid baselines.
  for (double f : cfg.freq_list_hz) {
    BestByFrequency best;
    best.gait = to_string(gait);
    best.f_hz = f;
    for (const SweepRow& r : result.rows) {
      if (std::abs(r.f_hz - f) > 1e-9 || std::isnan(r.nu)) continue;
      if (best.trial_id < 0 || r.nu > best.nu) {
        best.trial_id = r.trial_id;
        best.nu = r.nu;
        best.sigma = r.sigma;
        best.epsilon = r.epsilon;
      }
    }
    if (best.trial_id >= 0) {
      std::ifstream in(detail::trial_rms_path(out_dir, best.trial_id));
      in >> best.rms.all >> best.rms.swing >> best.rms.lift;
    }
    result.best.push_back(best);
  }
  {
    std::ofstream out(out_dir + "/best_by_frequency.csv");
    out << "gait,f_hz,trial_id,nu,sigma,epsilon,rms_all,rms_swing,rms_lift\n";
    for (const BestByFrequency& b : result.best) {
      out << b.gait << "," << detail::fmt_exact(b.f_hz) << "," << b.trial_id
          << "," << detail::fmt_exact(b.nu) << ","
          << detail::fmt_exact(b.sigma) << ","
          << detail::fmt_exact(b.epsilon) << ","
          << detail::fmt_exact(b.rms.all) << ","
          << detail::fmt_exact(b.rms.swing) << ","
          << detail::fmt_exact(b.rms.lift) << "\n";
    }
  }
  return result;
}

inline std::vector<BestByFrequency> read_best_by_frequency(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingBaselineData("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<BestByFrequency> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 9) throw MissingBaselineData("bad summary line: " + line);
    BestByFrequency b;
    b.gait = f[0];
    b.f_hz = std::strtod(f[1].c_str(), nullptr);
    b.trial_id = std::atoi(f[2].c_str());
    b.nu = std::strtod(f[3].c_str(), nullptr);
    b.sigma = std::strtod(f[4].c_str(), nullptr);
    b.epsilon = std::strtod(f[5].c_str(), nullptr);
    b.rms.all = std::strtod(f[6].c_str(), nullptr);
    b.rms.swing = std::strtod(f[7].c_str(), nullptr);
    b.rms.lift = std::strtod(f[8].c_str(), nullptr);
    out.push_back(b);
  }
  return out;
}

/// Voltage-matched sinusoid baseline trials, one per grid frequency, fed
/// by the sweep's best-by-frequency RMS voltages.
inline SweepResult run_baseline(const ExperimentConfig& cfg,
                                const ModelFile& model,
                                const CalibrationFile& cal, GaitKind base,
                                TrialMode matching,
                                const std::vector<BestByFrequency>& summary,
                                const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (matching != TrialMode::open_loop_coupled &&
      matching != TrialMode::open_loop_decoupled) {
    throw ConfigError("run_baseline: matching must be a sinusoid mode");
  }
  fs::create_directories(out_dir + "/traces");
  const RobotState stance = settled_stance(cfg);

  SweepResult result;
  int id = 0;
  for (double f : cfg.freq_list_hz) {
    const BestByFrequency* src = nullptr;
    for (const BestByFrequency& b : summary) {
      if (std::abs(b.f_hz - f) < 1e-9) src = &b;
    }
    if (src == nullptr || src->trial_id < 0) {
      throw MissingBaselineData("run_baseline: no sweep data at frequency");
    }
    GridEntry e;
    e.trial_id = id;
    e.gait.gait = base;
    e.gait.T = 1.0 / f;
    if (base == GaitKind::pronk) {
      e.gait.A_S_um = cfg.pronk_A_S_um;
      e.gait.A_L_um = cfg.pronk_A_L_um;
      e.gait.S1 = 50.0;
    }

    TrialSetup setup;
    setup.trial_id = id;
    setup.gait = e.gait;
    setup.mode = matching;
    setup.env = Environment::on_ground;
    setup.rms = src->rms;
    setup.seed = derive_seed(cfg.seed, 5000 + static_cast<std::uint64_t>(id));
    try {
      const TrialRecord rec = run_trial(cfg, model, cal, setup, &stance);
      SweepRow row = detail::make_row(e, f, rec.metrics);
      row.gait = to_string(matching == TrialMode::open_loop_coupled
                               ? GaitKind::coupled_sine
                               : GaitKind::decoupled_sine);
      result.rows.push_back(row);
      write_trace(rec.trace, detail::trial_trace_path(out_dir, id));
    } catch (const Divergence&) {
      MetricsRecord m;
      m.diverged = true;
      m.nu = m.sigma = m.epsilon = m.cot =
          std::numeric_limits<double>::quiet_NaN();
      SweepRow row = detail::make_row(e, f, m);
      result.rows.push_back(row);
      ++result.failures;
    }
    ++id;
  }
  write_sweep_csv(result.rows, out_dir + "/baseline.csv");
  return result;
}

}  // namespace proprio
