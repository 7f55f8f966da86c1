// Batch experiment driver: calibration, identification, estimator and
// controller validation, gait-grid sweeps, sinusoid baselines and report
// aggregation for the simulated legged platform.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <cxxabi.h>

#include <CLI11.hpp>

#include "proprio/calibrate.hpp"
#include "proprio/config.hpp"
#include "proprio/model_io.hpp"
#include "proprio/pipeline.hpp"
#include "proprio/report.hpp"
#include "proprio/sweep.hpp"
#include "proprio/trace.hpp"

namespace fs = std::filesystem;

namespace {

// Bad invocations (no config, unreadable config) exit 2 with usage help;
// failures inside a correctly invoked run exit 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalOpts {
  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  int workers_override = 0;
};

proprio::ExperimentConfig load_cfg(const GlobalOpts& g) {
  if (g.config_path.empty()) {
    throw UsageError("a --config file is required");
  }
  if (!fs::exists(g.config_path)) {
    throw UsageError("config file not found: " + g.config_path);
  }
  proprio::ExperimentConfig cfg = proprio::load_config(g.config_path);
  if (g.seed_override != 0) cfg.seed = g.seed_override;
  if (g.workers_override > 0) cfg.workers = g.workers_override;
  if (!g.out_override.empty()) {
    cfg.out_dir = g.out_override;
  } else if (const char* env = std::getenv("PROPRIO_OUT")) {
    cfg.out_dir = env;
  }
  fs::create_directories(cfg.out_dir);
  return cfg;
}

proprio::CalibrationFile need_calibration(const proprio::ExperimentConfig& c) {
  return proprio::load_calibration(c.out_dir + "/calibration.json");
}

proprio::ModelFile need_model(const proprio::ExperimentConfig& c) {
  return proprio::load_model(c.out_dir + "/model.json");
}

void write_validation_csv(const std::vector<proprio::ValidationPoint>& pts,
                          const std::string& path) {
  std::ofstream out(path);
  out << "f_hz,env,swing,lift\n";
  for (const auto& p : pts) {
    out << p.f_hz << ","
        << (p.env == proprio::Environment::in_air ? "in_air" : "on_ground")
        << "," << proprio::detail::fmt_exact(p.swing) << ","
        << proprio::detail::fmt_exact(p.lift) << "\n";
  }
}

void print_validation(const char* title,
                      const std::vector<proprio::ValidationPoint>& pts) {
  std::printf("%s\n%6s %-10s %8s %8s\n", title, "f_hz", "env", "swing",
              "lift");
  for (const auto& p : pts) {
    std::printf("%6.0f %-10s %8.4f %8.4f\n", p.f_hz,
                p.env == proprio::Environment::in_air ? "in_air"
                                                      : "on_ground",
                p.swing, p.lift);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"proprio: estimation, control and gait experiments for a "
               "simulated piezo-driven quadruped"};
  app.require_subcommand(0, 1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOpts g;
  app.add_option("--config", g.config_path, "experiment config file");
  app.add_option("--seed", g.seed_override, "override the config seed");
  app.add_option("--out", g.out_override, "override the output directory");
  app.add_option("--workers", g.workers_override, "override worker count");
  std::string default_config_path;
  app.add_option("--write-default-config", default_config_path,
                 "write the built-in default config to PATH and exit");

  auto* cmd_cal = app.add_subcommand("calibrate",
                                     "measure sensor offsets, noise and "
                                     "velocity scaling");
  auto* cmd_id = app.add_subcommand("identify",
                                    "fit process models and precompute "
                                    "filter and controller gains");
  auto* cmd_ve = app.add_subcommand("validate-estimator",
                                    "estimation error vs frequency, in air "
                                    "and on ground");
  auto* cmd_vc = app.add_subcommand("validate-controller",
                                    "tracking error vs frequency, in air "
                                    "and on ground");
  auto* cmd_sweep = app.add_subcommand("sweep",
                                       "run the 100-trial gait grid");
  std::string sweep_gait = "trot";
  cmd_sweep->add_option("--gait", sweep_gait, "trot or pronk")
      ->check(CLI::IsMember({"trot", "pronk"}));
  auto* cmd_base = app.add_subcommand("baseline",
                                      "voltage-matched sinusoid baseline "
                                      "trials");
  std::string matching = "coupled";
  std::string base_gait = "trot";
  cmd_base->add_option("--matching", matching, "coupled or decoupled")
      ->check(CLI::IsMember({"coupled", "decoupled"}));
  cmd_base->add_option("--gait", base_gait, "gait whose sweep feeds the "
                       "baseline")
      ->check(CLI::IsMember({"trot", "pronk"}));
  auto* cmd_rep = app.add_subcommand("report",
                                     "aggregate sweep CSVs into "
                                     "best-per-frequency tables");
  std::vector<std::string> report_inputs;
  cmd_rep->add_option("--in", report_inputs,
                      "sweep directories or CSV files (repeatable); "
                      "defaults to the trot and pronk sweeps under --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    if (!default_config_path.empty()) {
      proprio::ExperimentConfig cfg;
      cfg.seed = 12345;
      proprio::save_config(cfg, default_config_path);
      std::printf("wrote %s\n", default_config_path.c_str());
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 2;
    }

    if (cmd_cal->parsed()) {
      const auto cfg = load_cfg(g);
      const auto cal = proprio::calibrate(cfg, cfg.seed);
      proprio::save_calibration(cal, cfg.out_dir + "/calibration.json");
      std::printf("calibration written to %s/calibration.json\n",
                  cfg.out_dir.c_str());
      for (int leg = 0; leg < 4; ++leg) {
        std::printf("  leg %d alpha: swing %.4f lift %.4f mm/s/mA\n", leg,
                    cal.legs[static_cast<std::size_t>(leg)][0].alpha,
                    cal.legs[static_cast<std::size_t>(leg)][1].alpha);
      }
    } else if (cmd_id->parsed()) {
      const auto cfg = load_cfg(g);
      const auto cal = need_calibration(cfg);
      const auto model = proprio::identify(cfg, cal);
      proprio::save_model(model, cfg.out_dir + "/model.json");
      std::printf("model written to %s/model.json\n", cfg.out_dir.c_str());
      for (int i = 0; i < 4; ++i) {
        std::printf("  leg %d rho(A_p) = %.6f\n", i,
                    proprio::spectral_radius(
                        model.process[static_cast<std::size_t>(i)].A_p));
      }
    } else if (cmd_ve->parsed()) {
      const auto cfg = load_cfg(g);
      const auto pts =
          proprio::validate_estimator(cfg, need_model(cfg),
                                      need_calibration(cfg));
      write_validation_csv(pts, cfg.out_dir + "/validate_estimator.csv");
      print_validation("normalized estimation error (E_est)", pts);
    } else if (cmd_vc->parsed()) {
      const auto cfg = load_cfg(g);
      const auto pts =
          proprio::validate_controller(cfg, need_model(cfg),
                                       need_calibration(cfg));
      write_validation_csv(pts, cfg.out_dir + "/validate_controller.csv");
      print_validation("normalized tracking error (E_cont)", pts);
    } else if (cmd_sweep->parsed()) {
      const auto cfg = load_cfg(g);
      const proprio::GaitKind gait = sweep_gait == "trot"
                                         ? proprio::GaitKind::trot
                                         : proprio::GaitKind::pronk;
      const std::string dir = cfg.out_dir + "/sweep_" + sweep_gait;
      const auto res = proprio::run_sweep(cfg, need_model(cfg),
                                          need_calibration(cfg), gait, dir,
                                          cfg.workers);
      std::printf("%zu trials -> %s/sweep.csv (%d diverged)\n",
                  res.rows.size(), dir.c_str(), res.failures);
    } else if (cmd_base->parsed()) {
      const auto cfg = load_cfg(g);
      const proprio::GaitKind gait = base_gait == "trot"
                                         ? proprio::GaitKind::trot
                                         : proprio::GaitKind::pronk;
      const auto mode = matching == "coupled"
                            ? proprio::TrialMode::open_loop_coupled
                            : proprio::TrialMode::open_loop_decoupled;
      const auto summary = proprio::read_best_by_frequency(
          cfg.out_dir + "/sweep_" + base_gait + "/best_by_frequency.csv");
      const std::string dir =
          cfg.out_dir + "/baseline_" + matching + "_" + base_gait;
      const auto res = proprio::run_baseline(cfg, need_model(cfg),
                                             need_calibration(cfg), gait,
                                             mode, summary, dir);
      std::printf("%zu baseline trials -> %s/baseline.csv\n",
                  res.rows.size(), dir.c_str());
    } else if (cmd_rep->parsed()) {
      const auto cfg = load_cfg(g);
      std::vector<std::string> inputs = report_inputs;
      if (inputs.empty()) {
        for (const char* gname : {"trot", "pronk"}) {
          const std::string p =
              cfg.out_dir + "/sweep_" + gname + "/sweep.csv";
          if (fs::exists(p)) inputs.push_back(p);
        }
      }
      if (inputs.empty()) {
        throw proprio::ConfigError("report: no sweep CSVs found");
      }
      std::vector<std::vector<proprio::SweepRow>> sweeps;
      for (std::string p : inputs) {
        if (fs::is_directory(p)) p += "/sweep.csv";
        sweeps.push_back(proprio::read_sweep_csv(p));
      }
      const auto report = proprio::build_report(sweeps);
      proprio::write_report_csv(report, cfg.out_dir + "/report.csv");
      std::printf("%s", proprio::format_report_table(report).c_str());
      std::printf("report written to %s/report.csv\n", cfg.out_dir.c_str());
    }
    return 0;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n\n", e.what());
    std::cerr << app.help();
    return 2;
  } catch (const std::exception& e) {
    int status = 0;
    char* name = abi::__cxa_demangle(typeid(e).name(), nullptr, nullptr,
                                     &status);
    std::fprintf(stderr, "{\"error\":\"%s\",\"message\":\"%s\"}\n",
                 status == 0 && name ? name : typeid(e).name(), e.what());
    std::free(name);
    return 1;
  }
}
