#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "subsan/config.hpp"
#include "subsan/experiment.hpp"

namespace fs = std::filesystem;
using namespace subsan;

namespace {

void write_curve_csv(const fs::path& path, const experiment::ExperimentReport& report,
                     double experiment::SweepRow::*mean, double experiment::SweepRow::*std_dev) {
  std::ofstream out(path);
  out << "grid_value,mean,std,n_episodes\n";
  for (const auto& row : report.rows) {
    out << row.grid_value << ',' << row.*mean << ',' << row.*std_dev << ',' << row.episodes
        << '\n';
  }
}

void write_spectrum_csv(const fs::path& path, const linalg::Vec& spectrum) {
  std::ofstream out(path);
  out << "index,eigenvalue\n";
  for (Eigen::Index i = 0; i < spectrum.size(); ++i)
    out << i + 1 << ',' << spectrum[i] << '\n';
}

void write_sweep_outputs(const fs::path& dir, const experiment::ExperimentReport& report) {
  fs::create_directories(dir);
  write_curve_csv(dir / "clean.csv", report, &experiment::SweepRow::clean_mean,
                  &experiment::SweepRow::clean_std);
  write_curve_csv(dir / "triggered.csv", report, &experiment::SweepRow::triggered_mean,
                  &experiment::SweepRow::triggered_std);
  write_curve_csv(dir / "sanitized.csv", report, &experiment::SweepRow::sanitized_mean,
                  &experiment::SweepRow::sanitized_std);
  if (report.spectrum.size() > 0)
    write_spectrum_csv(dir / "spectrum.csv", report.spectrum);
  std::ofstream json_out(dir / "report.json");
  json_out << experiment::to_json(report).dump(2) << '\n';
}

int run_spectrum(const config::ExperimentConfig& cfg) {
  const experiment::Scenario scenario = config::build_scenario(cfg);
  Rng rng = make_rng(cfg.master_seed);
  const auto samples = sanitize::collect_clean_samples(
      *scenario.env, *scenario.backdoor, cfg.samples_n,
      sanitize::SamplingMode::GeometricIid, rng);
  const auto cov = linalg::empirical_covariance(samples.samples, scenario.centering);
  const auto model = linalg::eigendecompose(cov);

  fs::create_directories(cfg.output_dir);
  const fs::path path = fs::path(cfg.output_dir) / "spectrum.csv";
  write_spectrum_csv(path, model.eigenvalues);
  std::cout << "wrote " << path.string() << " (n = " << cfg.samples_n << ")\n";
  return 0;
}

int run_sweep_n(const config::ExperimentConfig& cfg, const nlohmann::json& echo) {
  if (cfg.n_values.empty()) throw ConfigError("sweep.n_values", "required for sweep-n");
  const experiment::Scenario scenario = config::build_scenario(cfg);
  experiment::ExperimentReport report = experiment::sweep_n(
      scenario, cfg.n_values, cfg.dimension, cfg.eval, cfg.trials, cfg.master_seed);
  report.config_echo = echo;
  write_sweep_outputs(cfg.output_dir, report);
  std::cout << "sweep-n: " << report.rows.size() << " grid points, " << cfg.trials
            << " trials each, " << report.wall_clock_seconds << " s\n";
  return 0;
}

int run_sweep_d(const config::ExperimentConfig& cfg, const nlohmann::json& echo) {
  if (cfg.d_values.empty()) throw ConfigError("sweep.d_values", "required for sweep-d");
  const experiment::Scenario scenario = config::build_scenario(cfg);
  experiment::ExperimentReport report = experiment::sweep_d(
      scenario, cfg.samples_n, cfg.d_values, cfg.eval, cfg.trials, cfg.master_seed);
  report.config_echo = echo;
  write_sweep_outputs(cfg.output_dir, report);
  std::cout << "sweep-d: " << report.rows.size() << " grid points, " << cfg.trials
            << " trials each, " << report.wall_clock_seconds << " s\n";
  return 0;
}

int run_verify_lemmas(std::uint64_t seed) {
  bool all_passed = true;
  for (const auto& check : experiment::verify_lemmas(seed)) {
    all_passed = all_passed && check.passed;
    std::cout << (check.passed ? "PASS" : "FAIL") << "  " << check.name
              << "  statistic=" << check.statistic << "  threshold=" << check.threshold
              << "  trials=" << check.trials << "  (" << check.detail << ")\n";
  }
  return all_passed ? 0 : 1;
}

int run_theorem1(const config::ExperimentConfig& cfg, const nlohmann::json& echo) {
  const experiment::Scenario scenario = config::build_scenario(cfg);
  const auto parts = config::planted_parts(cfg, scenario);
  if (!parts.env || !parts.policy)
    throw ConfigError("env.type", "theorem1 needs a planted environment");
  if (!scenario.trigger.has_value())
    throw ConfigError("trigger.type", "theorem1 needs a trigger");

  std::vector<long> ns = cfg.n_values.empty() ? std::vector<long>{cfg.samples_n}
                                              : cfg.n_values;
  nlohmann::json out{{"config", echo}, {"reports", nlohmann::json::array()}};
  bool all_hold = true;
  for (long n : ns) {
    const auto reports = experiment::theorem1_check(parts.env, parts.policy,
                                                    *scenario.trigger, n, cfg.eval,
                                                    cfg.trials, cfg.master_seed);
    for (const auto& r : reports) {
      all_hold = all_hold && r.holds;
      out["reports"].push_back(experiment::to_json(r));
    }
    std::cout << "n=" << n << ": "
              << std::count_if(reports.begin(), reports.end(),
                               [](const auto& r) { return r.holds; })
              << "/" << reports.size() << " seeds within the bound\n";
  }
  fs::create_directories(cfg.output_dir);
  std::ofstream json_out(fs::path(cfg.output_dir) / "theorem1.json");
  json_out << out.dump(2) << '\n';
  return all_hold ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backdoor-policy sanitization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t lemma_seed = 7;

  auto* spectrum = app.add_subcommand("spectrum", "Eigenvalue spectrum of the fitted covariance");
  spectrum->add_option("--config", config_path, "experiment config JSON")->required();
  auto* sweep_n = app.add_subcommand("sweep-n", "Value curves vs clean sample count");
  sweep_n->add_option("--config", config_path, "experiment config JSON")->required();
  auto* sweep_d = app.add_subcommand("sweep-d", "Value curves vs subspace dimension");
  sweep_d->add_option("--config", config_path, "experiment config JSON")->required();
  auto* lemmas = app.add_subcommand("verify-lemmas", "Run the numerical lemma checks");
  lemmas->add_option("--seed", lemma_seed, "master seed");
  auto* theorem = app.add_subcommand("theorem1", "Check the performance bound end to end");
  theorem->add_option("--config", config_path, "experiment config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (lemmas->parsed()) return run_verify_lemmas(lemma_seed);

    std::ifstream in(config_path);
    if (!in) throw ConfigError(config_path, "cannot open config file");
    nlohmann::json raw;
    in >> raw;
    const config::ExperimentConfig cfg = config::parse_config(raw);

    if (spectrum->parsed()) return run_spectrum(cfg);
    if (sweep_n->parsed()) return run_sweep_n(cfg, raw);
    if (sweep_d->parsed()) return run_sweep_d(cfg, raw);
    if (theorem->parsed()) return run_theorem1(cfg, raw);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
