#include "chest/config.hpp"
#include "chest/pipeline.hpp"
#include "chest/report.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-prior MIMO channel estimation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* gen = app.add_subcommand("gen-data", "Generate train/test datasets for every environment");
  gen->add_option("--config", config_path, "Experiment config (JSON)")->required();

  auto* train = app.add_subcommand("train", "Train expert and aggregated denoisers");
  train->add_option("--config", config_path, "Experiment config (JSON)")->required();
  std::string expert;
  auto* expert_opt = train->add_option("--expert", expert, "Train only this environment's expert");
  auto* aggregated_flag = train->add_flag("--aggregated", "Train only the aggregated model");
  expert_opt->excludes(aggregated_flag);

  auto* sweep = app.add_subcommand("sweep", "Run every estimator over the SNR and alpha grids");
  sweep->add_option("--config", config_path, "Experiment config (JSON)")->required();
  std::string out_csv;
  sweep->add_option("--out", out_csv, "Results CSV")->required();
  bool timing = false;
  sweep->add_flag("--timing", timing, "Record wall-clock times (output no longer reproducible)");

  auto* report = app.add_subcommand("report", "Summarize a results CSV into TSV tables");
  std::string in_csv, out_dir;
  report->add_option("--in", in_csv, "Results CSV")->required();
  report->add_option("--out-dir", out_dir, "Directory for the TSV tables")->required();
  std::vector<std::string> methods, environments;
  report->add_option("--method", methods, "Keep only these methods");
  report->add_option("--environment", environments, "Keep only these environments");
  double alpha = 0.0, snr = 0.0;
  auto* alpha_opt = report->add_option("--alpha", alpha, "Pilot density of the SNR curves");
  auto* snr_opt = report->add_option("--snr", snr, "SNR (dB) of the alpha curves");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      chest::gen_data(chest::load_config(config_path), std::cout);
    } else if (train->parsed()) {
      chest::TrainSelection selection;
      if (*expert_opt) selection.expert = expert;
      selection.aggregated_only = aggregated_flag->count() > 0;
      for (const auto& f : chest::train(chest::load_config(config_path), selection, std::cout)) {
        std::cout << f.checksum << "  " << f.path.string() << '\n';
      }
    } else if (sweep->parsed()) {
      const auto result = chest::sweep(chest::load_config(config_path), {timing});
      chest::write_results_csv(result.rows, out_csv);
      std::cout << result.rows.size() << " rows written to " << out_csv << '\n';
    } else if (report->parsed()) {
      chest::ReportOptions options;
      options.filter.methods = methods;
      options.filter.environments = environments;
      if (*alpha_opt) options.alpha = alpha;
      if (*snr_opt) options.snr_db = snr;
      for (const auto& p : chest::write_report(chest::read_results_csv(in_csv), options, out_dir)) {
        std::cout << p.string() << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
