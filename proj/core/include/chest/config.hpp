#pragma once

#include "chest/channelgen.hpp"
#include "chest/denoiser.hpp"
#include "chest/weights_io.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace chest {

struct EnvironmentConfig {
  std::string id;
  ChannelModelSpec spec;
  std::size_t train_size = 10000;
};

struct TrainingConfig {
  int epochs = 400;
  int batch_size = 128;
  double learning_rate = 1e-4;
  int min_steps_per_epoch = 0;
};

/// One estimator entry of the sweep. `method` is one of
/// rls, lasso, dm (aggregated prior), dm-matched (the environment's own
/// expert), dmvb, langevin (aggregated prior).
struct MethodConfig {
  std::string method;
  double s = 0.0;                 // <= 0: max(1, round(Nt/Np))
  double lambda_ratio = 0.05;     // lasso: lambda = ratio * lambda_max(Y)
  int lasso_iterations = 200;
  int max_iterations = 10;        // dmvb L
  double tolerance = 1e-3;        // dmvb eta
  int subset_size = 10;           // dmvb |T_sub|
  int refine_step = 0;            // dmvb tau; 0 = largest step of T_sub
  bool warm_start = false;
  double langevin_c = 0.3;
  int steps_per_level = 1;
};

struct ExperimentConfig {
  std::string name = "experiment";
  int nr = 4;
  int nt = 16;
  double alpha = 0.5;                     // pilot density of the SNR sweep
  std::vector<double> snr_grid_db{-10, 0, 10, 20, 30};
  std::vector<double> alpha_grid{0.25, 0.5, 0.75, 1.0};
  double alpha_sweep_snr_db = 15.0;
  ScheduleSpec schedule;
  std::vector<EnvironmentConfig> environments;
  std::size_t test_size = 100;
  DenoiserConfig expert_network;
  DenoiserConfig aggregated_network;
  TrainingConfig training;
  std::vector<MethodConfig> methods;
  std::uint64_t data_seed = 1;
  std::uint64_t train_seed = 2;
  std::vector<std::uint64_t> sweep_seeds{3};
  std::vector<std::string> sweep_environments;  // empty: all
  std::filesystem::path data_dir = "data";
  std::filesystem::path weights_dir = "weights";

  /// Hash of the canonical JSON form; stamped on every result row.
  std::string hash;

  /// Throws std::invalid_argument on the first inconsistency.
  void validate() const;
  [[nodiscard]] int pilots_for(double alpha_value) const;
  [[nodiscard]] const EnvironmentConfig& environment(const std::string& id) const;
};

/// Strict parse: unknown keys anywhere are rejected. Relative output paths
/// resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace chest
