#pragma once

#include "chest/config.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace chest {

std::filesystem::path train_data_path(const ExperimentConfig& cfg, const std::string& env);
std::filesystem::path test_data_path(const ExperimentConfig& cfg, const std::string& env);
/// `id` is an environment id or "aggregated".
std::filesystem::path weights_path(const ExperimentConfig& cfg, const std::string& id);
std::filesystem::path loss_path(const ExperimentConfig& cfg, const std::string& id);

struct FileChecksum {
  std::filesystem::path path;
  std::string checksum;
};

/// Writes <env>.train.chds and <env>.test.chds per environment. Train and
/// test samples are drawn as one set and share its power normalization.
/// Prints one "checksum path" line per file to `log`.
std::vector<FileChecksum> gen_data(const ExperimentConfig& cfg, std::ostream& log);

/// Which networks `train` builds: every expert plus the aggregated model, a
/// single expert, or only the aggregated model.
struct TrainSelection {
  std::optional<std::string> expert;
  bool aggregated_only = false;
};

/// Trains the selected networks, writing <id>.dmwt and <id>.loss.csv
/// (columns epoch,loss). Returns the written weight files with checksums.
std::vector<FileChecksum> train(const ExperimentConfig& cfg, const TrainSelection& selection,
                                std::ostream& log);

struct SweepOptions {
  /// Measure wall-clock time per run. Off by default so that result files
  /// are reproducible byte for byte; wall_ms is then written as 0.
  bool timing = false;
};

struct ResultRow {
  std::string config_hash;
  std::string method;
  std::string environment;
  double snr_db = 0.0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double nmse_db = 0.0;
  double iters = 0.0;          // median outer iterations over the test set
  double reverse_steps = 0.0;  // mean per estimate
  double wall_ms = 0.0;        // mean per estimate
  std::optional<std::string> rho_argmax;  // modal final argmax expert (dmvb only)
  std::optional<double> rho_max;          // mean final max rho (dmvb only)
};

/// Per-sample outcome kept alongside the rows for callers that need more than
/// the aggregate (e.g. iteration distributions).
struct SampleOutcome {
  std::string method;
  std::string environment;
  double snr_db = 0.0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::size_t sample = 0;
  double nmse = 0.0;
  int iters = 0;
  std::size_t rho_argmax = 0;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<SampleOutcome> samples;
};

/// Runs every configured estimator on every test sample of the swept
/// environments at each (SNR, alpha) grid point and seed. Throws listing
/// every missing artifact before doing any work.
SweepResult sweep(const ExperimentConfig& cfg, const SweepOptions& options);

void write_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out);

}  // namespace chest
