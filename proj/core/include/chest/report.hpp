#pragma once

#include "chest/pipeline.hpp"

#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

namespace chest {

inline constexpr const char* kResultsHeader =
    "config_hash,method,environment,snr_db,alpha,seed,nmse_db,iters,reverse_steps,wall_ms,"
    "rho_argmax,rho_max";

/// Strict reader; throws std::runtime_error naming the offending line.
std::vector<ResultRow> read_results_csv(std::istream& in);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

/// Mean of the linear values 10^(dB/10), converted back to dB.
double aggregate_db(std::span<const double> values_db);

struct ReportFilter {
  std::vector<std::string> methods;       // empty: all
  std::vector<std::string> environments;  // empty: all
};

/// Writes nmse_vs_snr.tsv, nmse_vs_alpha.tsv and rho_summary.tsv into
/// `out_dir`. SNR curves use the rows at `alpha` (all rows when unset) and
/// alpha curves the rows at `snr_db`. Throws if the filter leaves no rows.
struct ReportOptions {
  ReportFilter filter;
  std::optional<double> alpha;
  std::optional<double> snr_db;
};

std::vector<std::filesystem::path> write_report(const std::vector<ResultRow>& rows,
                                                const ReportOptions& options,
                                                const std::filesystem::path& out_dir);

}  // namespace chest
