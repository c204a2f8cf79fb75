#pragma once

#include "chest/numerics.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chest {

enum class ChannelKind {
  CorrelatedGaussian,
  ClusteredMultipath,
  SparseAngular,
  AnalyticGaussian,
};

std::string_view to_string(ChannelKind kind) noexcept;
ChannelKind parse_channel_kind(std::string_view name);

/// Parametric description of one propagation environment.
///
/// Only the fields belonging to `kind` are read:
///  - CorrelatedGaussian: `correlation` (transmit-side exponential coefficient)
///  - ClusteredMultipath: `clusters`, `rays_per_cluster`, `angle_spread`,
///    `los_factor` (Rician K, 0 for pure NLOS)
///  - SparseAngular: `active_taps` (nonzero transmit angular bins)
///  - AnalyticGaussian: `covariance` (nt x nt row covariance)
struct ChannelModelSpec {
  ChannelKind kind = ChannelKind::CorrelatedGaussian;
  int nr = 4;
  int nt = 16;
  double correlation = 0.0;
  int clusters = 3;
  int rays_per_cluster = 8;
  double angle_spread = 0.1;
  double los_factor = 0.0;
  int active_taps = 3;
  ComplexMatrix covariance;

  /// Throws std::invalid_argument describing the first bad parameter.
  void validate() const;
};

struct Dataset {
  ChannelModelSpec spec;
  std::vector<ComplexMatrix> samples;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
};

/// Draws `n` i.i.d. channels from `spec` and scales the whole set so that the
/// empirical mean per-entry power is 1. Sample i is drawn from
/// `rng.substream(i)`, so the output does not depend on evaluation order.
Dataset generate_dataset(const ChannelModelSpec& spec, std::size_t n, const RngStream& rng);

/// Mean |h_ij|^2 over every entry of every sample.
double mean_entry_power(std::span<const ComplexMatrix> samples);

/// Uniform linear array response with half-wavelength spacing, unit-modulus
/// entries: a(theta)_n = exp(j pi n sin(theta)).
ComplexVector ula_response(int n, double theta);

/// Angular-domain view F_r^H H F_t.
ComplexMatrix angular_transform(const ComplexMatrix& h);

/// Pilot matrix plus the quantities every estimator needs from it.
struct MeasurementSetup {
  ComplexMatrix pilots;  // nt x np, QPSK entries of unit modulus
  double noise_variance = 1.0;
  Svd factors;           // cached SVD of `pilots`

  [[nodiscard]] Eigen::Index nt() const noexcept { return pilots.rows(); }
  [[nodiscard]] Eigen::Index np() const noexcept { return pilots.cols(); }
  [[nodiscard]] double pilot_density() const noexcept {
    return static_cast<double>(np()) / static_cast<double>(nt());
  }
};

MeasurementSetup make_setup(ComplexMatrix pilots, double noise_variance);

/// sigma_n^2 such that nt / sigma_n^2 equals the given SNR.
double noise_variance_for_snr(int nt, double snr_db);

/// Random QPSK pilots, entries (+-1 +- j)/sqrt(2).
ComplexMatrix make_pilots(int nt, int np, RngStream& rng);

/// Y = H P + N, N entries i.i.d. CN(0, sigma_n^2).
ComplexMatrix simulate_measurement(const ComplexMatrix& h, const MeasurementSetup& setup,
                                   RngStream& rng);

/// ||H - H_est||_F^2 / ||H||_F^2.
double nmse(const ComplexMatrix& truth, const ComplexMatrix& estimate);
/// Mean of the per-sample ratios.
double nmse(std::span<const ComplexMatrix> truth, std::span<const ComplexMatrix> estimate);
double to_db(double linear);

}  // namespace chest
