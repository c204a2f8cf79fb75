#pragma once

#include "chest/estimators.hpp"

#include <optional>
#include <span>
#include <vector>

namespace chest {

/// Digamma psi(x) for x > 0: upward recurrence to x >= 10, then the asymptotic
/// series. Absolute error below 1e-13 over the tested range.
double digamma(double x);

/// E[log pi_k] under Dir(gamma): psi(gamma_k) - psi(sum_j gamma_j).
std::vector<double> expected_log_pi(std::span<const double> gamma);

/// -||Y - H P||_F^2 / (2 sigma^2).
double data_consistency_loglik(const ComplexMatrix& y, const ComplexMatrix& estimate,
                               const MeasurementSetup& setup);

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

struct QzUpdate {
  std::vector<double> rho;
  std::vector<double> log_prior;         // ELBO surrogate per expert
  std::vector<double> expected_log_pi;
  std::vector<double> data_consistency;  // evaluated at the refined estimate
  std::vector<ComplexMatrix> refined;
};

/// q(z) update. One set of noise draws (one per step of `subset`, then one for
/// the refinement at step `tau`) is taken from `rng` and shared by every
/// expert. tau = 0 selects refinement_step(subset).
QzUpdate update_qz(const ComplexMatrix& estimate, const ComplexMatrix& y,
                   const MeasurementSetup& setup, const PriorSet& priors,
                   std::span<const double> gamma, std::span<const int> subset, RngStream& rng,
                   int tau = 0);

/// gamma + rho.
std::vector<double> update_qpi(std::span<const double> gamma, std::span<const double> rho);

struct VBState {
  std::vector<double> rho;
  std::vector<double> gamma;
  ComplexMatrix estimate;
  int iteration = 0;
};

struct EstimatorReport {
  ComplexMatrix estimate;
  std::optional<double> nmse;
  int iterations = 0;
  std::vector<std::vector<double>> rho_trajectory;  // rho after each outer iteration
  double wall_ms = 0.0;
  long long reverse_steps = 0;

  [[nodiscard]] const std::vector<double>& final_rho() const { return rho_trajectory.back(); }
};

struct VBOptions {
  /// Likelihood weight s; <= 0 selects default_likelihood_weight().
  double s = 0.0;
  int max_iterations = 10;  // L
  double tolerance = 1e-3;  // eta
  /// ELBO step subset; empty selects default_time_subset(T, 10).
  std::vector<int> subset;
  /// Re-noising step of the refined estimate; 0 selects refinement_step(subset).
  int refine_step = 0;
  /// Start step 1 from the previous estimate re-noised to T instead of a
  /// fresh H_T ~ CN(0, I).
  bool warm_start = false;
};

/// DM-VB: alternates the deterministic posterior sampler under the current
/// responsibilities, the q(z) update and the q(pi) update until
/// ||rho_i - rho_{i-1}||_2 < tolerance or max_iterations is reached.
/// `truth`, when given, fills report.nmse.
EstimatorReport dmvb_estimate(const ComplexMatrix& y, const MeasurementSetup& setup,
                              const PriorSet& priors, const NoiseSchedule& schedule,
                              const VBOptions& options, RngStream& rng,
                              const ComplexMatrix* truth = nullptr);

}  // namespace chest
