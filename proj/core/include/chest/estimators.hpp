#pragma once

#include "chest/channelgen.hpp"
#include "chest/diffusion.hpp"
#include "chest/experts.hpp"
#include "chest/numerics.hpp"

#include <functional>
#include <span>
#include <vector>

namespace chest {

/// Regularized least squares, H = Y P^H (P P^H + sigma^2 I)^{-1}.
ComplexMatrix rls_estimate(const ComplexMatrix& y, const MeasurementSetup& setup);

/// Smallest lambda for which ISTA's fixed point is H = 0:
/// max |F_r^H Y P^H F_t|.
double lasso_lambda_max(const ComplexMatrix& y, const MeasurementSetup& setup);

/// 1/2 ||Y - H P||_F^2 + lambda ||F_r^H H F_t||_1 (entrywise complex modulus).
double lasso_objective(const ComplexMatrix& y, const ComplexMatrix& h,
                       const MeasurementSetup& setup, double lambda);

/// ISTA on the angular coefficients X = F_r^H H F_t with step 1/||P||_2^2 and
/// complex soft thresholding, starting from X = 0. When `objective` is given,
/// it receives the objective after every iteration (first entry: at X = 0).
/// Throws DivergenceError if the objective rises by more than 1e-9 relative.
ComplexMatrix lasso_ista(const ComplexMatrix& y, const MeasurementSetup& setup, double lambda,
                         int iterations, std::vector<double>* objective = nullptr);

/// Score (conjugate convention) of the noise-perturbed Gaussian likelihood
/// log N(Y; H_t P / sqrt(abar), (1 - abar)/abar P^H P + sigma^2 I):
/// (1/sqrt(abar)) (Y V - H_t U S / sqrt(abar)) ((1 - abar)/abar S^2 + sigma^2)^{-1} S U^H.
ComplexMatrix likelihood_score(const ComplexMatrix& y, const ComplexMatrix& noisy, int t,
                               const MeasurementSetup& setup, const NoiseSchedule& schedule);

/// sum_k rho_k (-eps_k / sqrt(1 - abar)) + s * likelihood_score. Experts with
/// rho_k == 0 are skipped.
ComplexMatrix posterior_score(const ComplexMatrix& noisy, int t, const ComplexMatrix& y,
                              const MeasurementSetup& setup, const PriorSet& priors,
                              std::span<const double> rho, double s,
                              const NoiseSchedule& schedule);

/// s = max(1, round(Nt / Np)).
double default_likelihood_weight(Eigen::Index nt, Eigen::Index np);

/// Deterministic posterior sampling from a given H_T:
/// H_{t-1} = (H_t + beta_t * posterior_score) / sqrt(alpha_t), t = T..1.
/// Throws DivergenceError (carrying t) on non-finite iterates.
ComplexMatrix deterministic_dm_estimate(const ComplexMatrix& y, const MeasurementSetup& setup,
                                        const PriorSet& priors, std::span<const double> rho,
                                        double s, const NoiseSchedule& schedule,
                                        ComplexMatrix initial);
/// Same, with H_T ~ CN(0, I) drawn from `rng` before anything else.
ComplexMatrix deterministic_dm_estimate(const ComplexMatrix& y, const MeasurementSetup& setup,
                                        const PriorSet& priors, std::span<const double> rho,
                                        double s, const NoiseSchedule& schedule, RngStream& rng);

enum class LangevinStepRule {
  NoiseLevel,  // zeta_t = c (1 - abar_t)
  Beta,        // zeta_t = c beta_t
};

struct LangevinOptions {
  int steps_per_level = 1;
  double c = 0.3;
  LangevinStepRule rule = LangevinStepRule::NoiseLevel;
  /// xi_t = sqrt(2 zeta_t) when true, 0 otherwise.
  bool inject_noise = true;

  [[nodiscard]] double zeta(int t, const NoiseSchedule& schedule) const;
};

using ScoreFunction = std::function<ComplexMatrix(const ComplexMatrix&, int)>;

/// H <- H + zeta_t score(H, t) + xi_t Z, Z ~ CN(0, I), steps_per_level times
/// for each t = T..1, starting from `initial`.
ComplexMatrix annealed_langevin(ComplexMatrix initial, const ScoreFunction& score,
                                const NoiseSchedule& schedule, const LangevinOptions& options,
                                RngStream& rng);

/// Langevin posterior sampler from H_T ~ CN(0, I) (drawn first from `rng`).
ComplexMatrix annealed_langevin_estimate(const ComplexMatrix& y, const MeasurementSetup& setup,
                                         const PriorSet& priors, std::span<const double> rho,
                                         double s, const NoiseSchedule& schedule,
                                         const LangevinOptions& options, RngStream& rng);

}  // namespace chest
