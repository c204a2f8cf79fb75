#pragma once

#include "chest/numerics.hpp"

#include <utility>
#include <vector>

namespace chest {

/// Variance schedule for a T-step diffusion. Steps are 1-based throughout:
/// beta(1) is the first forward step, alpha_bar(0) == 1 by convention.
class NoiseSchedule {
 public:
  /// Throws unless 0 < beta_1 < ... < beta_T < 1.
  explicit NoiseSchedule(std::vector<double> betas);

  [[nodiscard]] int steps() const noexcept { return static_cast<int>(beta_.size()); }
  [[nodiscard]] double beta(int t) const { return beta_.at(index(t)); }
  [[nodiscard]] double alpha(int t) const { return 1.0 - beta(t); }
  [[nodiscard]] double alpha_bar(int t) const;
  /// Posterior variance of the ancestral step; 0 at t = 1.
  [[nodiscard]] double sigma_tilde_sq(int t) const;
  [[nodiscard]] const std::vector<double>& betas() const noexcept { return beta_; }

 private:
  [[nodiscard]] std::size_t index(int t) const;

  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
};

inline constexpr int kDefaultSteps = 100;
inline constexpr double kDefaultBetaStart = 1e-4;
inline constexpr double kDefaultBetaEnd = 0.02;

/// beta_t linearly spaced from beta_start to beta_end inclusive.
NoiseSchedule linear_schedule(int steps = kDefaultSteps, double beta_start = kDefaultBetaStart,
                              double beta_end = kDefaultBetaEnd);

struct ForwardDraw {
  ComplexMatrix noisy;  // H_t
  ComplexMatrix noise;  // eps_t
};

/// H_t = sqrt(abar_t) H_0 + sqrt(1 - abar_t) eps, eps ~ CN(0, I). t = 0 returns H_0.
ForwardDraw forward_sample(const ComplexMatrix& clean, int t, const NoiseSchedule& schedule,
                           RngStream& rng);
/// Deterministic variant with a caller-supplied noise draw.
ComplexMatrix forward_sample(const ComplexMatrix& clean, int t, const NoiseSchedule& schedule,
                             const ComplexMatrix& noise);

/// Prior score (conjugate convention) implied by a noise prediction:
/// -eps / sqrt(1 - abar_t).
ComplexMatrix score_from_epsilon(const ComplexMatrix& eps_pred, int t,
                                 const NoiseSchedule& schedule);

/// One ancestral DDPM step; the noise term vanishes at t = 1.
ComplexMatrix reverse_generative_step(const ComplexMatrix& noisy, const ComplexMatrix& eps_pred,
                                      int t, const NoiseSchedule& schedule, RngStream& rng);
/// Same step with an explicit Z draw (ignored at t = 1).
ComplexMatrix reverse_generative_step(const ComplexMatrix& noisy, const ComplexMatrix& eps_pred,
                                      int t, const NoiseSchedule& schedule,
                                      const ComplexMatrix& z);

}  // namespace chest
