#include "chest/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace chest {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : beta_(std::move(betas)) {
  if (beta_.size() < 2) throw std::invalid_argument("noise schedule needs at least 2 steps");
  for (std::size_t i = 0; i < beta_.size(); ++i) {
    if (!(beta_[i] > 0.0 && beta_[i] < 1.0)) {
      throw std::invalid_argument("noise schedule: beta must lie in (0, 1)");
    }
    if (i > 0 && !(beta_[i] > beta_[i - 1])) {
      throw std::invalid_argument("noise schedule: betas must be strictly increasing");
    }
  }
  alpha_bar_.resize(beta_.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < beta_.size(); ++i) {
    prod *= 1.0 - beta_[i];
    alpha_bar_[i] = prod;
  }
}

std::size_t NoiseSchedule::index(int t) const {
  if (t < 1 || t > steps()) {
    throw std::out_of_range("diffusion step " + std::to_string(t) + " outside [1, " +
                            std::to_string(steps()) + "]");
  }
  return static_cast<std::size_t>(t - 1);
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  return alpha_bar_[index(t)];
}

double NoiseSchedule::sigma_tilde_sq(int t) const {
  const double ab = alpha_bar(t);
  const double ab_prev = alpha_bar(t - 1);
  return (1.0 - ab_prev) / (1.0 - ab) * beta(t);
}

NoiseSchedule linear_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 2) throw std::invalid_argument("linear_schedule: need at least 2 steps");
  if (!(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0)) {
    throw std::invalid_argument("linear_schedule: need 0 < beta_start < beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double w = static_cast<double>(i) / static_cast<double>(steps - 1);
    betas[static_cast<std::size_t>(i)] = beta_start + w * (beta_end - beta_start);
  }
  betas.back() = beta_end;
  return NoiseSchedule(std::move(betas));
}

ComplexMatrix forward_sample(const ComplexMatrix& clean, int t, const NoiseSchedule& schedule,
                             const ComplexMatrix& noise) {
  if (noise.rows() != clean.rows() || noise.cols() != clean.cols()) {
    throw std::invalid_argument("forward_sample: noise shape mismatch");
  }
  const double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * clean + std::sqrt(1.0 - ab) * noise;
}

ForwardDraw forward_sample(const ComplexMatrix& clean, int t, const NoiseSchedule& schedule,
                           RngStream& rng) {
  ComplexMatrix noise = sample_standard_complex_gaussian(clean.rows(), clean.cols(), rng);
  ComplexMatrix noisy = forward_sample(clean, t, schedule, noise);
  return {std::move(noisy), std::move(noise)};
}

ComplexMatrix score_from_epsilon(const ComplexMatrix& eps_pred, int t,
                                 const NoiseSchedule& schedule) {
  if (t < 1) throw std::out_of_range("score_from_epsilon: t must be >= 1");
  return (-1.0 / std::sqrt(1.0 - schedule.alpha_bar(t))) * eps_pred;
}

ComplexMatrix reverse_generative_step(const ComplexMatrix& noisy, const ComplexMatrix& eps_pred,
                                      int t, const NoiseSchedule& schedule,
                                      const ComplexMatrix& z) {
  const double a = schedule.alpha(t);
  const double ab = schedule.alpha_bar(t);
  ComplexMatrix mean = (noisy - ((1.0 - a) / std::sqrt(1.0 - ab)) * eps_pred) / std::sqrt(a);
  if (t == 1) return mean;
  return mean + std::sqrt(schedule.sigma_tilde_sq(t)) * z;
}

ComplexMatrix reverse_generative_step(const ComplexMatrix& noisy, const ComplexMatrix& eps_pred,
                                      int t, const NoiseSchedule& schedule, RngStream& rng) {
  if (t == 1) return reverse_generative_step(noisy, eps_pred, t, schedule, ComplexMatrix());
  const ComplexMatrix z = sample_standard_complex_gaussian(noisy.rows(), noisy.cols(), rng);
  return reverse_generative_step(noisy, eps_pred, t, schedule, z);
}

}  // namespace chest
