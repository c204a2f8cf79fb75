#include "chest/variational.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace chest {

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("digamma: argument must be > 0");
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli-number series: -1/(2x) - sum B_2n / (2n x^{2n})
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
  return shift + std::log(x) - 0.5 * inv - series;
}

std::vector<double> expected_log_pi(std::span<const double> gamma) {
  if (gamma.empty()) throw std::invalid_argument("expected_log_pi: empty gamma");
  double total = 0.0;
  for (double g : gamma) {
    if (!(g > 0.0)) throw std::invalid_argument("expected_log_pi: gamma entries must be > 0");
    total += g;
  }
  const double base = digamma(total);
  std::vector<double> out;
  out.reserve(gamma.size());
  for (double g : gamma) out.push_back(digamma(g) - base);
  return out;
}

double data_consistency_loglik(const ComplexMatrix& y, const ComplexMatrix& estimate,
                               const MeasurementSetup& setup) {
  if (estimate.cols() != setup.nt() || y.cols() != setup.np() || y.rows() != estimate.rows()) {
    throw std::invalid_argument("data_consistency_loglik: shape mismatch");
  }
  return -(y - estimate * setup.pilots).squaredNorm() / (2.0 * setup.noise_variance);
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  const double top = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(top)) throw std::invalid_argument("softmax: non-finite maximum logit");
  std::vector<double> out(logits.size());
  double norm = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - top);
    norm += out[k];
  }
  for (double& v : out) v /= norm;
  return out;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax: empty input");
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

QzUpdate update_qz(const ComplexMatrix& estimate, const ComplexMatrix& y,
                   const MeasurementSetup& setup, const PriorSet& priors,
                   std::span<const double> gamma, std::span<const int> subset, RngStream& rng,
                   int tau) {
  if (priors.empty()) throw std::invalid_argument("update_qz: no priors");
  if (gamma.size() != priors.size()) throw std::invalid_argument("update_qz: gamma size mismatch");
  if (subset.empty()) throw std::invalid_argument("update_qz: empty step subset");

  std::vector<ComplexMatrix> noises;
  noises.reserve(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    noises.push_back(sample_standard_complex_gaussian(estimate.rows(), estimate.cols(), rng));
  }
  const ComplexMatrix refine_noise =
      sample_standard_complex_gaussian(estimate.rows(), estimate.cols(), rng);
  if (tau == 0) tau = refinement_step(subset);

  QzUpdate out;
  out.expected_log_pi = expected_log_pi(gamma);
  std::vector<double> logits(priors.size());
  for (std::size_t k = 0; k < priors.size(); ++k) {
    const ScorePrior& prior = *priors[k];
    out.log_prior.push_back(log_prior_elbo(prior, estimate, subset, noises));
    out.refined.push_back(refine_estimate(prior, estimate, tau, refine_noise));
    out.data_consistency.push_back(data_consistency_loglik(y, out.refined.back(), setup));
    logits[k] = out.log_prior[k] + out.expected_log_pi[k] + out.data_consistency[k];
  }
  out.rho = softmax(logits);
  return out;
}

std::vector<double> update_qpi(std::span<const double> gamma, std::span<const double> rho) {
  if (gamma.size() != rho.size()) throw std::invalid_argument("update_qpi: size mismatch");
  std::vector<double> out(gamma.begin(), gamma.end());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += rho[k];
  return out;
}

EstimatorReport dmvb_estimate(const ComplexMatrix& y, const MeasurementSetup& setup,
                              const PriorSet& priors, const NoiseSchedule& schedule,
                              const VBOptions& options, RngStream& rng,
                              const ComplexMatrix* truth) {
  const auto start = std::chrono::steady_clock::now();
  if (priors.empty()) throw std::invalid_argument("dmvb_estimate: no priors");
  if (options.max_iterations < 1) throw std::invalid_argument("dmvb_estimate: L must be >= 1");
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("dmvb_estimate: eta must be > 0");
  const double s =
      options.s > 0.0 ? options.s : default_likelihood_weight(setup.nt(), setup.np());
  const std::vector<int> subset =
      options.subset.empty() ? default_time_subset(schedule.steps(), 10) : options.subset;
  for (int t : subset) {
    if (t < 1 || t > schedule.steps()) throw std::invalid_argument("dmvb_estimate: bad step subset");
  }
  if (options.refine_step < 0 || options.refine_step > schedule.steps()) {
    throw std::invalid_argument("dmvb_estimate: bad refine step");
  }

  const std::size_t k = priors.size();
  VBState state{std::vector<double>(k, 1.0 / static_cast<double>(k)), std::vector<double>(k, 1.0),
                ComplexMatrix(), 0};
  EstimatorReport report;
  for (int i = 1; i <= options.max_iterations; ++i) {
    state.iteration = i;
    try {
      if (options.warm_start && i > 1) {
        const ComplexMatrix initial = forward_sample(state.estimate, schedule.steps(), schedule,
                                                     sample_standard_complex_gaussian(
                                                         y.rows(), setup.nt(), rng));
        state.estimate =
            deterministic_dm_estimate(y, setup, priors, state.rho, s, schedule, initial);
      } else {
        state.estimate = deterministic_dm_estimate(y, setup, priors, state.rho, s, schedule, rng);
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string("dmvb_estimate: ") + e.what(), i);
    }
    report.reverse_steps += schedule.steps();
    if (!all_finite(state.estimate)) throw DivergenceError("dmvb_estimate: non-finite estimate", i);

    const std::vector<double> rho =
        update_qz(state.estimate, y, setup, priors, state.gamma, subset, rng, options.refine_step)
            .rho;
    state.gamma = update_qpi(state.gamma, rho);
    double change = 0.0;
    for (std::size_t j = 0; j < k; ++j) change += (rho[j] - state.rho[j]) * (rho[j] - state.rho[j]);
    state.rho = rho;
    report.rho_trajectory.push_back(rho);
    report.iterations = i;
    if (std::sqrt(change) < options.tolerance) break;
  }
  report.estimate = std::move(state.estimate);
  if (truth != nullptr) report.nmse = nmse(*truth, report.estimate);
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace chest
