#include "chest/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace chest {

namespace {

void check_measurement(const ComplexMatrix& y, const MeasurementSetup& setup, const char* where) {
  if (y.cols() != setup.np()) {
    throw std::invalid_argument(std::string(where) + ": Y has " + std::to_string(y.cols()) +
                                " columns but there are " + std::to_string(setup.np()) + " pilots");
  }
}

void check_priors(const PriorSet& priors, std::span<const double> rho, const ComplexMatrix& y,
                  const MeasurementSetup& setup, const NoiseSchedule& schedule, const char* where) {
  if (priors.empty()) throw std::invalid_argument(std::string(where) + ": no priors");
  if (rho.size() != priors.size()) {
    throw std::invalid_argument(std::string(where) + ": need one weight per prior");
  }
  for (const auto& p : priors) {
    if (!p) throw std::invalid_argument(std::string(where) + ": null prior");
    if (p->nr() != y.rows() || p->nt() != setup.nt()) {
      throw std::invalid_argument(std::string(where) + ": prior '" + p->id() +
                                  "' has dims " + std::to_string(p->nr()) + "x" +
                                  std::to_string(p->nt()) + ", measurement needs " +
                                  std::to_string(y.rows()) + "x" + std::to_string(setup.nt()));
    }
    if (p->schedule().steps() != schedule.steps()) {
      throw std::invalid_argument(std::string(where) + ": prior '" + p->id() +
                                  "' was built for a different number of steps");
    }
  }
}

}  // namespace

ComplexMatrix rls_estimate(const ComplexMatrix& y, const MeasurementSetup& setup) {
  check_measurement(y, setup, "rls_estimate");
  const ComplexMatrix& p = setup.pilots;
  Eigen::MatrixXcd gram = p * p.adjoint();
  gram.diagonal().array() += setup.noise_variance;
  // H A = Y P^H with A Hermitian, so H^H = A^{-1} P Y^H.
  const Eigen::MatrixXcd rhs = p * y.adjoint();
  return gram.llt().solve(rhs).adjoint();
}

double lasso_lambda_max(const ComplexMatrix& y, const MeasurementSetup& setup) {
  check_measurement(y, setup, "lasso_lambda_max");
  const ComplexMatrix g = angular_transform(y * setup.pilots.adjoint());
  return g.cwiseAbs().maxCoeff();
}

double lasso_objective(const ComplexMatrix& y, const ComplexMatrix& h,
                       const MeasurementSetup& setup, double lambda) {
  const double fit = 0.5 * (y - h * setup.pilots).squaredNorm();
  return fit + lambda * angular_transform(h).cwiseAbs().sum();
}

ComplexMatrix lasso_ista(const ComplexMatrix& y, const MeasurementSetup& setup, double lambda,
                         int iterations, std::vector<double>* objective) {
  check_measurement(y, setup, "lasso_ista");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lasso_ista: lambda must be >= 0");
  if (iterations < 1) throw std::invalid_argument("lasso_ista: iterations must be >= 1");
  const Eigen::Index nr = y.rows();
  const Eigen::Index nt = setup.nt();
  const ComplexMatrix fr = dft_matrix(nr);
  const ComplexMatrix ft = dft_matrix(nt);
  const double top = setup.factors.singular(0);
  const double step = 1.0 / (top * top);
  const double threshold = step * lambda;

  // Work in the angular domain: Y = F_r X B with B = F_t^H P.
  const ComplexMatrix b = ft.adjoint() * setup.pilots;
  const ComplexMatrix fry = fr.adjoint() * y;
  auto cost = [&](const ComplexMatrix& x) {
    return 0.5 * (fry - x * b).squaredNorm() + lambda * x.cwiseAbs().sum();
  };

  ComplexMatrix x = ComplexMatrix::Zero(nr, nt);
  double previous = cost(x);
  if (objective != nullptr) {
    objective->clear();
    objective->push_back(previous);
  }
  for (int it = 1; it <= iterations; ++it) {
    const ComplexMatrix z = x - step * ((x * b - fry) * b.adjoint());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double mag = std::abs(z.data()[i]);
      x.data()[i] = mag > threshold ? z.data()[i] * ((mag - threshold) / mag) : Complex(0.0, 0.0);
    }
    const double current = cost(x);
    if (!std::isfinite(current) || current > previous + 1e-9 * std::max(1.0, std::abs(previous))) {
      throw DivergenceError("lasso_ista: objective increased (step size too large)", it);
    }
    if (objective != nullptr) objective->push_back(current);
    previous = current;
  }
  return fr * x * ft.adjoint();
}

ComplexMatrix likelihood_score(const ComplexMatrix& y, const ComplexMatrix& noisy, int t,
                               const MeasurementSetup& setup, const NoiseSchedule& schedule) {
  check_measurement(y, setup, "likelihood_score");
  if (noisy.rows() != y.rows() || noisy.cols() != setup.nt()) {
    throw std::invalid_argument("likelihood_score: H_t shape mismatch");
  }
  const double ab = schedule.alpha_bar(t);
  const double root = std::sqrt(ab);
  const Svd& f = setup.factors;
  const RealVector& sv = f.singular;
  ComplexMatrix residual = y * f.v - (noisy * f.u) * sv.asDiagonal() / root;
  const RealVector gain =
      (sv.array() / ((1.0 - ab) / ab * sv.array().square() + setup.noise_variance)).matrix();
  return (residual * gain.asDiagonal() * f.u.adjoint()) / root;
}

ComplexMatrix posterior_score(const ComplexMatrix& noisy, int t, const ComplexMatrix& y,
                              const MeasurementSetup& setup, const PriorSet& priors,
                              std::span<const double> rho, double s,
                              const NoiseSchedule& schedule) {
  if (rho.size() != priors.size()) {
    throw std::invalid_argument("posterior_score: need one weight per expert");
  }
  ComplexMatrix eps = ComplexMatrix::Zero(noisy.rows(), noisy.cols());
  for (std::size_t k = 0; k < priors.size(); ++k) {
    if (rho[k] == 0.0) continue;
    eps += rho[k] * priors[k]->predict_epsilon(noisy, t);
  }
  return score_from_epsilon(eps, t, schedule) + s * likelihood_score(y, noisy, t, setup, schedule);
}

double default_likelihood_weight(Eigen::Index nt, Eigen::Index np) {
  if (nt < 1 || np < 1) throw std::invalid_argument("default_likelihood_weight: bad dims");
  return std::max(1.0, std::round(static_cast<double>(nt) / static_cast<double>(np)));
}

ComplexMatrix deterministic_dm_estimate(const ComplexMatrix& y, const MeasurementSetup& setup,
                                        const PriorSet& priors, std::span<const double> rho,
                                        double s, const NoiseSchedule& schedule,
                                        ComplexMatrix initial) {
  check_measurement(y, setup, "deterministic_dm_estimate");
  check_priors(priors, rho, y, setup, schedule, "deterministic_dm_estimate");
  if (!(s >= 1.0)) throw std::invalid_argument("deterministic_dm_estimate: s must be >= 1");
  if (initial.rows() != y.rows() || initial.cols() != setup.nt()) {
    throw std::invalid_argument("deterministic_dm_estimate: initial state shape mismatch");
  }
  ComplexMatrix h = std::move(initial);
  for (int t = schedule.steps(); t >= 1; --t) {
    const ComplexMatrix score = posterior_score(h, t, y, setup, priors, rho, s, schedule);
    h = (h + schedule.beta(t) * score) / std::sqrt(schedule.alpha(t));
    if (!all_finite(h)) throw DivergenceError("deterministic_dm_estimate: non-finite iterate", t);
  }
  return h;
}

ComplexMatrix deterministic_dm_estimate(const ComplexMatrix& y, const MeasurementSetup& setup,
                                        const PriorSet& priors, std::span<const double> rho,
                                        double s, const NoiseSchedule& schedule, RngStream& rng) {
  ComplexMatrix initial = sample_standard_complex_gaussian(y.rows(), setup.nt(), rng);
  return deterministic_dm_estimate(y, setup, priors, rho, s, schedule, std::move(initial));
}

double LangevinOptions::zeta(int t, const NoiseSchedule& schedule) const {
  switch (rule) {
    case LangevinStepRule::NoiseLevel: return c * (1.0 - schedule.alpha_bar(t));
    case LangevinStepRule::Beta: return c * schedule.beta(t);
  }
  return 0.0;
}

ComplexMatrix annealed_langevin(ComplexMatrix initial, const ScoreFunction& score,
                                const NoiseSchedule& schedule, const LangevinOptions& options,
                                RngStream& rng) {
  if (options.steps_per_level < 1) {
    throw std::invalid_argument("annealed_langevin: steps_per_level must be >= 1");
  }
  if (!(options.c > 0.0)) throw std::invalid_argument("annealed_langevin: c must be positive");
  ComplexMatrix h = std::move(initial);
  for (int t = schedule.steps(); t >= 1; --t) {
    const double zeta = options.zeta(t, schedule);
    const double xi = options.inject_noise ? std::sqrt(2.0 * zeta) : 0.0;
    for (int i = 0; i < options.steps_per_level; ++i) {
      h += zeta * score(h, t);
      if (xi > 0.0) h += xi * sample_standard_complex_gaussian(h.rows(), h.cols(), rng);
      if (!all_finite(h)) throw DivergenceError("annealed_langevin: non-finite iterate", t);
    }
  }
  return h;
}

ComplexMatrix annealed_langevin_estimate(const ComplexMatrix& y, const MeasurementSetup& setup,
                                         const PriorSet& priors, std::span<const double> rho,
                                         double s, const NoiseSchedule& schedule,
                                         const LangevinOptions& options, RngStream& rng) {
  check_measurement(y, setup, "annealed_langevin_estimate");
  check_priors(priors, rho, y, setup, schedule, "annealed_langevin_estimate");
  if (!(s >= 1.0)) throw std::invalid_argument("annealed_langevin_estimate: s must be >= 1");
  ComplexMatrix initial = sample_standard_complex_gaussian(y.rows(), setup.nt(), rng);
  const ScoreFunction score = [&](const ComplexMatrix& h, int t) {
    return posterior_score(h, t, y, setup, priors, rho, s, schedule);
  };
  return annealed_langevin(std::move(initial), score, schedule, options, rng);
}

}  // namespace chest
