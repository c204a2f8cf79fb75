#include "chest/experts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace chest {

namespace {

void check_shape(const ScorePrior& prior, const ComplexMatrix& m, const char* where) {
  if (m.rows() != prior.nr() || m.cols() != prior.nt()) {
    throw std::invalid_argument(std::string(where) + ": expected " + std::to_string(prior.nr()) +
                                "x" + std::to_string(prior.nt()) + " input, got " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

ComplexMatrix marginal_covariance(const ComplexMatrix& c, double alpha_bar) {
  ComplexMatrix s = alpha_bar * c;
  s.diagonal().array() += 1.0 - alpha_bar;
  return s;
}

}  // namespace

AnalyticGaussianPrior::AnalyticGaussianPrior(ComplexMatrix covariance, int nr,
                                             NoiseSchedule schedule, std::string id)
    : covariance_(std::move(covariance)),
      nr_(nr),
      schedule_(std::move(schedule)),
      id_(std::move(id)) {
  if (nr_ < 1) throw std::invalid_argument("AnalyticGaussianPrior: nr must be >= 1");
  psd_factor(covariance_);  // validates Hermitian PSD
  right_factor_.reserve(static_cast<std::size_t>(schedule_.steps()));
  for (int t = 1; t <= schedule_.steps(); ++t) {
    const double ab = schedule_.alpha_bar(t);
    const Eigen::MatrixXcd s = marginal_covariance(covariance_, ab);
    const Eigen::MatrixXcd inv = s.llt().solve(Eigen::MatrixXcd::Identity(s.rows(), s.cols()));
    right_factor_.emplace_back(std::sqrt(1.0 - ab) * inv.transpose());
  }
}

ComplexMatrix AnalyticGaussianPrior::predict_epsilon(const ComplexMatrix& noisy, int t) const {
  check_shape(*this, noisy, "AnalyticGaussianPrior");
  if (t < 1 || t > schedule_.steps()) throw std::out_of_range("AnalyticGaussianPrior: bad step");
  return noisy * right_factor_[static_cast<std::size_t>(t - 1)];
}

AnalyticGmmPrior::AnalyticGmmPrior(std::vector<GaussianComponent> components, int nr,
                                   NoiseSchedule schedule, std::string id)
    : components_(std::move(components)),
      nr_(nr),
      nt_(0),
      schedule_(std::move(schedule)),
      id_(std::move(id)) {
  if (components_.empty()) throw std::invalid_argument("AnalyticGmmPrior: no components");
  if (nr_ < 1) throw std::invalid_argument("AnalyticGmmPrior: nr must be >= 1");
  nt_ = static_cast<int>(components_.front().covariance.rows());
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight >= 0.0)) throw std::invalid_argument("AnalyticGmmPrior: negative weight");
    if (c.covariance.rows() != nt_ || c.covariance.cols() != nt_) {
      throw std::invalid_argument("AnalyticGmmPrior: component covariances differ in size");
    }
    psd_factor(c.covariance);
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("AnalyticGmmPrior: weights must sum to 1");
  }
  for (const auto& c : components_) {
    std::vector<ComplexMatrix> inv;
    std::vector<double> logdet;
    for (int t = 1; t <= schedule_.steps(); ++t) {
      const Eigen::MatrixXcd s = marginal_covariance(c.covariance, schedule_.alpha_bar(t));
      Eigen::LLT<Eigen::MatrixXcd> llt(s);
      inv.emplace_back(llt.solve(Eigen::MatrixXcd::Identity(nt_, nt_)));
      logdet.push_back(2.0 * llt.matrixL().toDenseMatrix().diagonal().real().array().log().sum());
    }
    inverse_.push_back(std::move(inv));
    log_det_.push_back(std::move(logdet));
  }
}

std::vector<double> AnalyticGmmPrior::responsibilities(const ComplexMatrix& noisy, int t) const {
  check_shape(*this, noisy, "AnalyticGmmPrior");
  if (t < 1 || t > schedule_.steps()) throw std::out_of_range("AnalyticGmmPrior: bad step");
  const auto k = static_cast<std::size_t>(t - 1);
  std::vector<double> logits(components_.size());
  for (std::size_t j = 0; j < components_.size(); ++j) {
    const ComplexMatrix q = noisy.conjugate() * inverse_[j][k];
    const double quad = q.cwiseProduct(noisy).sum().real();
    logits[j] = (components_[j].weight > 0.0 ? std::log(components_[j].weight)
                                             : -std::numeric_limits<double>::infinity()) -
                nr_ * log_det_[j][k] - quad;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double norm = 0.0;
  for (auto& l : logits) {
    l = std::exp(l - top);
    norm += l;
  }
  for (auto& l : logits) l /= norm;
  return logits;
}

ComplexMatrix AnalyticGmmPrior::predict_epsilon(const ComplexMatrix& noisy, int t) const {
  const std::vector<double> resp = responsibilities(noisy, t);
  const auto k = static_cast<std::size_t>(t - 1);
  ComplexMatrix mixed = ComplexMatrix::Zero(noisy.rows(), noisy.cols());
  for (std::size_t j = 0; j < components_.size(); ++j) {
    if (resp[j] == 0.0) continue;
    mixed += resp[j] * (noisy * inverse_[j][k].transpose());
  }
  return std::sqrt(1.0 - schedule_.alpha_bar(t)) * mixed;
}

RealVector time_embedding(int t, int dim) {
  if (dim < 2 || dim % 2 != 0) {
    throw std::invalid_argument("time_embedding: dimension must be even and >= 2");
  }
  if (t < 0) throw std::invalid_argument("time_embedding: step must be >= 0");
  RealVector e(dim);
  for (int i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / static_cast<double>(dim));
    e(2 * i) = std::sin(t * freq);
    e(2 * i + 1) = std::cos(t * freq);
  }
  return e;
}

std::vector<int> default_time_subset(int steps, int count) {
  if (steps < 1 || count < 1) throw std::invalid_argument("default_time_subset: bad arguments");
  std::vector<int> out;
  if (count == 1) {
    out.push_back((steps + 1) / 2);
    return out;
  }
  for (int i = 0; i < count; ++i) {
    const double x = 1.0 + static_cast<double>(i) * (steps - 1) / static_cast<double>(count - 1);
    const int t = static_cast<int>(std::lround(x));
    if (out.empty() || out.back() != t) out.push_back(t);
  }
  return out;
}

int refinement_step(std::span<const int> subset) {
  if (subset.empty()) throw std::invalid_argument("refinement_step: empty step subset");
  return *std::max_element(subset.begin(), subset.end());
}

double log_prior_elbo(const ScorePrior& prior, const ComplexMatrix& estimate,
                      std::span<const int> subset, std::span<const ComplexMatrix> noises) {
  if (subset.empty()) throw std::invalid_argument("log_prior_elbo: empty step subset");
  if (noises.size() != subset.size()) {
    throw std::invalid_argument("log_prior_elbo: need one noise draw per step");
  }
  const NoiseSchedule& schedule = prior.schedule();
  double total = 0.0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const int t = subset[i];
    if (t < 1 || t > schedule.steps()) throw std::out_of_range("log_prior_elbo: step outside schedule");
    const ComplexMatrix noisy = forward_sample(estimate, t, schedule, noises[i]);
    total += (noises[i] - prior.predict_epsilon(noisy, t)).squaredNorm();
  }
  return -total;
}

double log_prior_elbo(const ScorePrior& prior, const ComplexMatrix& estimate,
                      std::span<const int> subset, RngStream& rng) {
  std::vector<ComplexMatrix> noises;
  noises.reserve(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    noises.push_back(sample_standard_complex_gaussian(estimate.rows(), estimate.cols(), rng));
  }
  return log_prior_elbo(prior, estimate, subset, noises);
}

ComplexMatrix refine_estimate(const ScorePrior& prior, const ComplexMatrix& estimate, int tau,
                              const ComplexMatrix& noise) {
  const NoiseSchedule& schedule = prior.schedule();
  if (tau < 1 || tau > schedule.steps()) throw std::out_of_range("refine_estimate: bad tau");
  const double ab = schedule.alpha_bar(tau);
  const ComplexMatrix noisy = forward_sample(estimate, tau, schedule, noise);
  return (noisy - std::sqrt(1.0 - ab) * prior.predict_epsilon(noisy, tau)) / std::sqrt(ab);
}

ComplexMatrix refine_estimate(const ScorePrior& prior, const ComplexMatrix& estimate, int tau,
                              RngStream& rng) {
  const ComplexMatrix noise =
      sample_standard_complex_gaussian(estimate.rows(), estimate.cols(), rng);
  return refine_estimate(prior, estimate, tau, noise);
}

}  // namespace chest
