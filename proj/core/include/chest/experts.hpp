#pragma once

#include "chest/diffusion.hpp"
#include "chest/numerics.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace chest {

/// An expert: anything that predicts the diffusion noise eps(H_t, t) and
/// therefore, through score_from_epsilon, a prior score at every noise level.
/// Implementations must be safe for concurrent calls to predict_epsilon.
class ScorePrior {
 public:
  virtual ~ScorePrior() = default;

  [[nodiscard]] virtual ComplexMatrix predict_epsilon(const ComplexMatrix& noisy,
                                                      int t) const = 0;
  [[nodiscard]] virtual const std::string& id() const noexcept = 0;
  [[nodiscard]] virtual int nr() const noexcept = 0;
  [[nodiscard]] virtual int nt() const noexcept = 0;
  [[nodiscard]] virtual const NoiseSchedule& schedule() const noexcept = 0;
};

using PriorSet = std::vector<std::shared_ptr<const ScorePrior>>;

/// Exact noise predictor for rows i.i.d. CN(0, C). The marginal of each row at
/// step t is CN(0, abar C + (1 - abar) I), so
/// eps*(x) = sqrt(1 - abar) (abar C + (1 - abar) I)^{-1} x.
class AnalyticGaussianPrior final : public ScorePrior {
 public:
  AnalyticGaussianPrior(ComplexMatrix covariance, int nr, NoiseSchedule schedule,
                        std::string id = "gaussian");

  [[nodiscard]] ComplexMatrix predict_epsilon(const ComplexMatrix& noisy, int t) const override;
  [[nodiscard]] const std::string& id() const noexcept override { return id_; }
  [[nodiscard]] int nr() const noexcept override { return nr_; }
  [[nodiscard]] int nt() const noexcept override { return static_cast<int>(covariance_.rows()); }
  [[nodiscard]] const NoiseSchedule& schedule() const noexcept override { return schedule_; }
  [[nodiscard]] const ComplexMatrix& covariance() const noexcept { return covariance_; }

 private:
  ComplexMatrix covariance_;
  int nr_;
  NoiseSchedule schedule_;
  std::string id_;
  // per step: (sqrt(1 - abar) S_t^{-1})^T, applied on the right of row-major H
  std::vector<ComplexMatrix> right_factor_;
};

struct GaussianComponent {
  double weight = 1.0;
  ComplexMatrix covariance;
};

/// Matrix-level Gaussian mixture: one component is drawn per channel and all
/// rows share it. Its score is the responsibility-weighted sum of the
/// component scores, with responsibilities taken from the component
/// marginals at the current noise level.
class AnalyticGmmPrior final : public ScorePrior {
 public:
  AnalyticGmmPrior(std::vector<GaussianComponent> components, int nr, NoiseSchedule schedule,
                   std::string id = "gmm");

  [[nodiscard]] ComplexMatrix predict_epsilon(const ComplexMatrix& noisy, int t) const override;
  [[nodiscard]] const std::string& id() const noexcept override { return id_; }
  [[nodiscard]] int nr() const noexcept override { return nr_; }
  [[nodiscard]] int nt() const noexcept override { return nt_; }
  [[nodiscard]] const NoiseSchedule& schedule() const noexcept override { return schedule_; }

  /// Component posterior probabilities of `noisy` at step t.
  [[nodiscard]] std::vector<double> responsibilities(const ComplexMatrix& noisy, int t) const;

 private:
  std::vector<GaussianComponent> components_;
  int nr_;
  int nt_;
  NoiseSchedule schedule_;
  std::string id_;
  // indexed [component][t - 1]
  std::vector<std::vector<ComplexMatrix>> inverse_;
  std::vector<std::vector<double>> log_det_;
};

/// Sinusoidal embedding: entries (2i, 2i+1) are sin/cos(t / 10000^(2i/dim)).
RealVector time_embedding(int t, int dim);

/// `count` steps evenly spaced over {1..T}, ascending and unique.
std::vector<int> default_time_subset(int steps, int count);
/// Default re-noising step of the refinement: the largest step of `subset`.
/// The heaviest corruption separates experts best; smaller steps leave the
/// refined estimate close to the input whatever the expert.
int refinement_step(std::span<const int> subset);

/// Subsampled diffusion ELBO surrogate of log p_k(H):
///   -sum_{t in subset} || eps_t - eps_k(sqrt(abar_t) H + sqrt(1 - abar_t) eps_t, t) ||^2
/// `noises[i]` is the draw used for `subset[i]`; passing the same draws to
/// every expert gives common random numbers across experts.
double log_prior_elbo(const ScorePrior& prior, const ComplexMatrix& estimate,
                      std::span<const int> subset, std::span<const ComplexMatrix> noises);
double log_prior_elbo(const ScorePrior& prior, const ComplexMatrix& estimate,
                      std::span<const int> subset, RngStream& rng);

/// Re-noise H to step tau with `noise`, then denoise it in one step under
/// `prior`: H_k = (H~ - sqrt(1 - abar) eps_k(H~, tau)) / sqrt(abar).
ComplexMatrix refine_estimate(const ScorePrior& prior, const ComplexMatrix& estimate, int tau,
                              const ComplexMatrix& noise);
ComplexMatrix refine_estimate(const ScorePrior& prior, const ComplexMatrix& estimate, int tau,
                              RngStream& rng);

}  // namespace chest
