#pragma once

#include "chest/denoiser.hpp"
#include "chest/diffusion.hpp"
#include "chest/numerics.hpp"

#include <functional>
#include <span>
#include <vector>

namespace chest {

struct TrainOptions {
  int epochs = 400;
  int batch_size = 128;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Lower bound on optimizer steps per epoch (see steps_per_epoch). Extra
  /// steps come from reshuffled passes, the last of which may stop part way.
  int min_steps_per_epoch = 0;
  /// Called after every epoch with (epoch index from 1, mean loss).
  std::function<void(int, double)> on_epoch;
};

/// Optimizer steps in one epoch: a full pass over `samples` in batches, or
/// `min_steps` if that is more.
int steps_per_epoch(std::size_t samples, int batch_size, int min_steps);

/// Adam optimizer state over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);

  void step(std::span<double> params, std::span<const double> grad);
  [[nodiscard]] long long steps() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<double> m_, v_;
};

/// Mean per-entry noise-prediction loss of one batch,
/// sum |eps - eps_theta|^2 / (B nr nt), with its parameter gradient added to
/// `grad` (same layout as the network parameters).
double batch_loss_and_gradient(const DenoiserNetwork& net, std::span<const ComplexMatrix> clean,
                               std::span<const int> steps, std::span<const ComplexMatrix> noises,
                               const NoiseSchedule& schedule, std::span<double> grad);

/// Trains `net` in place on the standard DDPM objective with t uniform in
/// {1..T} and Adam. Returns the mean loss of every epoch. Results depend only
/// on the inputs and `rng`, not on the thread count.
std::vector<double> train_expert(std::span<const ComplexMatrix> samples, DenoiserNetwork& net,
                                 const NoiseSchedule& schedule, const TrainOptions& options,
                                 RngStream& rng);

}  // namespace chest
