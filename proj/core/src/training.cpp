#include "chest/training.hpp"

#include "chest/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace chest {

namespace {

// Gradient chunks have a fixed size so the floating-point reduction order
// does not depend on how many threads run them.
constexpr std::size_t kChunk = 32;

}  // namespace

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(size, 0.0), v_(size, 0.0) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("Adam: learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam: betas must lie in [0, 1)");
  }
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("Adam: size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

double batch_loss_and_gradient(const DenoiserNetwork& net, std::span<const ComplexMatrix> clean,
                               std::span<const int> steps, std::span<const ComplexMatrix> noises,
                               const NoiseSchedule& schedule, std::span<double> grad) {
  const std::size_t batch = clean.size();
  if (batch == 0 || steps.size() != batch || noises.size() != batch) {
    throw std::invalid_argument("batch_loss_and_gradient: inconsistent batch");
  }
  if (grad.size() != net.parameter_count()) {
    throw std::invalid_argument("batch_loss_and_gradient: gradient buffer has wrong size");
  }
  const DenoiserConfig& cfg = net.config();
  const Eigen::Index hw = cfg.positions();
  const double norm = 1.0 / (static_cast<double>(batch) * static_cast<double>(hw));

  const std::size_t chunks = (batch + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> partial(chunks);
  std::vector<double> losses(chunks, 0.0);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(batch, begin + kChunk);
    const auto count = static_cast<Eigen::Index>(end - begin);
    // per-thread buffers: reused across batches to avoid large reallocations
    thread_local ForwardTape tape;
    thread_local Eigen::MatrixXd input, target, diff;
    input.resize(2, count * hw);
    target.resize(2, count * hw);
    for (std::size_t b = begin; b < end; ++b) {
      if (clean[b].rows() != cfg.nr || clean[b].cols() != cfg.nt) {
        throw std::invalid_argument("training: sample dimensions do not match the network");
      }
      const auto col = static_cast<Eigen::Index>(b - begin) * hw;
      input.middleCols(col, hw) = to_channels(forward_sample(clean[b], steps[b], schedule, noises[b]));
      target.middleCols(col, hw) = to_channels(noises[b]);
    }
    diff = net.forward(input, steps.subspan(begin, end - begin), &tape);
    diff -= target;
    losses[c] = diff.squaredNorm() * norm;
    partial[c].assign(net.parameter_count(), 0.0);
    net.backward(tape, (2.0 * norm) * diff, partial[c]);
  });
  double loss = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    loss += losses[c];
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += partial[c][i];
  }
  return loss;
}

int steps_per_epoch(std::size_t samples, int batch_size, int min_steps) {
  if (samples == 0 || batch_size < 1) throw std::invalid_argument("steps_per_epoch: empty pass");
  const auto b = static_cast<std::size_t>(batch_size);
  return std::max(static_cast<int>((samples + b - 1) / b), min_steps);
}

std::vector<double> train_expert(std::span<const ComplexMatrix> samples, DenoiserNetwork& net,
                                 const NoiseSchedule& schedule, const TrainOptions& options,
                                 RngStream& rng) {
  if (samples.empty()) throw std::invalid_argument("train_expert: empty dataset");
  if (options.epochs < 1) throw std::invalid_argument("train_expert: epochs must be >= 1");
  if (options.batch_size < 1) throw std::invalid_argument("train_expert: batch size must be >= 1");
  const DenoiserConfig& cfg = net.config();
  for (const auto& s : samples) {
    if (s.rows() != cfg.nr || s.cols() != cfg.nt) {
      throw std::invalid_argument("train_expert: dataset is " + std::to_string(s.rows()) + "x" +
                                  std::to_string(s.cols()) + " but the network expects " +
                                  std::to_string(cfg.nr) + "x" + std::to_string(cfg.nt));
    }
  }

  Adam adam(net.parameter_count(), options.learning_rate, options.beta1, options.beta2,
            options.epsilon);
  const std::size_t n = samples.size();
  const auto batch = static_cast<std::size_t>(options.batch_size);
  std::vector<std::size_t> order(n);
  std::vector<double> grad(net.parameter_count());
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(options.epochs));

  std::vector<ComplexMatrix> clean, noises;
  std::vector<int> steps;
  const int per_epoch = steps_per_epoch(n, options.batch_size, options.min_steps_per_epoch);
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t cursor = n;  // forces a shuffle at the start of every epoch
    for (int step = 0; step < per_epoch; ++step) {
      if (cursor >= n) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
        cursor = 0;
      }
      const std::size_t end = std::min(n, cursor + batch);
      clean.clear();
      noises.clear();
      steps.clear();
      for (std::size_t i = cursor; i < end; ++i) {
        clean.push_back(samples[order[i]]);
        steps.push_back(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(schedule.steps()))));
        noises.push_back(sample_standard_complex_gaussian(cfg.nr, cfg.nt, rng));
      }
      cursor = end;
      std::fill(grad.begin(), grad.end(), 0.0);
      loss_sum += batch_loss_and_gradient(net, clean, steps, noises, schedule, grad);
      adam.step(net.parameters(), grad);
    }
    const double mean = loss_sum / per_epoch;
    if (!std::isfinite(mean)) throw DivergenceError("train_expert: loss became non-finite", epoch);
    history.push_back(mean);
    if (options.on_epoch) options.on_epoch(epoch, mean);
  }
  return history;
}

}  // namespace chest
