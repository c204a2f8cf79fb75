#pragma once

#include "chest/experts.hpp"
#include "chest/numerics.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace chest {

/// Lightweight CNN noise predictor. Channel progression
/// 2 -> widths[0] -> widths[1] (= S_max) -> widths[2] -> widths[3] -> 2,
/// all 3x3 kernels with zero padding. ReLU follows the first, third and
/// fourth convolutions; the second one feeds the time-conditioned affine
/// modulation directly.
struct DenoiserConfig {
  int nr = 4;
  int nt = 16;
  int time_dim = 32;                         // S_init
  std::array<int, 4> widths{16, 32, 16, 16};  // widths[1] is S_max

  [[nodiscard]] int max_width() const noexcept { return widths[1]; }
  [[nodiscard]] int positions() const noexcept { return nr * nt; }
  void validate() const;
};

/// One named tensor inside the flat parameter vector. Convolution kernels are
/// stored [out][ky][kx][in]; the dense layer is [out][in].
struct ParameterBlock {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Activations recorded by a forward pass for the matching backward pass.
/// Buffers are kept between passes, so reusing one tape across batches of the
/// same size avoids reallocation.
class ForwardTape {
 public:
  [[nodiscard]] bool recorded() const noexcept { return batch_ > 0; }
  void clear() noexcept { batch_ = 0; }

 private:
  friend class DenoiserNetwork;
  Eigen::Index batch_ = 0;
  Eigen::MatrixXd cols1_, pre1_, cols2_, features_, embed_, modulation_, modulated_, cols3_, pre3_,
      cols4_, pre4_, cols5_;
  // backward scratch
  mutable Eigen::MatrixXd dcols_, grad_a_, grad_b_, dweights_;
  mutable Eigen::VectorXd dbias_;
};

class DenoiserNetwork {
 public:
  /// All weights start at zero; call initialize() for a trainable net.
  explicit DenoiserNetwork(DenoiserConfig config);

  /// Glorot-uniform weights, zero biases.
  void initialize(RngStream& rng);

  [[nodiscard]] const DenoiserConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::size_t parameter_count() const noexcept { return params_.size(); }
  [[nodiscard]] const std::vector<ParameterBlock>& layout() const noexcept { return layout_; }
  [[nodiscard]] std::span<double> parameters() noexcept { return params_; }
  [[nodiscard]] std::span<const double> parameters() const noexcept { return params_; }

  /// Batched forward pass. `input` is 2 x (B * nr * nt): column b*nr*nt + i*nt + j
  /// holds (re, im) of entry (i, j) of sample b. Returns the predicted noise in
  /// the same layout. Records activations into `tape` when given.
  [[nodiscard]] Eigen::MatrixXd forward(const Eigen::MatrixXd& input, std::span<const int> steps,
                                        ForwardTape* tape = nullptr) const;

  /// Reverse-mode pass: accumulates dL/dtheta into `grad_params` (same layout
  /// as parameters()) given dL/doutput. Optionally writes dL/dinput.
  void backward(const ForwardTape& tape, const Eigen::MatrixXd& grad_output,
                std::span<double> grad_params, Eigen::MatrixXd* grad_input = nullptr) const;

  /// Single complex sample convenience wrapper around forward().
  [[nodiscard]] ComplexMatrix predict(const ComplexMatrix& noisy, int t) const;

 private:
  DenoiserConfig config_;
  std::vector<ParameterBlock> layout_;
  // fixed alignment keeps Eigen's vectorized paths, and so the rounding,
  // identical between copies
  std::vector<double, Eigen::aligned_allocator<double>> params_;
};

/// (C x (B*HW)) features with per-channel affine (1 + scale) * x + shift,
/// identical across spatial positions.
Eigen::MatrixXd film_modulate(const Eigen::MatrixXd& features, const RealVector& scale,
                              const RealVector& shift);

/// Complex nr x nt matrix <-> 2 x (nr*nt) real channel block.
Eigen::MatrixXd to_channels(const ComplexMatrix& h);
ComplexMatrix from_channels(const Eigen::MatrixXd& x, int nr, int nt, Eigen::Index sample = 0);

/// ScorePrior backed by a trained network.
class DenoiserPrior final : public ScorePrior {
 public:
  DenoiserPrior(std::shared_ptr<const DenoiserNetwork> net, NoiseSchedule schedule,
                std::string id);

  [[nodiscard]] ComplexMatrix predict_epsilon(const ComplexMatrix& noisy, int t) const override;
  [[nodiscard]] const std::string& id() const noexcept override { return id_; }
  [[nodiscard]] int nr() const noexcept override { return net_->config().nr; }
  [[nodiscard]] int nt() const noexcept override { return net_->config().nt; }
  [[nodiscard]] const NoiseSchedule& schedule() const noexcept override { return schedule_; }
  [[nodiscard]] const DenoiserNetwork& network() const noexcept { return *net_; }

 private:
  std::shared_ptr<const DenoiserNetwork> net_;
  NoiseSchedule schedule_;
  std::string id_;
};

}  // namespace chest
